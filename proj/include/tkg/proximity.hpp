#pragma once
// Node-neighborhood proximity measures and per-predicate signature series.

#include "tkg/core.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <unordered_map>

namespace tkg {

// Undirected adjacency Γ(·) over a set of facts. Neighbor lists are sorted and unique.
class NeighborIndex {
public:
    NeighborIndex() = default;

    template <class FactRange>
    explicit NeighborIndex(const FactRange& facts) {
        for (const auto& f : facts) add_edge(f.s, f.o);
        finalize();
    }

    void add_edge(EntityId a, EntityId b) {
        adj_[a].push_back(b);
        adj_[b].push_back(a);
    }

    void finalize() {
        for (auto& [_, n] : adj_) {
            std::sort(n.begin(), n.end());
            n.erase(std::unique(n.begin(), n.end()), n.end());
        }
    }

    std::span<const EntityId> neighbors(EntityId e) const {
        auto it = adj_.find(e);
        if (it == adj_.end()) return {};
        return it->second;
    }

    std::size_t degree(EntityId e) const { return neighbors(e).size(); }
    std::size_t node_count() const noexcept { return adj_.size(); }

private:
    std::unordered_map<EntityId, std::vector<EntityId>> adj_;
};

namespace detail {

template <class F>
void for_each_common(std::span<const EntityId> a, std::span<const EntityId> b, F&& f) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j)
            ++i;
        else if (*j < *i)
            ++j;
        else {
            f(*i);
            ++i;
            ++j;
        }
    }
}

} // namespace detail

inline double jaccard(EntityId s, EntityId o, const NeighborIndex& idx) {
    auto a = idx.neighbors(s);
    auto b = idx.neighbors(o);
    std::size_t common = 0;
    detail::for_each_common(a, b, [&](EntityId) { ++common; });
    std::size_t uni = a.size() + b.size() - common;
    return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

// Natural log; common neighbors of degree <= 1 contribute nothing.
inline double adamic_adar(EntityId s, EntityId o, const NeighborIndex& idx) {
    double sum = 0.0;
    detail::for_each_common(idx.neighbors(s), idx.neighbors(o), [&](EntityId z) {
        auto d = idx.degree(z);
        if (d > 1) sum += 1.0 / std::log(static_cast<double>(d));
    });
    return sum;
}

inline double pref_attachment(EntityId s, EntityId o, const NeighborIndex& idx) {
    return static_cast<double>(idx.degree(s)) * static_cast<double>(idx.degree(o));
}

enum class ProximityMeasure { jaccard, adamic_adar, pref_attachment };

using ProximityFn = std::function<double(EntityId, EntityId, const NeighborIndex&)>;

inline ProximityFn proximity_fn(ProximityMeasure m) {
    switch (m) {
    case ProximityMeasure::jaccard: return jaccard;
    case ProximityMeasure::adamic_adar: return adamic_adar;
    case ProximityMeasure::pref_attachment: return pref_attachment;
    }
    return pref_attachment;
}

inline std::string_view to_string(ProximityMeasure m) {
    switch (m) {
    case ProximityMeasure::jaccard: return "jaccard";
    case ProximityMeasure::adamic_adar: return "adar";
    case ProximityMeasure::pref_attachment: return "pref";
    }
    return "?";
}

inline std::optional<ProximityMeasure> parse_proximity(std::string_view s) {
    if (s == "jaccard") return ProximityMeasure::jaccard;
    if (s == "adar" || s == "adamic_adar") return ProximityMeasure::adamic_adar;
    if (s == "pref" || s == "pref_attachment") return ProximityMeasure::pref_attachment;
    return std::nullopt;
}

using EntityPair = std::pair<EntityId, EntityId>;

inline EntityPair canonical_pair(EntityId a, EntityId b) { return a <= b ? EntityPair{a, b} : EntityPair{b, a}; }

// Time series of proximity-score vectors for one predicate: one row per
// timestamp, one column per canonical entity pair connected by the predicate.
struct SignatureSeries {
    PredicateId predicate = 0;
    std::vector<EntityPair> pairs; // column -> pair, sorted
    std::size_t rows = 0;
    std::vector<double> matrix; // rows x pairs.size(), row-major

    std::size_t cols() const noexcept { return pairs.size(); }
    double at(std::size_t t, std::size_t c) const { return matrix[t * cols() + c]; }
    std::span<const double> row(std::size_t t) const { return {matrix.data() + t * cols(), cols()}; }

    std::size_t column_of(EntityId a, EntityId b) const {
        auto key = canonical_pair(a, b);
        auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
        if (it == pairs.end() || *it != key) return static_cast<std::size_t>(-1);
        return static_cast<std::size_t>(it - pairs.begin());
    }
};

// Where neighborhoods for the signature of r are taken from.
enum class NeighborhoodScope { predicate, whole_graph };

// One undirected neighborhood index per timestamp over the whole graph.
inline std::vector<NeighborIndex> neighbor_slices(const TemporalGraph& g) {
    std::vector<NeighborIndex> slices(g.time_count());
    for (const auto& f : g.facts())
        for (TimeId t = f.b; t <= f.e; ++t) slices[t].add_edge(f.s, f.o);
    for (auto& s : slices) s.finalize();
    return slices;
}

// Builds S_r from the facts of a single predicate. When `context` is given
// (one index per timestamp, see neighbor_slices), neighborhoods come from it
// instead of the predicate-restricted slice.
inline SignatureSeries calc_signatures(const TemporalGraph& g_r, const ProximityFn& score,
                                       std::span<const NeighborIndex> context = {}) {
    if (g_r.empty()) throw DataError("calc_signatures: predicate has no facts");
    SignatureSeries sig;
    sig.predicate = g_r.facts().front().p;
    for (const auto& f : g_r.facts()) {
        if (f.p != sig.predicate) throw DataError("calc_signatures: facts of more than one predicate");
        sig.pairs.push_back(canonical_pair(f.s, f.o));
    }
    std::sort(sig.pairs.begin(), sig.pairs.end());
    sig.pairs.erase(std::unique(sig.pairs.begin(), sig.pairs.end()), sig.pairs.end());
    std::vector<std::size_t> column(g_r.size());
    for (std::size_t i = 0; i < g_r.size(); ++i)
        column[i] = sig.column_of(g_r.facts()[i].s, g_r.facts()[i].o);

    sig.rows = g_r.time_count();
    if (!context.empty() && context.size() != sig.rows)
        throw DataError("calc_signatures: context has the wrong number of timestamps");
    sig.matrix.assign(sig.rows * sig.cols(), 0.0);
    std::vector<std::size_t> valid;
    for (TimeId t = 0; t < sig.rows; ++t) {
        valid.clear();
        for (std::size_t i = 0; i < g_r.size(); ++i)
            if (g_r.facts()[i].valid_at(t)) valid.push_back(i);
        if (valid.empty()) continue;
        NeighborIndex local;
        if (context.empty()) {
            for (auto i : valid) local.add_edge(g_r.facts()[i].s, g_r.facts()[i].o);
            local.finalize();
        }
        const NeighborIndex& idx = context.empty() ? local : context[t];
        for (auto i : valid) {
            const auto& f = g_r.facts()[i];
            sig.matrix[t * sig.cols() + column[i]] = score(f.s, f.o, idx);
        }
    }
    return sig;
}

// CSV dump: header of pair labels, one row per timestamp.
inline void write_signature_csv(std::ostream& out, const SignatureSeries& sig, const TemporalGraph& g) {
    out << "time";
    for (const auto& [a, b] : sig.pairs) out << ',' << g.entity_label(a) << '|' << g.entity_label(b);
    out << '\n';
    for (std::size_t t = 0; t < sig.rows; ++t) {
        out << g.time_label(static_cast<TimeId>(t));
        for (double v : sig.row(t)) out << ',' << v;
        out << '\n';
    }
}

} // namespace tkg
