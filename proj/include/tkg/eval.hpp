#pragma once
// Filtered entity ranking, MRR / hits@k, and lineage-filtered predicate prediction.

#include "tkg/embed.hpp"
#include "tkg/leakage.hpp"
#include "tkg/parallel.hpp"
#include "tkg/transform.hpp"

#include <cstdio>
#include <map>
#include <ostream>
#include <unordered_map>

namespace tkg {

enum class Side : std::uint8_t { subject, object };

inline std::string_view to_string(Side s) { return s == Side::subject ? "subject" : "object"; }

enum class TiePolicy { optimistic, pessimistic, mean };

inline std::string_view to_string(TiePolicy t) {
    switch (t) {
    case TiePolicy::optimistic: return "optimistic";
    case TiePolicy::pessimistic: return "pessimistic";
    case TiePolicy::mean: return "mean";
    }
    return "?";
}

inline std::optional<TiePolicy> parse_tie_policy(std::string_view s) {
    for (auto t : {TiePolicy::optimistic, TiePolicy::pessimistic, TiePolicy::mean})
        if (s == to_string(t)) return t;
    return std::nullopt;
}

// Rank is integral except under TiePolicy::mean.
struct RankRecord {
    StaticTriple triple;
    Side side = Side::object;
    double rank = 1.0;

    friend bool operator==(const RankRecord&, const RankRecord&) = default;
};

inline double tie_rank(std::size_t better, std::size_t equal, TiePolicy policy) {
    switch (policy) {
    case TiePolicy::optimistic: return 1.0 + static_cast<double>(better);
    case TiePolicy::pessimistic: return 1.0 + static_cast<double>(better + equal);
    case TiePolicy::mean: return 1.0 + static_cast<double>(better) + 0.5 * static_cast<double>(equal);
    }
    return 1.0 + static_cast<double>(better);
}

// (s,p) -> objects and (p,o) -> subjects of a triple set.
class FilterIndex {
public:
    FilterIndex() = default;

    template <class Range>
    explicit FilterIndex(const Range& known) {
        for (const StaticTriple& t : known) {
            objects_[key(t.s, t.p)].push_back(t.o);
            subjects_[key(t.o, t.p)].push_back(t.s);
        }
    }

    std::span<const EntityId> objects(EntityId s, PredicateId p) const { return find(objects_, key(s, p)); }
    std::span<const EntityId> subjects(PredicateId p, EntityId o) const { return find(subjects_, key(o, p)); }

private:
    using Map = std::unordered_map<std::uint64_t, std::vector<EntityId>>;

    static std::uint64_t key(EntityId e, PredicateId p) { return (std::uint64_t{e} << 32) | p; }

    static std::span<const EntityId> find(const Map& m, std::uint64_t k) {
        auto it = m.find(k);
        if (it == m.end()) return {};
        return it->second;
    }

    Map objects_, subjects_;
};

struct RankOptions {
    TiePolicy ties = TiePolicy::optimistic;
    bool filtered = true;
    std::size_t threads = 1;
};

// Two records per test triple (subject side first). In the filtered setting a
// candidate e != target is skipped when the corrupted triple is in `known`.
inline std::vector<RankRecord> rank_queries(const EmbeddingModel& m, std::span<const StaticTriple> test,
                                            const FilterIndex& known, const RankOptions& opts = {}) {
    const std::size_t n = m.entity_count();
    for (const auto& t : test) check_ids(m, t);
    std::vector<RankRecord> out(2 * test.size());
    parallel_for(out.size(), opts.threads, [&](std::size_t q) {
        const StaticTriple& t = test[q / 2];
        const Side side = q % 2 == 0 ? Side::subject : Side::object;
        const EntityId target = side == Side::subject ? t.s : t.o;
        std::vector<char> skip(n, 0);
        if (opts.filtered) {
            auto drop = side == Side::subject ? known.subjects(t.p, t.o) : known.objects(t.s, t.p);
            for (auto e : drop) skip[e] = 1;
        }
        skip[target] = 1;
        const double target_score = score(m, t);
        std::size_t better = 0, equal = 0;
        StaticTriple c = t;
        for (EntityId e = 0; e < n; ++e) {
            if (skip[e]) continue;
            (side == Side::subject ? c.s : c.o) = e;
            const double s = score(m, c);
            if (s < target_score)
                ++better;
            else if (s == target_score)
                ++equal;
        }
        out[q] = {t, side, tie_rank(better, equal, opts.ties)};
    });
    return out;
}

inline std::vector<RankRecord> rank_queries(const EmbeddingModel& m, std::span<const StaticTriple> test,
                                            std::span<const StaticTriple> known, const RankOptions& opts = {}) {
    return rank_queries(m, test, FilterIndex(known), opts);
}

inline constexpr std::array<std::size_t, 3> default_hits_at{1, 3, 10};

struct MetricReport {
    double mrr = 0.0;
    std::map<std::size_t, double> hits;
    std::size_t query_count = 0;

    double hits_at(std::size_t k) const { return hits.at(k); }
};

inline MetricReport metrics(std::span<const RankRecord> records, std::span<const std::size_t> ks = default_hits_at) {
    if (records.empty()) throw DataError("metrics: no rank records");
    MetricReport r;
    r.query_count = records.size();
    for (auto k : ks) r.hits[k] = 0.0;
    for (const auto& rec : records) {
        r.mrr += 1.0 / rec.rank;
        for (auto& [k, h] : r.hits)
            if (rec.rank <= static_cast<double>(k)) h += 1.0;
    }
    const double n = static_cast<double>(records.size());
    r.mrr /= n;
    for (auto& [k, h] : r.hits) h /= n;
    return r;
}

inline void write_metrics_table(std::ostream& out, const MetricReport& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-10s %10s\n", "metric", "value");
    out << buf;
    std::snprintf(buf, sizeof buf, "%-10s %10.4f\n", "MRR", r.mrr);
    out << buf;
    for (const auto& [k, h] : r.hits) {
        std::snprintf(buf, sizeof buf, "hits@%-5zu %10.4f\n", k, h);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-10s %10zu\n", "queries", r.query_count);
    out << buf;
}

inline void write_metrics_csv(std::ostream& out, const MetricReport& r) {
    out << "metric,value\n";
    out << "mrr," << r.mrr << '\n';
    for (const auto& [k, h] : r.hits) out << "hits@" << k << ',' << h << '\n';
    out << "queries," << r.query_count << '\n';
}

inline void write_ranks(std::ostream& out, std::span<const RankRecord> records) {
    out << "s\tp\to\tside\trank\n";
    for (const auto& r : records)
        out << r.triple.s << '\t' << r.triple.p << '\t' << r.triple.o << '\t' << to_string(r.side) << '\t' << r.rank
            << '\n';
}

// Scores (s, p', o) for every derived predicate, keeps the `top` best,
// drops those whose lineage interval misses [query.b, query.e] and returns
// the surviving source predicates, first occurrence wins.
inline std::vector<PredicateId> predict_predicates(const EmbeddingModel& m, const PredicateLineage& lineage,
                                                   const Quintuple& query, std::size_t top) {
    const std::size_t np = std::min(m.predicate_count(), lineage.entries.size());
    std::vector<std::pair<double, PredicateId>> scored;
    scored.reserve(np);
    for (PredicateId p = 0; p < np; ++p) scored.emplace_back(score(m, {query.s, p, query.o}), p);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    scored.resize(std::min(top, scored.size()));

    std::vector<PredicateId> out;
    for (const auto& [_, p] : scored) {
        auto [b, e] = lineage.interval(p);
        if (e < query.b || query.e < b) continue;
        PredicateId src = lineage.source(p);
        if (std::find(out.begin(), out.end(), src) == out.end()) out.push_back(src);
    }
    return out;
}

} // namespace tkg
