#pragma once
// Temporal knowledge graph data model: interned identifiers, quintuples,
// split membership and the subgraph selections used by every transformation.

#include "tkg/error.hpp"

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tkg {

using EntityId = std::uint32_t;
using PredicateId = std::uint32_t;
using TimeId = std::uint32_t;

inline constexpr std::uint32_t npos_id = static_cast<std::uint32_t>(-1);

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };

inline constexpr std::array<Split, 3> all_splits{Split::train, Split::valid, Split::test};

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    }
    return "?";
}

struct StaticTriple {
    EntityId s = 0;
    PredicateId p = 0;
    EntityId o = 0;

    friend auto operator<=>(const StaticTriple&, const StaticTriple&) = default;
};

struct Quadruple {
    EntityId s = 0;
    PredicateId p = 0;
    EntityId o = 0;
    TimeId h = 0;

    friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

struct Quintuple {
    EntityId s = 0;
    PredicateId p = 0;
    EntityId o = 0;
    TimeId b = 0;
    TimeId e = 0;

    bool valid_at(TimeId t) const noexcept { return b <= t && t <= e; }
    StaticTriple triple() const noexcept { return {s, p, o}; }

    friend auto operator<=>(const Quintuple&, const Quintuple&) = default;
};

// A quintuple tagged with the dataset split it came from.
struct Fact : Quintuple {
    Split split = Split::train;

    friend auto operator<=>(const Fact&, const Fact&) = default;
};

inline Quintuple to_valid_time(const Quadruple& q) noexcept { return {q.s, q.p, q.o, q.h, q.h}; }

struct TripleHash {
    std::size_t operator()(const StaticTriple& t) const noexcept {
        std::uint64_t x = (static_cast<std::uint64_t>(t.s) << 32) ^ t.o;
        x ^= static_cast<std::uint64_t>(t.p) * 0x9E3779B97F4A7C15ULL;
        // splitmix64 finalizer
        x ^= x >> 30;
        x *= 0xBF58476D1CE4E5B9ULL;
        x ^= x >> 27;
        x *= 0x94D049BB133111EBULL;
        x ^= x >> 31;
        return static_cast<std::size_t>(x);
    }
};

// Bijection between string labels and dense ids, in first-seen order.
class Interner {
public:
    std::uint32_t intern(std::string_view label) {
        auto it = index_.find(std::string(label));
        if (it != index_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(labels_.size());
        labels_.emplace_back(label);
        index_.emplace(labels_.back(), id);
        return id;
    }

    std::optional<std::uint32_t> find(std::string_view label) const {
        auto it = index_.find(std::string(label));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& label(std::uint32_t id) const { return labels_.at(id); }
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

enum class TimeGranularity { automatic, year, day, integer };

// Discrete, linearly ordered timestamp set. TimeId i is the i-th smallest value.
struct TimeAxis {
    TimeGranularity granularity = TimeGranularity::integer;
    std::vector<std::int64_t> values;
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return values.size(); }

    std::optional<TimeId> find(std::int64_t value) const {
        auto it = std::lower_bound(values.begin(), values.end(), value);
        if (it == values.end() || *it != value) return std::nullopt;
        return static_cast<TimeId>(it - values.begin());
    }

    static TimeAxis integers(std::size_t n) {
        TimeAxis axis;
        for (std::size_t i = 0; i < n; ++i) {
            axis.values.push_back(static_cast<std::int64_t>(i));
            axis.labels.push_back(std::to_string(i));
        }
        return axis;
    }
};

// Immutable temporal knowledge graph. Predicate ids index a label table that
// may contain retired predicates (e.g. the source of a split); only active
// predicates belong to the predicate set.
class TemporalGraph {
public:
    TemporalGraph() : TemporalGraph(std::make_shared<Interner>(), std::make_shared<TimeAxis>(), {}, {}) {}

    TemporalGraph(std::shared_ptr<const Interner> entities, std::shared_ptr<const TimeAxis> times,
                  std::vector<std::string> predicate_labels, std::vector<Fact> facts,
                  std::optional<std::vector<bool>> active = std::nullopt)
        : entities_(std::move(entities)), times_(std::move(times)),
          predicate_labels_(std::move(predicate_labels)), facts_(std::move(facts)),
          cache_(std::make_shared<IndexCache>()) {
        active_ = active ? std::move(*active) : std::vector<bool>(predicate_labels_.size(), true);
        if (active_.size() != predicate_labels_.size())
            throw DataError("predicate activity mask does not match label table");
        for (const auto& f : facts_) {
            if (f.s >= entities_->size() || f.o >= entities_->size())
                throw DataError("fact references an unknown entity");
            if (f.p >= predicate_labels_.size() || !active_[f.p])
                throw DataError("fact references an inactive or unknown predicate");
            if (f.e >= times_->size() || f.b > f.e)
                throw DataError("fact has an invalid temporal scope");
        }
        active_count_ = static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
    }

    std::span<const Fact> facts() const noexcept { return facts_; }
    std::size_t size() const noexcept { return facts_.size(); }
    bool empty() const noexcept { return facts_.empty(); }

    std::size_t entity_count() const noexcept { return entities_->size(); }
    std::size_t time_count() const noexcept { return times_->size(); }
    std::size_t predicate_count() const noexcept { return active_count_; }
    std::size_t predicate_table_size() const noexcept { return predicate_labels_.size(); }

    bool is_active(PredicateId p) const noexcept { return p < active_.size() && active_[p]; }
    const std::vector<bool>& active_mask() const noexcept { return active_; }

    std::vector<PredicateId> active_predicates() const {
        std::vector<PredicateId> out;
        out.reserve(active_count_);
        for (PredicateId p = 0; p < active_.size(); ++p)
            if (active_[p]) out.push_back(p);
        return out;
    }

    const std::string& entity_label(EntityId e) const { return entities_->label(e); }
    const std::string& predicate_label(PredicateId p) const { return predicate_labels_.at(p); }
    const std::string& time_label(TimeId t) const { return times_->labels.at(t); }

    const std::shared_ptr<const Interner>& entities() const noexcept { return entities_; }
    const std::shared_ptr<const TimeAxis>& times() const noexcept { return times_; }
    const std::vector<std::string>& predicate_labels() const noexcept { return predicate_labels_; }

    std::size_t count(Split s) const {
        return static_cast<std::size_t>(
            std::count_if(facts_.begin(), facts_.end(), [s](const Fact& f) { return f.split == s; }));
    }

    // Fact positions grouped by predicate; built on first use.
    std::span<const std::size_t> facts_of(PredicateId p) const {
        std::call_once(cache_->by_predicate_once, [this] {
            cache_->by_predicate.assign(predicate_labels_.size(), {});
            for (std::size_t i = 0; i < facts_.size(); ++i) cache_->by_predicate[facts_[i].p].push_back(i);
        });
        if (p >= cache_->by_predicate.size()) return {};
        return cache_->by_predicate[p];
    }

    // Same entities, timestamps and predicate table; different facts.
    TemporalGraph with_facts(std::vector<Fact> facts) const {
        return TemporalGraph(entities_, times_, predicate_labels_, std::move(facts), active_);
    }

    // Renumbers active predicates densely (in id order). `old_to_new` receives
    // the mapping, with npos_id for retired predicates.
    TemporalGraph compacted(std::vector<PredicateId>* old_to_new = nullptr) const {
        std::vector<PredicateId> remap(predicate_labels_.size(), npos_id);
        std::vector<std::string> labels;
        for (PredicateId p = 0; p < predicate_labels_.size(); ++p) {
            if (!active_[p]) continue;
            remap[p] = static_cast<PredicateId>(labels.size());
            labels.push_back(predicate_labels_[p]);
        }
        std::vector<Fact> facts = facts_;
        for (auto& f : facts) f.p = remap[f.p];
        if (old_to_new) *old_to_new = remap;
        return TemporalGraph(entities_, times_, std::move(labels), std::move(facts));
    }

private:
    struct IndexCache {
        std::once_flag by_predicate_once;
        std::vector<std::vector<std::size_t>> by_predicate;
    };

    std::shared_ptr<const Interner> entities_;
    std::shared_ptr<const TimeAxis> times_;
    std::vector<std::string> predicate_labels_;
    std::vector<bool> active_;
    std::size_t active_count_ = 0;
    std::vector<Fact> facts_;
    std::shared_ptr<IndexCache> cache_;
};

// T^{b<=t<=e}: facts valid at t.
inline TemporalGraph slice_at(const TemporalGraph& g, TimeId t) {
    std::vector<Fact> out;
    for (const auto& f : g.facts())
        if (f.valid_at(t)) out.push_back(f);
    return g.with_facts(std::move(out));
}

// T^{p=r}. The result's predicate set is {r}.
inline TemporalGraph restrict_predicate(const TemporalGraph& g, PredicateId r) {
    if (!g.is_active(r))
        throw DataError("restrict_predicate: predicate " + std::to_string(r) + " is not in the graph");
    std::vector<Fact> out;
    for (auto i : g.facts_of(r)) out.push_back(g.facts()[i]);
    std::vector<bool> active(g.predicate_table_size(), false);
    active[r] = true;
    return TemporalGraph(g.entities(), g.times(), g.predicate_labels(), std::move(out), std::move(active));
}

struct SplitTriples {
    std::vector<StaticTriple> train;
    std::vector<StaticTriple> valid;
    std::vector<StaticTriple> test;

    std::vector<StaticTriple>& operator[](Split s) {
        return s == Split::train ? train : (s == Split::valid ? valid : test);
    }
    const std::vector<StaticTriple>& operator[](Split s) const {
        return s == Split::train ? train : (s == Split::valid ? valid : test);
    }
};

// Discards temporal scopes. Duplicates are kept.
inline SplitTriples strip_temporal(const TemporalGraph& g) {
    SplitTriples out;
    for (const auto& f : g.facts()) out[f.split].push_back(f.triple());
    return out;
}

} // namespace tkg
