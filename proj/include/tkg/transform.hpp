#pragma once
// Predicate-level transformations of a temporal knowledge graph: timestamping,
// parameterized and CPD-driven splitting, merging, and the random-split
// baseline. Every transformation returns the new graph together with the
// lineage of its predicates.

#include "tkg/core.hpp"
#include "tkg/cpd.hpp"
#include "tkg/parallel.hpp"
#include "tkg/proximity.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <tuple>

namespace tkg {

struct LineageEntry {
    PredicateId source = 0; // index into PredicateLineage::source_labels
    TimeId begin = 0;
    TimeId end = 0;
    std::optional<TimeId> stamp; // set for timestamped predicates

    friend bool operator==(const LineageEntry&, const LineageEntry&) = default;
};

// l_p / l_t and validity intervals for every predicate id of a derived graph.
struct PredicateLineage {
    std::vector<std::string> source_labels;
    std::vector<LineageEntry> entries;

    static PredicateLineage identity(const TemporalGraph& g) {
        PredicateLineage lin;
        lin.source_labels = g.predicate_labels();
        const TimeId last = g.time_count() == 0 ? 0 : static_cast<TimeId>(g.time_count() - 1);
        for (PredicateId p = 0; p < g.predicate_table_size(); ++p) lin.entries.push_back({p, 0, last, std::nullopt});
        return lin;
    }

    PredicateId source(PredicateId p) const { return entries.at(p).source; }
    std::optional<TimeId> stamp(PredicateId p) const { return entries.at(p).stamp; }
    std::pair<TimeId, TimeId> interval(PredicateId p) const { return {entries.at(p).begin, entries.at(p).end}; }
    const std::string& source_label(PredicateId p) const { return source_labels.at(source(p)); }

    PredicateLineage compacted(const std::vector<PredicateId>& old_to_new) const {
        PredicateLineage out;
        out.source_labels = source_labels;
        std::size_t n = 0;
        for (auto v : old_to_new)
            if (v != npos_id) n = std::max<std::size_t>(n, v + 1);
        out.entries.resize(n);
        for (PredicateId p = 0; p < old_to_new.size(); ++p)
            if (old_to_new[p] != npos_id) out.entries[old_to_new[p]] = entries.at(p);
        return out;
    }
};

enum class TransformMethod { none, timestamp, split_time, split_count, split_cpd, merge, random_split };

inline std::string_view to_string(TransformMethod m) {
    switch (m) {
    case TransformMethod::none: return "none";
    case TransformMethod::timestamp: return "timestamp";
    case TransformMethod::split_time: return "split_time";
    case TransformMethod::split_count: return "split_count";
    case TransformMethod::split_cpd: return "split_cpd";
    case TransformMethod::merge: return "merge";
    case TransformMethod::random_split: return "random_split";
    }
    return "?";
}

inline std::optional<TransformMethod> parse_transform_method(std::string_view s) {
    for (auto m : {TransformMethod::none, TransformMethod::timestamp, TransformMethod::split_time,
                   TransformMethod::split_count, TransformMethod::split_cpd, TransformMethod::merge,
                   TransformMethod::random_split})
        if (s == to_string(m)) return m;
    if (s == "vanilla") return TransformMethod::none;
    if (s == "random") return TransformMethod::random_split;
    return std::nullopt;
}

struct TransformReport {
    TransformMethod method = TransformMethod::none;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::size_t predicates_before = 0;
    std::size_t predicates_after = 0;
    std::size_t facts_before = 0;
    std::size_t facts_after = 0;
    std::vector<std::string> trace; // split points or merge steps, one per entry
    std::vector<std::string> warnings;

    void write(std::ostream& out) const {
        out << "method = " << to_string(method) << '\n';
        for (const auto& [k, v] : parameters) out << "param." << k << " = " << v << '\n';
        out << "predicates_before = " << predicates_before << '\n'
            << "predicates_after = " << predicates_after << '\n'
            << "facts_before = " << facts_before << '\n'
            << "facts_after = " << facts_after << '\n';
        for (const auto& w : warnings) out << "warning = " << w << '\n';
        for (const auto& t : trace) out << "trace = " << t << '\n';
    }
};

struct TransformResult {
    TemporalGraph graph;
    PredicateLineage lineage;
    TransformReport report;
};

namespace detail {

inline std::string interval_label(const TemporalGraph& g, TimeId b, TimeId e) {
    return "[" + g.time_label(b) + "," + g.time_label(e) + "]";
}

// Mutable working copy used while a transformation runs.
class Workspace {
public:
    Workspace(const TemporalGraph& g, const PredicateLineage& lineage)
        : base_(g), labels_(g.predicate_labels()), active_(g.active_mask()), lineage_(lineage),
          facts_(g.facts().begin(), g.facts().end()), by_pred_(labels_.size()) {
        if (lineage_.entries.size() != labels_.size())
            throw DataError("lineage does not cover the graph's predicate table");
        for (std::size_t i = 0; i < facts_.size(); ++i) by_pred_[facts_[i].p].push_back(i);
        active_count_ = g.predicate_count();
        split_counter_.assign(lineage_.source_labels.size(), 0);
    }

    std::size_t predicate_count() const noexcept { return active_count_; }
    bool is_active(PredicateId p) const noexcept { return p < active_.size() && active_[p]; }
    std::size_t fact_count(PredicateId p) const { return by_pred_.at(p).size(); }
    const std::vector<std::size_t>& facts_of(PredicateId p) const { return by_pred_.at(p); }
    const Fact& fact(std::size_t i) const { return facts_[i]; }
    const LineageEntry& lineage(PredicateId p) const { return lineage_.entries.at(p); }
    const TemporalGraph& base() const noexcept { return base_; }
    const std::string& source_label(PredicateId source) const { return lineage_.source_labels.at(source); }

    std::vector<PredicateId> active_predicates() const {
        std::vector<PredicateId> out;
        for (PredicateId p = 0; p < active_.size(); ++p)
            if (active_[p]) out.push_back(p);
        return out;
    }

    // (min begin, max end) over the predicate's facts.
    std::pair<TimeId, TimeId> span(PredicateId p) const {
        const auto& idx = by_pred_.at(p);
        if (idx.empty()) throw DataError("predicate has no facts");
        TimeId lo = std::numeric_limits<TimeId>::max(), hi = 0;
        for (auto i : idx) {
            lo = std::min(lo, facts_[i].b);
            hi = std::max(hi, facts_[i].e);
        }
        return {lo, hi};
    }

    PredicateId add_predicate(std::string label, LineageEntry entry) {
        auto id = static_cast<PredicateId>(labels_.size());
        labels_.push_back(std::move(label));
        active_.push_back(true);
        lineage_.entries.push_back(entry);
        by_pred_.emplace_back();
        ++active_count_;
        return id;
    }

    void retire(PredicateId p) {
        if (!active_.at(p)) return;
        active_[p] = false;
        --active_count_;
    }

    // Replaces r by r1 (up to t) and r2 (from t). Spanning facts are cut in two.
    std::pair<PredicateId, PredicateId> split(PredicateId r, TimeId t) {
        if (!is_active(r)) throw DataError("split: predicate " + labels_.at(r) + " is not active");
        auto [lo, hi] = span(r);
        if (t < lo || t > hi)
            throw DataError("split: timestamp " + base_.time_label(t) + " outside the span of " + labels_.at(r));
        const LineageEntry src = lineage_.entries[r];
        const std::string& src_label = lineage_.source_labels.at(src.source);
        auto& n = split_counter_.at(src.source);
        const PredicateId r1 =
            add_predicate(src_label + "#" + std::to_string(++n) + detail::interval_label(base_, src.begin, t),
                          {src.source, src.begin, t, std::nullopt});
        const PredicateId r2 =
            add_predicate(src_label + "#" + std::to_string(++n) + detail::interval_label(base_, t, src.end),
                          {src.source, t, src.end, std::nullopt});
        std::vector<std::size_t> moved = std::move(by_pred_[r]);
        by_pred_[r].clear();
        for (auto i : moved) {
            Fact& f = facts_[i];
            if (f.b <= t && t <= f.e) {
                Fact right = f;
                right.p = r2;
                right.b = t;
                f.p = r1;
                f.e = t;
                by_pred_[r1].push_back(i);
                by_pred_[r2].push_back(facts_.size());
                facts_.push_back(right);
            } else if (f.e <= t) {
                f.p = r1;
                by_pred_[r1].push_back(i);
            } else {
                f.p = r2;
                by_pred_[r2].push_back(i);
            }
        }
        retire(r);
        return {r1, r2};
    }

    // Moves every fact of `from` to `to`.
    void relabel(PredicateId from, PredicateId to) {
        for (auto i : by_pred_.at(from)) facts_[i].p = to;
        auto& dst = by_pred_.at(to);
        dst.insert(dst.end(), by_pred_[from].begin(), by_pred_[from].end());
        by_pred_[from].clear();
        retire(from);
    }

    TemporalGraph graph() const {
        return TemporalGraph(base_.entities(), base_.times(), labels_, facts_, active_);
    }

    PredicateLineage lineage_table() const { return lineage_; }

    TransformResult finish(TransformReport report, bool compact) const {
        TemporalGraph g = graph();
        PredicateLineage lin = lineage_;
        if (compact) {
            std::vector<PredicateId> remap;
            g = g.compacted(&remap);
            lin = lin.compacted(remap);
        }
        report.predicates_before = base_.predicate_count();
        report.facts_before = base_.size();
        report.predicates_after = g.predicate_count();
        report.facts_after = g.size();
        return {std::move(g), std::move(lin), std::move(report)};
    }

private:
    const TemporalGraph& base_;
    std::vector<std::string> labels_;
    std::vector<bool> active_;
    std::size_t active_count_ = 0;
    PredicateLineage lineage_;
    std::vector<Fact> facts_;
    std::vector<std::vector<std::size_t>> by_pred_;
    std::vector<std::size_t> split_counter_;
};

inline std::string format_number(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

} // namespace detail

// One fact per covered timestamp, with a predicate per observed
// (predicate, timestamp) combination.
inline TransformResult timestamp(const TemporalGraph& g, const PredicateLineage& lineage) {
    if (lineage.entries.size() != g.predicate_table_size())
        throw DataError("lineage does not cover the graph's predicate table");
    std::vector<std::string> labels = g.predicate_labels();
    std::vector<bool> active(labels.size(), false);
    PredicateLineage out_lin;
    out_lin.source_labels = lineage.source_labels;
    out_lin.entries = lineage.entries;
    std::map<std::pair<PredicateId, TimeId>, PredicateId> derived;
    std::vector<Fact> facts;
    for (const auto& f : g.facts()) {
        for (TimeId t = f.b; t <= f.e; ++t) {
            auto [it, inserted] = derived.try_emplace({f.p, t}, static_cast<PredicateId>(labels.size()));
            if (inserted) {
                labels.push_back(g.predicate_label(f.p) + "@" + g.time_label(t));
                active.push_back(true);
                out_lin.entries.push_back({lineage.entries[f.p].source, t, t, t});
            }
            Fact nf = f;
            nf.p = it->second;
            nf.b = nf.e = t;
            facts.push_back(nf);
        }
    }
    TemporalGraph raw(g.entities(), g.times(), std::move(labels), std::move(facts), std::move(active));
    std::vector<PredicateId> remap;
    TransformResult res;
    res.graph = raw.compacted(&remap);
    res.lineage = out_lin.compacted(remap);
    res.report.method = TransformMethod::timestamp;
    res.report.predicates_before = g.predicate_count();
    res.report.facts_before = g.size();
    res.report.predicates_after = res.graph.predicate_count();
    res.report.facts_after = res.graph.size();
    return res;
}

inline TransformResult timestamp(const TemporalGraph& g) { return timestamp(g, PredicateLineage::identity(g)); }

// Single split of predicate r at t. Predicate ids of the input stay valid in
// the output (r is retired, r1 and r2 are appended), so calls can be chained.
inline std::pair<TemporalGraph, PredicateLineage> split_once(const TemporalGraph& g, PredicateId r, TimeId t,
                                                             const PredicateLineage& lineage) {
    detail::Workspace ws(g, lineage);
    ws.split(r, t);
    return {ws.graph(), ws.lineage_table()};
}

enum class SplitCriterion { time, count };

namespace detail {

// Split timestamp chosen by the criterion, or nullopt if r cannot be split.
inline std::optional<TimeId> choose_split_time(const Workspace& ws, PredicateId r, SplitCriterion c) {
    const auto& idx = ws.facts_of(r);
    if (idx.empty()) return std::nullopt;
    if (c == SplitCriterion::time) {
        auto [lo, hi] = ws.span(r);
        if (lo >= hi) return std::nullopt;
        return static_cast<TimeId>((static_cast<std::uint64_t>(lo) + hi) / 2);
    }
    const std::size_t l = ws.base().time_count();
    std::vector<std::size_t> ends(l, 0), begins(l, 0);
    for (auto i : idx) {
        ++ends[ws.fact(i).e];
        ++begins[ws.fact(i).b];
    }
    std::vector<std::size_t> ge(l + 1, 0); // ge[t] = #facts with b >= t
    for (std::size_t t = l; t-- > 0;) ge[t] = ge[t + 1] + begins[t];
    std::size_t le = 0;
    std::optional<TimeId> best;
    std::size_t best_diff = 0;
    for (std::size_t t = 0; t < l; ++t) {
        le += ends[t];
        if (le == 0 || ge[t] == 0) continue;
        std::size_t diff = le > ge[t] ? le - ge[t] : ge[t] - le;
        if (!best || diff < best_diff) {
            best = static_cast<TimeId>(t);
            best_diff = diff;
        }
    }
    return best;
}

} // namespace detail

// Repeatedly splits the most frequent splittable predicate until the
// predicate count reaches grow * |P|.
inline TransformResult split_parameterized(const TemporalGraph& g, SplitCriterion criterion, double grow,
                                           const PredicateLineage& lineage) {
    if (!(grow > 1.0)) throw ConfigError("split: grow must be > 1");
    detail::Workspace ws(g, lineage);
    TransformReport rep;
    rep.method = criterion == SplitCriterion::time ? TransformMethod::split_time : TransformMethod::split_count;
    rep.parameters = {{"grow", detail::format_number(grow)}};
    const double target = grow * static_cast<double>(g.predicate_count());

    // Max-heap on (count, -id); entries are revalidated on pop.
    using Entry = std::pair<std::size_t, std::int64_t>;
    std::priority_queue<Entry> heap;
    for (auto p : ws.active_predicates()) heap.push({ws.fact_count(p), -static_cast<std::int64_t>(p)});

    while (static_cast<double>(ws.predicate_count()) < target) {
        if (heap.empty()) {
            rep.warnings.push_back("no splittable predicate left at " + std::to_string(ws.predicate_count()) +
                                   " predicates");
            break;
        }
        auto [count, neg] = heap.top();
        heap.pop();
        auto r = static_cast<PredicateId>(-neg);
        if (!ws.is_active(r) || ws.fact_count(r) != count) continue;
        auto t = detail::choose_split_time(ws, r, criterion);
        if (!t) continue; // unsplittable now and forever: its facts never change
        std::string label = g.time_label(*t);
        auto [r1, r2] = ws.split(r, *t);
        rep.trace.push_back("split " + std::to_string(r) + " at " + label + " -> " + std::to_string(r1) + "," +
                            std::to_string(r2));
        heap.push({ws.fact_count(r1), -static_cast<std::int64_t>(r1)});
        heap.push({ws.fact_count(r2), -static_cast<std::int64_t>(r2)});
    }
    return ws.finish(std::move(rep), true);
}

inline TransformResult split_parameterized(const TemporalGraph& g, SplitCriterion criterion, double grow) {
    return split_parameterized(g, criterion, grow, PredicateLineage::identity(g));
}

struct CpdSplitOptions {
    ProximityMeasure measure = ProximityMeasure::pref_attachment;
    cpd::CpdConfig cpd;
    NeighborhoodScope scope = NeighborhoodScope::predicate;
    std::size_t threads = 1;
};

// Change points of one predicate's normalized signature, as split timestamps
// strictly after the predicate's first timestamp and no later than its last.
inline std::vector<TimeId> cpd_split_points(const TemporalGraph& g_r, const CpdSplitOptions& opts,
                                            std::span<const NeighborIndex> context = {}) {
    if (g_r.empty()) return {};
    auto sig = calc_signatures(g_r, proximity_fn(opts.measure), context);
    auto signal = cpd::normalize(sig);
    auto seg = cpd::bottom_up(signal, opts.cpd);
    TimeId lo = std::numeric_limits<TimeId>::max(), hi = 0;
    for (const auto& f : g_r.facts()) {
        lo = std::min(lo, f.b);
        hi = std::max(hi, f.e);
    }
    std::vector<TimeId> points;
    for (auto k : seg.breakpoints) {
        if (k >= signal.size()) continue;
        auto t = static_cast<TimeId>(k);
        if (t > lo && t <= hi) points.push_back(t);
    }
    return points;
}

inline TransformResult split_cpd(const TemporalGraph& g, const CpdSplitOptions& opts,
                                 const PredicateLineage& lineage) {
    opts.cpd.validate();
    const auto preds = g.active_predicates();
    std::vector<NeighborIndex> context;
    if (opts.scope == NeighborhoodScope::whole_graph) context = neighbor_slices(g);
    std::vector<std::vector<TimeId>> points(preds.size());
    parallel_for(preds.size(), opts.threads, [&](std::size_t i) {
        points[i] = cpd_split_points(restrict_predicate(g, preds[i]), opts, context);
    });

    detail::Workspace ws(g, lineage);
    TransformReport rep;
    rep.method = TransformMethod::split_cpd;
    rep.parameters = {{"score", std::string(to_string(opts.measure))},
                      {"epsilon", detail::format_number(opts.cpd.epsilon)},
                      {"min_size", std::to_string(opts.cpd.min_size)},
                      {"jump", std::to_string(opts.cpd.jump)},
                      {"scope", opts.scope == NeighborhoodScope::predicate ? "predicate" : "whole_graph"}};
    for (std::size_t i = 0; i < preds.size(); ++i) {
        PredicateId current = preds[i];
        std::string line = g.predicate_label(preds[i]) + ":";
        for (auto t : points[i]) {
            current = ws.split(current, t).second; // later points fall in the right part
            line += " " + g.time_label(t);
        }
        if (!points[i].empty()) rep.trace.push_back(line);
    }
    return ws.finish(std::move(rep), true);
}

inline TransformResult split_cpd(const TemporalGraph& g, const CpdSplitOptions& opts) {
    return split_cpd(g, opts, PredicateLineage::identity(g));
}

// Timestamps the graph, then merges the least frequent pair of temporally
// adjacent predicates of the same source until |P| <= |P_timestamped| / shrink.
// shrink = infinity merges until no candidates remain.
inline TransformResult merge(const TemporalGraph& g, double shrink, const PredicateLineage& lineage) {
    if (!(shrink > 1.0)) throw ConfigError("merge: shrink must be > 1");
    TransformResult ts = timestamp(g, lineage);
    detail::Workspace ws(ts.graph, ts.lineage);
    TransformReport rep;
    rep.method = TransformMethod::merge;
    rep.parameters = {{"shrink", detail::format_number(shrink)}};
    const double target = static_cast<double>(ts.graph.predicate_count()) / shrink;

    // Per source, predicates ordered by stamp form a doubly linked chain.
    struct Node {
        PredicateId pred;
        PredicateId source;
        TimeId lo, hi;
        std::size_t prev, next;
        std::uint32_t version = 0;
        bool alive = true;
    };
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<Node> nodes;
    {
        std::vector<PredicateId> order = ws.active_predicates();
        std::sort(order.begin(), order.end(), [&](PredicateId a, PredicateId b) {
            const auto &ea = ws.lineage(a), &eb = ws.lineage(b);
            return std::tie(ea.source, ea.begin) < std::tie(eb.source, eb.begin);
        });
        for (auto p : order) {
            const auto& e = ws.lineage(p);
            std::size_t prev = (!nodes.empty() && nodes.back().source == e.source) ? nodes.size() - 1 : none;
            if (prev != none) nodes[prev].next = nodes.size();
            nodes.push_back({p, e.source, e.begin, e.end, prev, none});
        }
    }

    // Min-heap on (union size, stamp, source, left node, versions).
    using Candidate = std::tuple<std::size_t, TimeId, PredicateId, std::size_t, std::uint32_t, std::uint32_t>;
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
    auto push = [&](std::size_t a) {
        if (a == none || nodes[a].next == none) return;
        const Node &na = nodes[a], &nb = nodes[na.next];
        heap.push({ws.fact_count(na.pred) + ws.fact_count(nb.pred), na.lo, na.source, a, na.version, nb.version});
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) push(i);

    while (static_cast<double>(ws.predicate_count()) > target) {
        if (heap.empty()) {
            if (std::isfinite(shrink))
                rep.warnings.push_back("no merge candidates left at " + std::to_string(ws.predicate_count()) +
                                       " predicates");
            break;
        }
        auto [cost, lo, source, a, va, vb] = heap.top();
        heap.pop();
        Node& na = nodes[a];
        if (!na.alive || na.version != va || na.next == none || nodes[na.next].version != vb) continue;
        const std::size_t b = na.next;
        Node& nb = nodes[b];
        const PredicateId merged = ws.add_predicate(
            ws.source_label(source) + "~" + detail::interval_label(ts.graph, na.lo, nb.hi),
            {source, na.lo, nb.hi, std::nullopt});
        ws.relabel(na.pred, merged);
        ws.relabel(nb.pred, merged);
        rep.trace.push_back("merge " + std::to_string(na.pred) + "+" +
                            std::to_string(nb.pred) + " -> " + std::to_string(merged) + " (" + std::to_string(cost) +
                            " facts)");
        na.pred = merged;
        na.hi = nb.hi;
        ++na.version;
        nb.alive = false;
        ++nb.version;
        na.next = nb.next;
        if (nb.next != none) nodes[nb.next].prev = a;
        push(na.prev);
        push(a);
    }
    TransformResult res = ws.finish(std::move(rep), true);
    // Report relative to the untransformed input.
    res.report.predicates_before = g.predicate_count();
    res.report.facts_before = g.size();
    return res;
}

inline TransformResult merge(const TemporalGraph& g, double shrink) {
    return merge(g, shrink, PredicateLineage::identity(g));
}

// Uniformly random predicate and split timestamp until |P| >= grow * |P|.
inline TransformResult random_split(const TemporalGraph& g, double grow, std::uint64_t seed,
                                    const PredicateLineage& lineage) {
    if (!(grow > 1.0)) throw ConfigError("random_split: grow must be > 1");
    detail::Workspace ws(g, lineage);
    TransformReport rep;
    rep.method = TransformMethod::random_split;
    rep.parameters = {{"grow", detail::format_number(grow)}, {"seed", std::to_string(seed)}};
    const double target = grow * static_cast<double>(g.predicate_count());
    std::mt19937_64 rng(seed);
    std::vector<PredicateId> pool;
    for (auto p : ws.active_predicates())
        if (ws.fact_count(p) > 0) pool.push_back(p);
    std::size_t failures = 0;
    while (static_cast<double>(ws.predicate_count()) < target) {
        if (pool.empty()) {
            rep.warnings.push_back("no predicates left to split");
            break;
        }
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t slot = pick(rng);
        const PredicateId r = pool[slot];
        auto [lo, hi] = ws.span(r);
        if (lo == hi) {
            if (++failures >= 100) {
                rep.warnings.push_back("stopped after 100 consecutive single-timestamp draws at " +
                                       std::to_string(ws.predicate_count()) + " predicates");
                break;
            }
            continue;
        }
        failures = 0;
        std::uniform_int_distribution<TimeId> when(lo, hi);
        const TimeId t = when(rng);
        auto [r1, r2] = ws.split(r, t);
        rep.trace.push_back("split " + std::to_string(r) + " at " + g.time_label(t));
        pool[slot] = r1;
        pool.push_back(r2);
    }
    return ws.finish(std::move(rep), true);
}

inline TransformResult random_split(const TemporalGraph& g, double grow, std::uint64_t seed) {
    return random_split(g, grow, seed, PredicateLineage::identity(g));
}

// Sidecar: derived<TAB>source<TAB>begin<TAB>end[<TAB>stamp], by label.
inline void write_lineage(std::ostream& out, const TemporalGraph& g, const PredicateLineage& lin) {
    for (auto p : g.active_predicates()) {
        const auto& e = lin.entries.at(p);
        out << g.predicate_label(p) << '\t' << lin.source_labels.at(e.source) << '\t' << g.time_label(e.begin) << '\t'
            << g.time_label(e.end);
        if (e.stamp) out << '\t' << g.time_label(*e.stamp);
        out << '\n';
    }
}

// Reads a sidecar for a graph whose predicate labels are the derived labels.
inline PredicateLineage read_lineage(std::istream& in, const TemporalGraph& g) {
    PredicateLineage lin;
    lin.entries.resize(g.predicate_table_size());
    std::vector<bool> seen(g.predicate_table_size(), false);
    std::map<std::string, PredicateId> pred_index, source_index;
    for (PredicateId p = 0; p < g.predicate_table_size(); ++p) pred_index.emplace(g.predicate_label(p), p);
    std::map<std::string, TimeId> time_index;
    for (TimeId t = 0; t < g.time_count(); ++t) time_index.emplace(g.time_label(t), t);
    auto time_of = [&](const std::string& label) {
        auto it = time_index.find(label);
        if (it == time_index.end()) throw DataError("lineage: unknown timestamp " + label);
        return it->second;
    };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) f.push_back(field);
        if (f.size() != 4 && f.size() != 5)
            throw DataError("lineage line " + std::to_string(lineno) + ": expected 4 or 5 fields");
        auto it = pred_index.find(f[0]);
        if (it == pred_index.end()) throw DataError("lineage: unknown predicate " + f[0]);
        auto [sit, inserted] = source_index.try_emplace(f[1], static_cast<PredicateId>(lin.source_labels.size()));
        if (inserted) lin.source_labels.push_back(f[1]);
        LineageEntry e{sit->second, time_of(f[2]), time_of(f[3]), std::nullopt};
        if (f.size() == 5) e.stamp = time_of(f[4]);
        lin.entries[it->second] = e;
        seen[it->second] = true;
    }
    for (auto p : g.active_predicates())
        if (!seen[p]) throw DataError("lineage: no entry for predicate " + g.predicate_label(p));
    return lin;
}

} // namespace tkg
