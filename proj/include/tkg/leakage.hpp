#pragma once
// Duplicate auditing and intra/inter-set filtering of stripped (atemporal) splits.

#include "tkg/core.hpp"

#include <cstdio>
#include <ostream>
#include <unordered_set>

namespace tkg {

using TripleSet = std::unordered_set<StaticTriple, TripleHash>;

struct CountFraction {
    std::size_t count = 0;
    double fraction = 0.0; // in [0, 1]

    double percent() const { return 100.0 * fraction; }
};

struct DuplicateAudit {
    CountFraction duplicates_train, duplicates_valid, duplicates_test;
    CountFraction test_in_train, valid_in_train;

    bool all_zero() const {
        return duplicates_train.count == 0 && duplicates_valid.count == 0 && duplicates_test.count == 0 &&
               test_in_train.count == 0 && valid_in_train.count == 0;
    }
};

enum class FilterMode { none, inter, intra, both };

inline std::string_view to_string(FilterMode m) {
    switch (m) {
    case FilterMode::none: return "none";
    case FilterMode::inter: return "inter";
    case FilterMode::intra: return "intra";
    case FilterMode::both: return "both";
    }
    return "?";
}

inline std::optional<FilterMode> parse_filter_mode(std::string_view s) {
    for (auto m : {FilterMode::none, FilterMode::inter, FilterMode::intra, FilterMode::both})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline TripleSet distinct(std::span<const StaticTriple> triples) { return {triples.begin(), triples.end()}; }

namespace detail {

inline CountFraction ratio(std::size_t count, std::size_t total) {
    return {count, total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total)};
}

inline CountFraction surplus(std::span<const StaticTriple> split) {
    return ratio(split.size() - distinct(split).size(), split.size());
}

// Distinct triples of `split` that occur in `train`, over the distinct split size.
inline CountFraction overlap(std::span<const StaticTriple> split, const TripleSet& train) {
    auto d = distinct(split);
    std::size_t n = 0;
    for (const auto& t : d) n += train.count(t);
    return ratio(n, d.size());
}

} // namespace detail

// Duplicates are surplus occurrences (|split| - |distinct(split)|).
inline DuplicateAudit audit(std::span<const StaticTriple> train, std::span<const StaticTriple> valid,
                            std::span<const StaticTriple> test) {
    DuplicateAudit a;
    a.duplicates_train = detail::surplus(train);
    a.duplicates_valid = detail::surplus(valid);
    a.duplicates_test = detail::surplus(test);
    auto train_set = distinct(train);
    a.test_in_train = detail::overlap(test, train_set);
    a.valid_in_train = detail::overlap(valid, train_set);
    return a;
}

inline DuplicateAudit audit(const SplitTriples& s) { return audit(s.train, s.valid, s.test); }

inline std::vector<StaticTriple> dedupe(std::span<const StaticTriple> triples) {
    TripleSet seen;
    std::vector<StaticTriple> out;
    for (const auto& t : triples)
        if (seen.insert(t).second) out.push_back(t);
    return out;
}

// intra: deduplicate every split (first occurrence kept); inter: drop
// valid/test triples present in train; both: intra, then inter.
// Throws DataError if the result has no test triples left.
inline SplitTriples apply_filter(const SplitTriples& in, FilterMode mode) {
    SplitTriples out = in;
    if (mode == FilterMode::intra || mode == FilterMode::both)
        for (Split s : all_splits) out[s] = dedupe(out[s]);
    if (mode == FilterMode::inter || mode == FilterMode::both) {
        const auto train = distinct(out.train);
        for (Split s : {Split::valid, Split::test})
            std::erase_if(out[s], [&](const StaticTriple& t) { return train.count(t) > 0; });
    }
    if (out.test.empty() && !in.test.empty())
        throw DataError(std::string("filter '") + std::string(to_string(mode)) + "' removed every test triple");
    return out;
}

// Table-4-shaped text report.
inline void write_audit(std::ostream& out, const DuplicateAudit& a) {
    auto row = [&](const char* name, const CountFraction& c) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-30s %8zu (%.2f%%)\n", name, c.count, c.percent());
        out << buf;
    };
    row("# duplicates in train", a.duplicates_train);
    row("# duplicates in test", a.duplicates_test);
    row("# duplicates in valid", a.duplicates_valid);
    row("# test triples in train", a.test_in_train);
    row("# valid triples in train", a.valid_in_train);
}

inline void write_audit_csv(std::ostream& out, const DuplicateAudit& a) {
    out << "metric,count,percent\n";
    auto row = [&](const char* name, const CountFraction& c) { out << name << ',' << c.count << ',' << c.percent() << '\n'; };
    row("duplicates_train", a.duplicates_train);
    row("duplicates_test", a.duplicates_test);
    row("duplicates_valid", a.duplicates_valid);
    row("test_in_train", a.test_in_train);
    row("valid_in_train", a.valid_in_train);
}

} // namespace tkg
