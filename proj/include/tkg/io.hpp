#pragma once
// Dataset ingestion (tab-separated train/valid/test files) and writing of
// transformed datasets with their interning tables.

#include "tkg/core.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tkg {

enum class DatasetFormat { valid_time, event };

struct LoadOptions {
    DatasetFormat format = DatasetFormat::valid_time;
    TimeGranularity granularity = TimeGranularity::automatic;
    // Exact tokens meaning "no time given". Tokens made only of '#' and '-'
    // are treated as missing as well.
    std::vector<std::string> missing_tokens{"", "####", "-", "?", "None", "none", "NaN", "nan", "null"};
};

struct LoadReport {
    std::array<std::size_t, 3> lines{};
    std::size_t dropped_unparseable = 0;
    std::size_t dropped_inverted = 0;
    std::size_t filled_begin = 0;
    std::size_t filled_end = 0;
    TimeGranularity granularity = TimeGranularity::integer;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// YYYY-MM-DD with all digits.
inline std::optional<std::int64_t> parse_full_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    std::int64_t y = 0, m = 0, d = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) || !parse_int(s.substr(8, 2), d))
        return std::nullopt;
    using namespace std::chrono;
    year_month_day ymd{year{static_cast<int>(y)}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd}.time_since_epoch().count();
}

// Leading (optionally signed) integer, followed by end of token or '-'.
inline std::optional<std::int64_t> parse_year(std::string_view s) {
    std::size_t i = (!s.empty() && s[0] == '-') ? 1 : 0;
    std::size_t j = i;
    while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
    if (j == i) return std::nullopt;
    if (j < s.size() && s[j] != '-') return std::nullopt;
    std::int64_t v = 0;
    if (!parse_int(s.substr(0, j), v)) return std::nullopt;
    return v;
}

inline std::string day_label(std::int64_t days) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

struct RawFact {
    std::string s, p, o;
    std::optional<std::int64_t> b, e; // nullopt = missing
    Split split;
};

} // namespace detail

inline std::optional<std::int64_t> parse_time(std::string_view token, TimeGranularity g) {
    switch (g) {
    case TimeGranularity::year: return detail::parse_year(token);
    case TimeGranularity::day: return detail::parse_full_date(token);
    case TimeGranularity::integer: {
        std::int64_t v = 0;
        if (detail::parse_int(token, v)) return v;
        return std::nullopt;
    }
    case TimeGranularity::automatic: break;
    }
    return std::nullopt;
}

inline std::string time_label(std::int64_t value, TimeGranularity g) {
    return g == TimeGranularity::day ? detail::day_label(value) : std::to_string(value);
}

inline bool is_missing_time(std::string_view token, const LoadOptions& opts) {
    for (const auto& m : opts.missing_tokens)
        if (token == m) return true;
    return !token.empty() && token.find_first_not_of("#-") == std::string_view::npos;
}

// Loads `dir/{train,valid,test}.txt`. Missing begin/end times are filled with
// the first/last timestamp; facts with unparseable or inverted scopes are dropped.
inline TemporalGraph load_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {},
                                  LoadReport* report = nullptr) {
    LoadReport rep;
    const std::size_t time_fields = opts.format == DatasetFormat::valid_time ? 2 : 1;

    // Pass 1: tokenize every file.
    struct Line {
        std::string s, p, o;
        std::vector<std::string> times;
        Split split;
    };
    std::vector<Line> lines;
    for (Split sp : all_splits) {
        auto path = dir / (std::string(to_string(sp)) + ".txt");
        std::ifstream in(path);
        if (!in) throw DataError("cannot read " + path.string());
        std::string buf;
        std::size_t lineno = 0, count = 0;
        while (std::getline(in, buf)) {
            ++lineno;
            std::string_view line = detail::trim(buf);
            if (line.empty()) continue;
            auto fields = detail::split_tabs(line);
            if (fields.size() != 3 + time_fields)
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                std::to_string(3 + time_fields) + " tab-separated fields, got " +
                                std::to_string(fields.size()));
            Line l{std::string(detail::trim(fields[0])), std::string(detail::trim(fields[1])),
                   std::string(detail::trim(fields[2])), {}, sp};
            if (l.s.empty() || l.p.empty() || l.o.empty())
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty subject/predicate/object");
            for (std::size_t k = 3; k < fields.size(); ++k) l.times.emplace_back(detail::trim(fields[k]));
            lines.push_back(std::move(l));
            ++count;
        }
        if (count == 0) throw DataError("split file is empty: " + path.string());
        rep.lines[static_cast<std::size_t>(sp)] = count;
    }

    // Resolve granularity: full dates everywhere -> day; otherwise year for
    // valid-time data, integer for event data.
    TimeGranularity gran = opts.granularity;
    if (gran == TimeGranularity::automatic) {
        bool all_dates = true, any = false;
        for (const auto& l : lines)
            for (const auto& t : l.times) {
                if (is_missing_time(t, opts)) continue;
                any = true;
                if (!detail::parse_full_date(t)) all_dates = false;
            }
        if (any && all_dates)
            gran = TimeGranularity::day;
        else
            gran = opts.format == DatasetFormat::valid_time ? TimeGranularity::year : TimeGranularity::integer;
    }
    rep.granularity = gran;

    // Pass 2: parse times; drop unparseable scopes.
    std::vector<detail::RawFact> raw;
    raw.reserve(lines.size());
    std::optional<std::int64_t> lo, hi;
    for (auto& l : lines) {
        detail::RawFact f{std::move(l.s), std::move(l.p), std::move(l.o), std::nullopt, std::nullopt, l.split};
        bool ok = true;
        std::array<std::optional<std::int64_t>*, 2> slots{&f.b, &f.e};
        for (std::size_t k = 0; k < l.times.size(); ++k) {
            if (is_missing_time(l.times[k], opts)) continue;
            auto v = parse_time(l.times[k], gran);
            if (!v) {
                ok = false;
                break;
            }
            *slots[k] = v;
        }
        if (!ok) {
            ++rep.dropped_unparseable;
            continue;
        }
        if (time_fields == 1) {
            if (!f.b) {
                ++rep.dropped_unparseable; // an event without a timestamp has no scope
                continue;
            }
            f.e = f.b;
        }
        for (auto* v : slots)
            if (*v) {
                lo = lo ? std::min(*lo, **v) : **v;
                hi = hi ? std::max(*hi, **v) : **v;
            }
        raw.push_back(std::move(f));
    }
    if (!lo) throw DataError("no parseable timestamps in " + dir.string());

    // Fill missing ends, drop inverted scopes.
    std::vector<detail::RawFact> kept;
    kept.reserve(raw.size());
    for (auto& f : raw) {
        if (!f.b) {
            f.b = lo;
            ++rep.filled_begin;
        }
        if (!f.e) {
            f.e = hi;
            ++rep.filled_end;
        }
        if (*f.e < *f.b) {
            ++rep.dropped_inverted;
            continue;
        }
        kept.push_back(std::move(f));
    }

    auto axis = std::make_shared<TimeAxis>();
    axis->granularity = gran;
    {
        std::set<std::int64_t> distinct;
        for (const auto& f : kept) {
            distinct.insert(*f.b);
            distinct.insert(*f.e);
        }
        axis->values.assign(distinct.begin(), distinct.end());
        for (auto v : axis->values) axis->labels.push_back(time_label(v, gran));
    }

    auto entities = std::make_shared<Interner>();
    Interner predicates;
    std::vector<Fact> facts;
    facts.reserve(kept.size());
    for (const auto& f : kept) {
        Fact fact;
        fact.s = entities->intern(f.s);
        fact.p = predicates.intern(f.p);
        fact.o = entities->intern(f.o);
        fact.b = *axis->find(*f.b);
        fact.e = *axis->find(*f.e);
        fact.split = f.split;
        facts.push_back(fact);
    }
    if (report) *report = rep;
    return TemporalGraph(std::move(entities), std::move(axis), predicates.labels(), std::move(facts));
}

// Table-1-shaped summary line values.
struct DatasetStats {
    std::size_t entities = 0, predicates = 0, timestamps = 0, train = 0, valid = 0, test = 0;
};

inline DatasetStats stats(const TemporalGraph& g) {
    return {g.entity_count(), g.predicate_count(), g.time_count(),
            g.count(Split::train), g.count(Split::valid), g.count(Split::test)};
}

// Writes split files in the valid-time layout plus id tables. Predicates are
// written by label, so retired predicates simply do not appear.
inline void write_dataset(const TemporalGraph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (Split sp : all_splits) {
        auto path = dir / (std::string(to_string(sp)) + ".txt");
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path.string());
        for (const auto& f : g.facts()) {
            if (f.split != sp) continue;
            out << g.entity_label(f.s) << '\t' << g.predicate_label(f.p) << '\t' << g.entity_label(f.o) << '\t'
                << g.time_label(f.b) << '\t' << g.time_label(f.e) << '\n';
        }
    }
    std::ofstream ents(dir / "entities.tsv");
    for (EntityId e = 0; e < g.entity_count(); ++e) ents << e << '\t' << g.entity_label(e) << '\n';
    std::ofstream preds(dir / "predicates.tsv");
    PredicateId dense = 0;
    for (auto p : g.active_predicates()) preds << dense++ << '\t' << g.predicate_label(p) << '\n';
    std::ofstream times(dir / "timestamps.tsv");
    for (TimeId t = 0; t < g.time_count(); ++t) times << t << '\t' << g.time_label(t) << '\n';
}

} // namespace tkg
