#pragma once
// INI-driven experiment pipeline: load -> transform -> filter -> train -> evaluate.

#include "tkg/eval.hpp"
#include "tkg/io.hpp"
#include "tkg/leakage.hpp"
#include "tkg/transform.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace tkg {

inline constexpr std::string_view tool_version = "0.1.0";

struct TransformConfig {
    TransformMethod method = TransformMethod::none;
    double grow = 10.0;
    double shrink = 2.0;
    CpdSplitOptions cpd;
    std::uint64_t seed = 0;
};

struct EvalConfig {
    TiePolicy ties = TiePolicy::optimistic;
    bool filtered = true;
    bool dump_ranks = false;
};

struct PipelineConfig {
    std::filesystem::path dataset;
    LoadOptions load;
    TransformConfig transform;
    FilterMode filter = FilterMode::inter;
    TrainConfig train;
    EvalConfig eval;
    std::filesystem::path out = "out";
    std::size_t threads = 1;
    bool deterministic = false;

    void validate() const {
        if (dataset.empty()) throw ConfigError("dataset.path is not set");
        for (const char* f : {"train.txt", "valid.txt", "test.txt"})
            if (!std::filesystem::exists(dataset / f))
                throw ConfigError("dataset file missing: " + (dataset / f).string());
        switch (transform.method) {
        case TransformMethod::split_time:
        case TransformMethod::split_count:
        case TransformMethod::random_split:
            if (!(transform.grow > 1.0)) throw ConfigError("transform.grow must be > 1");
            break;
        case TransformMethod::merge:
            if (!(transform.shrink > 1.0)) throw ConfigError("transform.shrink must be > 1");
            break;
        case TransformMethod::split_cpd: transform.cpd.cpd.validate(); break;
        default: break;
        }
        if (threads == 0) throw ConfigError("threads must be >= 1");
        train.validate();
        if (out.empty()) throw ConfigError("output.dir is not set");
    }
};

using ConfigTree = boost::property_tree::ptree;

// Every recognised key, as section.key.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "dataset.path", "dataset.format", "dataset.granularity",
        "transform.method", "transform.grow", "transform.shrink", "transform.epsilon", "transform.score",
        "transform.seed", "transform.min_size", "transform.jump", "transform.gamma", "transform.scope",
        "transform.placement",
        "filter.mode",
        "train.epochs", "train.dim", "train.learning_rate", "train.batch_size", "train.negatives",
        "train.negative_sharing", "train.margin", "train.temperature", "train.norm", "train.seed",
        "train.detach_weights",
        "eval.ties", "eval.filtered", "eval.dump_ranks",
        "output.dir", "run.threads", "run.deterministic", "run.seed"};
    return keys;
}

inline std::string env_name(std::string_view key) {
    std::string out = "TKG_";
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

inline ConfigTree read_config_file(const std::filesystem::path& path) {
    ConfigTree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        for (const auto& [key, _] : body) {
            std::string full = section + "." + key;
            const auto& known = config_keys();
            if (std::find(known.begin(), known.end(), full) == known.end())
                throw ConfigError("config: unknown key " + full);
        }
    }
    return tree;
}

// TKG_<SECTION>_<KEY> environment variables take precedence over the file.
inline void apply_env_overrides(ConfigTree& tree) {
    for (const auto& key : config_keys())
        if (const char* v = std::getenv(env_name(key).c_str())) tree.put(key, v);
}

namespace detail {

template <class T>
T get_number(const ConfigTree& tree, const std::string& key, T fallback) {
    auto v = tree.get_optional<std::string>(key);
    if (!v) return fallback;
    std::istringstream in(*v);
    T out{};
    if constexpr (std::is_unsigned_v<T>) {
        if (!v->empty() && v->front() == '-') throw ConfigError(key + ": expected a nonnegative number, got " + *v);
    }
    if (!(in >> out) || !(in >> std::ws).eof()) throw ConfigError(key + ": not a number: " + *v);
    return out;
}

inline bool get_bool(const ConfigTree& tree, const std::string& key, bool fallback) {
    auto v = tree.get_optional<std::string>(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError(key + ": not a boolean: " + *v);
}

template <class Parse>
auto get_enum(const ConfigTree& tree, const std::string& key, Parse parse,
              std::remove_cvref_t<decltype(*parse(""))> fallback) {
    auto v = tree.get_optional<std::string>(key);
    if (!v) return fallback;
    auto parsed = parse(*v);
    if (!parsed) throw ConfigError(key + ": unrecognised value " + *v);
    return *parsed;
}

inline std::optional<DatasetFormat> parse_format(std::string_view s) {
    if (s == "valid_time" || s == "interval") return DatasetFormat::valid_time;
    if (s == "event") return DatasetFormat::event;
    return std::nullopt;
}

inline std::optional<TimeGranularity> parse_granularity(std::string_view s) {
    if (s == "auto" || s == "automatic") return TimeGranularity::automatic;
    if (s == "year") return TimeGranularity::year;
    if (s == "day") return TimeGranularity::day;
    if (s == "integer") return TimeGranularity::integer;
    return std::nullopt;
}

inline std::optional<NeighborhoodScope> parse_scope(std::string_view s) {
    if (s == "predicate") return NeighborhoodScope::predicate;
    if (s == "whole_graph") return NeighborhoodScope::whole_graph;
    return std::nullopt;
}

inline std::optional<NegativeSharing> parse_sharing(std::string_view s) {
    if (s == "per_batch") return NegativeSharing::per_batch;
    if (s == "per_positive") return NegativeSharing::per_positive;
    return std::nullopt;
}

} // namespace detail

inline PipelineConfig config_from_tree(const ConfigTree& t) {
    using namespace detail;
    PipelineConfig c;
    c.dataset = t.get<std::string>("dataset.path", "");
    c.load.format = get_enum(t, "dataset.format", parse_format, DatasetFormat::valid_time);
    c.load.granularity = get_enum(t, "dataset.granularity", parse_granularity, TimeGranularity::automatic);

    auto& tr = c.transform;
    tr.method = get_enum(t, "transform.method", parse_transform_method, TransformMethod::none);
    tr.grow = get_number(t, "transform.grow", tr.grow);
    tr.shrink = get_number(t, "transform.shrink", tr.shrink);
    tr.seed = get_number<std::uint64_t>(t, "transform.seed", 0);
    tr.cpd.cpd.epsilon = get_number(t, "transform.epsilon", tr.cpd.cpd.epsilon);
    tr.cpd.cpd.min_size = get_number<std::size_t>(t, "transform.min_size", 1);
    tr.cpd.cpd.jump = get_number<std::size_t>(t, "transform.jump", 1);
    if (t.get_optional<std::string>("transform.gamma")) tr.cpd.cpd.gamma = get_number(t, "transform.gamma", 1.0);
    tr.cpd.measure = get_enum(t, "transform.score", parse_proximity, ProximityMeasure::pref_attachment);
    tr.cpd.scope = get_enum(t, "transform.scope", parse_scope, NeighborhoodScope::predicate);
    tr.cpd.cpd.placement = get_enum(t, "transform.placement", cpd::parse_placement, cpd::Placement::exact);

    c.filter = get_enum(t, "filter.mode", parse_filter_mode, FilterMode::inter);

    auto& tc = c.train;
    tc.epochs = get_number(t, "train.epochs", tc.epochs);
    tc.dim = get_number(t, "train.dim", tc.dim);
    tc.learning_rate = get_number(t, "train.learning_rate", tc.learning_rate);
    tc.batch_size = get_number(t, "train.batch_size", tc.batch_size);
    tc.negatives = get_number(t, "train.negatives", tc.negatives);
    tc.sharing = get_enum(t, "train.negative_sharing", parse_sharing, tc.sharing);
    tc.margin = get_number(t, "train.margin", tc.margin);
    tc.temperature = get_number(t, "train.temperature", tc.temperature);
    tc.norm = get_enum(t, "train.norm", parse_norm, tc.norm);
    tc.detach_weights = get_bool(t, "train.detach_weights", tc.detach_weights);

    const auto seed = get_number<std::uint64_t>(t, "run.seed", 0);
    tc.seed = get_number<std::uint64_t>(t, "train.seed", seed);
    if (!t.get_optional<std::string>("transform.seed")) tr.seed = seed;

    c.eval.ties = get_enum(t, "eval.ties", parse_tie_policy, TiePolicy::optimistic);
    c.eval.filtered = get_bool(t, "eval.filtered", true);
    c.eval.dump_ranks = get_bool(t, "eval.dump_ranks", false);

    c.out = t.get<std::string>("output.dir", "out");
    c.threads = get_number<std::size_t>(t, "run.threads", 1);
    c.deterministic = get_bool(t, "run.deterministic", false);
    if (c.deterministic) c.threads = 1;
    c.transform.cpd.threads = c.threads;
    return c;
}

// Keys whose value may be a comma-separated grid.
inline const std::vector<std::string>& sweep_keys() {
    static const std::vector<std::string> keys{"transform.grow", "transform.shrink", "transform.epsilon",
                                               "transform.seed", "train.seed", "run.seed"};
    return keys;
}

struct SweepPoint {
    std::string name; // empty when there is no grid
    ConfigTree tree;
};

// Cartesian product over comma-separated values of sweep_keys().
inline std::vector<SweepPoint> expand_sweep(const ConfigTree& tree) {
    std::vector<SweepPoint> points{{"", tree}};
    for (const auto& key : sweep_keys()) {
        auto v = tree.get_optional<std::string>(key);
        if (!v || v->find(',') == std::string::npos) continue;
        std::vector<std::string> values;
        std::stringstream ss(*v);
        for (std::string item; std::getline(ss, item, ',');) {
            auto trimmed = std::string(detail::trim(item));
            if (trimmed.empty()) throw ConfigError(key + ": empty grid value");
            values.push_back(trimmed);
        }
        std::vector<SweepPoint> next;
        for (const auto& p : points) {
            for (const auto& val : values) {
                SweepPoint q = p;
                q.tree.put(key, val);
                q.name += (q.name.empty() ? "" : "_") + key.substr(key.find('.') + 1) + "=" + val;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

// FNV-1a over the canonical "key = value" dump of the tree.
inline std::uint64_t config_hash(const ConfigTree& tree) {
    std::ostringstream dump;
    for (const auto& key : config_keys())
        if (auto v = tree.get_optional<std::string>(key)) dump << key << " = " << *v << '\n';
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump.str()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

inline void write_manifest(const std::filesystem::path& dir, const ConfigTree& tree, std::uint64_t seed,
                           const std::vector<std::string>& artifacts) {
    std::ofstream out(dir / "manifest.txt");
    out << "tool = tkg " << tool_version << '\n'
        << "config_hash = " << hex(config_hash(tree)) << '\n'
        << "seed = " << seed << '\n';
    for (const auto& a : artifacts) out << "artifact = " << a << '\n';
    std::ofstream cfg(dir / "config.ini");
    boost::property_tree::ini_parser::write_ini(cfg, tree);
}

// Rethrows with the stage name prefixed, keeping the error family.
template <class Fn>
auto run_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
    auto tag = [&](const std::exception& e) { return "[" + std::string(stage) + "] " + e.what(); };
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(tag(e));
    } catch (const DataError& e) {
        throw DataError(tag(e));
    } catch (const NumericError& e) {
        throw NumericError(tag(e));
    } catch (const Error& e) {
        throw Error(tag(e));
    } catch (const std::exception& e) {
        throw DataError(tag(e));
    }
}

inline TransformResult apply_transform(const TemporalGraph& g, const TransformConfig& c) {
    switch (c.method) {
    case TransformMethod::none: {
        TransformResult r{g, PredicateLineage::identity(g), {}};
        r.report.predicates_before = r.report.predicates_after = g.predicate_count();
        r.report.facts_before = r.report.facts_after = g.size();
        return r;
    }
    case TransformMethod::timestamp: return timestamp(g);
    case TransformMethod::split_time: return split_parameterized(g, SplitCriterion::time, c.grow);
    case TransformMethod::split_count: return split_parameterized(g, SplitCriterion::count, c.grow);
    case TransformMethod::split_cpd: return split_cpd(g, c.cpd);
    case TransformMethod::merge: return merge(g, c.shrink);
    case TransformMethod::random_split: return random_split(g, c.grow, c.seed);
    }
    throw ConfigError("unknown transform method");
}

struct PipelineResult {
    TransformReport transform;
    DuplicateAudit audit;
    MetricReport metrics;
};

// Writes the transformed dataset, lineage, reports, checkpoint and metrics
// under cfg.out. `log` receives progress lines and the metric table.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const ConfigTree& tree, std::ostream& log) {
    run_stage("config", [&] { cfg.validate(); });
    namespace fs = std::filesystem;
    const fs::path out = cfg.out;
    fs::create_directories(out);
    std::vector<std::string> artifacts;
    auto open = [&](const std::string& name) {
        artifacts.push_back(name);
        std::ofstream f(out / name);
        if (!f) throw DataError("cannot write " + (out / name).string());
        return f;
    };

    PipelineResult res;
    auto g = run_stage("load", [&] { return load_dataset(cfg.dataset, cfg.load); });
    log << "loaded " << g.size() << " facts, " << g.entity_count() << " entities, " << g.predicate_count()
        << " predicates, " << g.time_count() << " timestamps\n";

    auto tr = run_stage("transform", [&] { return apply_transform(g, cfg.transform); });
    res.transform = tr.report;
    run_stage("transform", [&] {
        write_dataset(tr.graph, out / "transformed");
        artifacts.push_back("transformed/");
        auto lf = open("lineage.tsv");
        write_lineage(lf, tr.graph, tr.lineage);
        auto rf = open("transform_report.txt");
        tr.report.write(rf);
    });
    log << "transform " << to_string(cfg.transform.method) << ": " << tr.report.predicates_before << " -> "
        << tr.report.predicates_after << " predicates\n";

    auto splits = run_stage("filter", [&] {
        auto stripped = strip_temporal(tr.graph);
        res.audit = audit(stripped);
        auto af = open("audit.txt");
        write_audit(af, res.audit);
        auto filtered = apply_filter(stripped, cfg.filter);
        auto ff = open("audit_after_filter.txt");
        write_audit(ff, audit(filtered));
        return filtered;
    });
    log << "filter " << to_string(cfg.filter) << ": train " << splits.train.size() << ", valid "
        << splits.valid.size() << ", test " << splits.test.size() << '\n';

    auto model = run_stage("train", [&] {
        auto m = train(splits.train, tr.graph.entity_count(), tr.graph.predicate_table_size(), cfg.train);
        auto mf = open("model.ckpt");
        save_model(mf, m, "transformed/");
        return m;
    });

    run_stage("eval", [&] {
        std::vector<StaticTriple> known;
        for (Split s : all_splits) known.insert(known.end(), splits[s].begin(), splits[s].end());
        RankOptions opts{cfg.eval.ties, cfg.eval.filtered, cfg.threads};
        auto records = rank_queries(model, splits.test, std::span<const StaticTriple>(known), opts);
        res.metrics = metrics(records);
        auto tf = open("metrics.txt");
        write_metrics_table(tf, res.metrics);
        auto cf = open("metrics.csv");
        write_metrics_csv(cf, res.metrics);
        if (cfg.eval.dump_ranks) {
            auto rf = open("ranks.tsv");
            write_ranks(rf, records);
        }
    });
    write_metrics_table(log, res.metrics);
    write_manifest(out, tree, cfg.train.seed, artifacts);
    return res;
}

} // namespace tkg
