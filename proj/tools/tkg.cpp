// tkg: command-line front end for loading, transforming, auditing, training
// and evaluating temporal knowledge graphs.

#include "tkg/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace {

using namespace tkg;
namespace fs = std::filesystem;

// Flag values collected from the command line, written over the config tree.
struct Overrides {
    std::map<std::string, std::string> values;

    void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }
};

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool deterministic = false;
    std::string out;
};

ConfigTree build_tree(const Globals& g, const Overrides& o) {
    ConfigTree tree;
    if (!g.config.empty()) {
        if (!fs::exists(g.config)) throw ConfigError("config file not found: " + g.config);
        tree = read_config_file(g.config);
    }
    apply_env_overrides(tree);
    for (const auto& [k, v] : o.values) tree.put(k, v);
    if (g.seed) tree.put("run.seed", std::to_string(*g.seed));
    if (g.threads) tree.put("run.threads", std::to_string(*g.threads));
    if (g.deterministic) tree.put("run.deterministic", "true");
    if (!g.out.empty()) tree.put("output.dir", g.out);
    return tree;
}

TemporalGraph load(const PipelineConfig& c, LoadReport* report = nullptr) {
    if (c.dataset.empty()) throw ConfigError("no dataset given (--data or dataset.path)");
    return load_dataset(c.dataset, c.load, report);
}

void print_stats_table(const std::string& name, const DatasetStats& s) {
    std::printf("%-16s %8s %6s %6s %8s %8s %8s\n", "dataset", "|E|", "|P|", "|T|", "train", "valid", "test");
    std::printf("%-16s %8zu %6zu %6zu %8zu %8zu %8zu\n", name.c_str(), s.entities, s.predicates, s.timestamps,
                s.train, s.valid, s.test);
}

void write_triples(const fs::path& path, const TemporalGraph& g, std::span<const StaticTriple> triples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& t : triples)
        out << g.entity_label(t.s) << '\t' << g.predicate_label(t.p) << '\t' << g.entity_label(t.o) << '\n';
}

void add_dataset_flags(CLI::App* app, Overrides& o) {
    o.bind(app, "--data", "dataset.path", "Dataset directory with train/valid/test.txt");
    o.bind(app, "--format", "dataset.format", "valid_time | event");
    o.bind(app, "--granularity", "dataset.granularity", "auto | year | day | integer");
}

void add_transform_flags(CLI::App* app, Overrides& o) {
    o.bind(app, "--method", "transform.method",
           "none | timestamp | split_time | split_count | split_cpd | merge | random_split");
    o.bind(app, "--grow", "transform.grow", "Growth factor for split methods");
    o.bind(app, "--shrink", "transform.shrink", "Shrink factor for merge");
    o.bind(app, "--epsilon", "transform.epsilon", "CPD residual budget");
    o.bind(app, "--score", "transform.score", "jaccard | adar | pref");
    o.bind(app, "--min-size", "transform.min_size", "CPD minimum segment length");
    o.bind(app, "--jump", "transform.jump", "CPD candidate spacing");
    o.bind(app, "--gamma", "transform.gamma", "Fixed RBF bandwidth (default: median heuristic)");
    o.bind(app, "--scope", "transform.scope", "predicate | whole_graph");
    o.bind(app, "--placement", "transform.placement", "CPD breakpoint placement: exact | local | greedy");
}

void add_train_flags(CLI::App* app, Overrides& o) {
    o.bind(app, "--epochs", "train.epochs", "Training epochs");
    o.bind(app, "--dim", "train.dim", "Embedding dimension");
    o.bind(app, "--lr", "train.learning_rate", "Adam learning rate");
    o.bind(app, "--batch-size", "train.batch_size", "Positives per batch");
    o.bind(app, "--negatives", "train.negatives", "Negatives per batch (or per positive)");
    o.bind(app, "--margin", "train.margin", "Margin");
    o.bind(app, "--temperature", "train.temperature", "Adversarial sampling temperature");
    o.bind(app, "--norm", "train.norm", "L1 | L2");
}

// Train/valid/test triples of a dataset after stripping and filtering.
SplitTriples prepared(const TemporalGraph& g, FilterMode mode) { return apply_filter(strip_temporal(g), mode); }

int cmd_load_stats(const PipelineConfig& c) {
    LoadReport rep;
    auto t0 = std::chrono::steady_clock::now();
    auto g = load(c, &rep);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_stats_table(c.dataset.filename().string(), stats(g));
    std::printf("dropped: %zu unparseable, %zu inverted; filled: %zu begin, %zu end; load %.2fs\n",
                rep.dropped_unparseable, rep.dropped_inverted, rep.filled_begin, rep.filled_end, secs);
    return 0;
}

int cmd_transform(const PipelineConfig& c, const ConfigTree& tree) {
    auto g = load(c);
    auto r = apply_transform(g, c.transform);
    fs::create_directories(c.out);
    write_dataset(r.graph, c.out);
    std::ofstream lf(c.out / "lineage.tsv");
    write_lineage(lf, r.graph, r.lineage);
    std::ofstream rf(c.out / "transform_report.txt");
    r.report.write(rf);
    write_manifest(c.out, tree, c.transform.seed,
                   {"train.txt", "valid.txt", "test.txt", "entities.tsv", "predicates.tsv", "timestamps.tsv",
                    "lineage.tsv", "transform_report.txt"});
    std::printf("%s: %zu -> %zu predicates, %zu -> %zu facts\n", std::string(to_string(r.report.method)).c_str(),
                r.report.predicates_before, r.report.predicates_after, r.report.facts_before, r.report.facts_after);
    for (const auto& w : r.report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

int cmd_audit(const PipelineConfig& c, bool csv) {
    auto g = load(c);
    auto a = audit(strip_temporal(g));
    if (csv)
        write_audit_csv(std::cout, a);
    else
        write_audit(std::cout, a);
    return 0;
}

int cmd_filter(const PipelineConfig& c, const ConfigTree& tree) {
    auto g = load(c);
    auto s = prepared(g, c.filter);
    fs::create_directories(c.out);
    write_triples(c.out / "train.txt", g, s.train);
    write_triples(c.out / "valid.txt", g, s.valid);
    write_triples(c.out / "test.txt", g, s.test);
    write_manifest(c.out, tree, 0, {"train.txt", "valid.txt", "test.txt"});
    write_audit(std::cout, audit(s));
    return 0;
}

int cmd_train(const PipelineConfig& c, const ConfigTree& tree) {
    auto g = load(c);
    auto s = prepared(g, c.filter);
    TrainLog log;
    auto m = train(s.train, g.entity_count(), g.predicate_table_size(), c.train, &log);
    fs::create_directories(c.out);
    std::ofstream mf(c.out / "model.ckpt");
    save_model(mf, m, c.dataset.string());
    std::ofstream lf(c.out / "loss.csv");
    lf << "epoch,loss\n";
    for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) lf << e << ',' << log.epoch_loss[e] << '\n';
    write_manifest(c.out, tree, c.train.seed, {"model.ckpt", "loss.csv"});
    if (!log.epoch_loss.empty()) std::printf("final loss %.6f\n", log.epoch_loss.back());
    return 0;
}

EmbeddingModel read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model " + path);
    return load_model(in);
}

int cmd_eval(const PipelineConfig& c, const std::string& model_path, const std::string& ranks_path) {
    auto g = load(c);
    auto m = read_model(model_path);
    if (m.entity_count() != g.entity_count() || m.predicate_count() != g.predicate_table_size())
        throw DataError("model does not match the dataset vocabulary");
    auto s = prepared(g, c.filter);
    std::vector<StaticTriple> known;
    for (Split sp : all_splits) known.insert(known.end(), s[sp].begin(), s[sp].end());
    auto records = rank_queries(m, s.test, std::span<const StaticTriple>(known),
                                {c.eval.ties, c.eval.filtered, c.threads});
    auto r = metrics(records);
    write_metrics_table(std::cout, r);
    if (!c.out.empty() && c.out != "out") {
        fs::create_directories(c.out);
        std::ofstream cf(c.out / "metrics.csv");
        write_metrics_csv(cf, r);
    }
    if (!ranks_path.empty()) {
        std::ofstream rf(ranks_path);
        write_ranks(rf, records);
    }
    return 0;
}

cpd::Signal read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open signal " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        bool header = false;
        for (std::string cell; std::getline(ss, cell, ',');) {
            double v = 0.0;
            auto cell_view = detail::trim(cell);
            auto res = std::from_chars(cell_view.data(), cell_view.data() + cell_view.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell_view.data() + cell_view.size()) {
                if (!first) throw DataError("signal: bad value '" + cell + "'");
                header = true; // a non-numeric first line is a header
                break;
            }
            row.push_back(v);
        }
        first = false;
        if (!header) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("signal is empty");
    return cpd::Signal::from_rows(rows);
}

int cmd_segment_debug(const PipelineConfig& c, const std::string& csv, const std::vector<double>& inline_values) {
    cpd::Signal sig = csv.empty() ? cpd::Signal::scalar(inline_values) : read_signal_csv(csv);
    if (sig.size() == 0) throw ConfigError("segment-debug needs --signal or --values");
    auto seg = cpd::bottom_up(sig, c.transform.cpd.cpd);
    std::printf("length %zu, gamma %.6g, cost %.6g%s%s\n", sig.size(), seg.gamma, seg.cost,
                seg.constant ? " (constant)" : "", seg.too_short ? " (too short)" : "");
    std::printf("breakpoints");
    for (auto b : seg.breakpoints) std::printf(" %zu", b);
    std::printf("\n");
    return 0;
}

int cmd_run(const ConfigTree& tree) {
    auto points = expand_sweep(tree);
    for (const auto& p : points) {
        auto c = config_from_tree(p.tree);
        if (!p.name.empty()) {
            c.out /= p.name;
            std::printf("== %s\n", p.name.c_str());
        }
        run_pipeline(c, p.tree, std::cout);
    }
    return 0;
}

int cmd_export(const PipelineConfig& c, const std::string& model_path, const std::string& what) {
    auto g = load(c);
    auto m = read_model(model_path);
    if (m.entity_count() != g.entity_count() || m.predicate_count() != g.predicate_table_size())
        throw DataError("model does not match the dataset vocabulary");
    if (what == "entities")
        export_vectors(std::cout, m.entities, m.dim, g.entities()->labels());
    else if (what == "predicates")
        export_vectors(std::cout, m.predicates, m.dim, g.predicate_labels());
    else
        throw ConfigError("export: --what must be entities or predicates");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal knowledge graph transformations and TransE evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "INI config file");
    app.add_option("--seed", g.seed, "Global seed");
    app.add_option("--threads", g.threads, "Worker threads");
    app.add_flag("--deterministic", g.deterministic, "Force single-threaded execution");
    app.add_option("--out", g.out, "Output directory");

    Overrides o;
    auto* load_stats = app.add_subcommand("load-stats", "Print dataset statistics");
    add_dataset_flags(load_stats, o);

    auto* transform = app.add_subcommand("transform", "Transform a dataset and write it with its lineage");
    add_dataset_flags(transform, o);
    add_transform_flags(transform, o);

    bool audit_csv = false;
    auto* audit_cmd = app.add_subcommand("audit", "Report duplicates and train overlap of the stripped splits");
    add_dataset_flags(audit_cmd, o);
    audit_cmd->add_flag("--csv", audit_csv, "CSV output");

    auto* filter = app.add_subcommand("filter", "Write filtered atemporal splits");
    add_dataset_flags(filter, o);
    o.bind(filter, "--mode", "filter.mode", "none | inter | intra | both");

    auto* train_cmd = app.add_subcommand("train", "Train TransE on the stripped training split");
    add_dataset_flags(train_cmd, o);
    add_train_flags(train_cmd, o);
    o.bind(train_cmd, "--filter", "filter.mode", "none | inter | intra | both");

    std::string model_path, ranks_path;
    auto* eval_cmd = app.add_subcommand("eval", "Filtered link prediction metrics");
    add_dataset_flags(eval_cmd, o);
    eval_cmd->add_option("--model", model_path, "Checkpoint")->required();
    eval_cmd->add_option("--ranks", ranks_path, "Write per-query ranks here");
    o.bind(eval_cmd, "--filter", "filter.mode", "none | inter | intra | both");
    o.bind(eval_cmd, "--ties", "eval.ties", "optimistic | pessimistic | mean");

    std::string signal_csv;
    std::vector<double> values;
    auto* seg = app.add_subcommand("segment-debug", "Run change point detection on a CSV signal");
    seg->add_option("--signal", signal_csv, "CSV file, one sample per line");
    seg->add_option("--values", values, "Scalar samples")->delimiter(',');
    o.bind(seg, "--epsilon", "transform.epsilon", "Residual budget");
    o.bind(seg, "--min-size", "transform.min_size", "Minimum segment length");
    o.bind(seg, "--jump", "transform.jump", "Candidate spacing");
    o.bind(seg, "--gamma", "transform.gamma", "Fixed RBF bandwidth");
    o.bind(seg, "--placement", "transform.placement", "exact | local | greedy");

    auto* run = app.add_subcommand("run", "Full pipeline; comma lists in grid keys expand to a sweep");
    add_dataset_flags(run, o);
    add_transform_flags(run, o);
    add_train_flags(run, o);
    o.bind(run, "--filter", "filter.mode", "none | inter | intra | both");

    std::string what = "entities";
    auto* exp = app.add_subcommand("export", "Write label<TAB>vector rows");
    add_dataset_flags(exp, o);
    exp->add_option("--model", model_path, "Checkpoint")->required();
    exp->add_option("--what", what, "entities | predicates");

    CLI11_PARSE(app, argc, argv);

    try {
        ConfigTree tree = build_tree(g, o);
        if (run->parsed()) return cmd_run(tree);
        PipelineConfig c = config_from_tree(tree);
        c.train.validate();
        c.transform.cpd.cpd.validate();
        if (load_stats->parsed()) return cmd_load_stats(c);
        if (transform->parsed()) return cmd_transform(c, tree);
        if (audit_cmd->parsed()) return cmd_audit(c, audit_csv);
        if (filter->parsed()) return cmd_filter(c, tree);
        if (train_cmd->parsed()) return cmd_train(c, tree);
        if (eval_cmd->parsed()) return cmd_eval(c, model_path, ranks_path);
        if (seg->parsed()) return cmd_segment_debug(c, signal_csv, values);
        if (exp->parsed()) return cmd_export(c, model_path, what);
    } catch (const tkg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
