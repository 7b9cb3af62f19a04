// Acceptance gate. Prints one PASS / FAIL / SKIP line per criterion.
//
//   acceptance --group synthetic   criteria that need no external data
//   acceptance --group datasets    criteria on Wikidata12k, YAGO11k, ICEWS14
//
// Datasets are read from $TKG_DATA_DIR/<name>/{train,valid,test}.txt. When
// none is present the datasets group exits 77 (reported as skipped by ctest).

#include "support.hpp"
#include "tkg/io.hpp"
#include "tkg/leakage.hpp"
#include "tkg/transform.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>

using namespace tkg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Gate {
    int passed = 0, failed = 0, skipped = 0;

    void report(bool ok, const std::string& id, const std::string& detail) {
        std::printf("%s  %-5s %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
        std::fflush(stdout);
        (ok ? passed : failed)++;
    }
    void info(const std::string& id, const std::string& detail) {
        std::printf("INFO  %-5s %s\n", id.c_str(), detail.c_str());
        std::fflush(stdout);
    }
    void skip(const std::string& id, const std::string& detail) {
        std::printf("SKIP  %-5s %s\n", id.c_str(), detail.c_str());
        std::fflush(stdout);
        skipped++;
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- synthetic

EmbeddingModel gaussian_model(std::mt19937_64& rng, std::size_t ne, std::size_t np, std::size_t d, Norm norm) {
    EmbeddingModel m(ne, np, d, norm);
    std::normal_distribution<double> n(0, 1);
    for (auto& v : m.entities) v = n(rng);
    for (auto& v : m.predicates) v = n(rng);
    return m;
}

// 5a: analytic gradient of the self-adversarial loss against central
// differences, for detached and non-detached weights.
void gradient_check(Gate& gate) {
    std::mt19937_64 rng(20240501);
    std::uniform_int_distribution<std::size_t> dim(1, 16), ents(2, 12), negs(1, 8), preds(1, 3);
    std::uniform_real_distribution<double> margin(0.5, 3.0), temp(0.1, 2.0);
    double worst = 0.0;
    std::size_t bad_configs = 0, coords = 0, near_zero = 0;
    const double h = 1e-5, tol = 1e-4;
    for (int cfg = 0; cfg < 100; ++cfg) {
        const Norm norm = cfg % 2 ? Norm::l2 : Norm::l1;
        const bool detach = cfg % 4 < 2;
        const std::size_t ne = ents(rng), np = preds(rng);
        auto m = gaussian_model(rng, ne, np, dim(rng), norm);
        std::uniform_int_distribution<EntityId> e(0, static_cast<EntityId>(ne - 1));
        std::uniform_int_distribution<PredicateId> p(0, static_cast<PredicateId>(np - 1));
        StaticTriple pos{e(rng), p(rng), e(rng)};
        auto n = negative_sample(pos, negs(rng), ne, rng);
        const double g = margin(rng), a = temp(rng);
        Gradient grad(m);
        self_adversarial_loss(m, pos, n, g, a, &grad, 1.0, detach);
        const auto w = adversarial_weights(m, n, g, a);
        auto loss = [&](const EmbeddingModel& mm) {
            return detach ? loss_with_weights(mm, pos, n, w, g) : self_adversarial_loss(mm, pos, n, g, a);
        };
        bool ok = true;
        auto check = [&](std::vector<double> EmbeddingModel::*block, const std::vector<double>& an) {
            for (std::size_t i = 0; i < (m.*block).size(); ++i) {
                EmbeddingModel plus = m, minus = m;
                (plus.*block)[i] += h;
                (minus.*block)[i] -= h;
                const double num = (loss(plus) - loss(minus)) / (2 * h);
                const double diff = std::abs(num - an[i]);
                const double scale = std::max(std::abs(num), std::abs(an[i]));
                ++coords;
                if (diff < 1e-8) { // zero up to finite-difference roundoff
                    ++near_zero;
                    if (scale > 1e-3) worst = std::max(worst, diff / scale);
                    continue;
                }
                worst = std::max(worst, diff / scale);
                if (diff > tol * scale) ok = false;
            }
        };
        check(&EmbeddingModel::entities, grad.entities);
        check(&EmbeddingModel::predicates, grad.predicates);
        bad_configs += !ok;
    }
    gate.report(bad_configs == 0, "5a",
                fmt("gradient check: %zu/100 configurations over tolerance 1e-4, max relative error %.2e over %zu "
                    "coordinates (d <= 16; %zu agree within 1e-8 absolute)",
                    bad_configs, worst, coords, near_zero));
}

double synthetic_mrr(const TemporalGraph& g, TransformMethod method, std::uint64_t seed) {
    TransformResult r = method == TransformMethod::none        ? TransformResult{g, PredicateLineage::identity(g), {}}
                        : method == TransformMethod::timestamp ? timestamp(g)
                                                               : split_parameterized(g, SplitCriterion::time, 2.0);
    auto s = strip_temporal(r.graph);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.dim = 32;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 128;
    cfg.negatives = 32;
    cfg.sharing = NegativeSharing::per_positive;
    cfg.seed = seed;
    auto m = train(s.train, r.graph.entity_count(), r.graph.predicate_table_size(), cfg);
    std::vector<StaticTriple> known;
    for (Split sp : all_splits) known.insert(known.end(), s[sp].begin(), s[sp].end());
    return metrics(rank_queries(m, s.test, std::span<const StaticTriple>(known))).mrr;
}

// 5b: a predicate whose object mapping changes halfway through the timeline.
void reversal_runs(Gate& gate) {
    auto t0 = Clock::now();
    int ts_wins = 0, split_wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto g = tkg::testing::reversal_graph(seed);
        double v = synthetic_mrr(g, TransformMethod::none, seed);
        double t = synthetic_mrr(g, TransformMethod::timestamp, seed);
        double s = synthetic_mrr(g, TransformMethod::split_time, seed);
        ts_wins += t > v;
        split_wins += s > v;
        detail += fmt(" [seed %llu: vanilla %.4f timestamp %.4f split %.4f]", static_cast<unsigned long long>(seed), v,
                      t, s);
    }
    const double secs = seconds_since(t0);
    gate.report(ts_wins >= 4 && split_wins >= 4 && secs < 300.0, "5b",
                fmt("reversal TKG filtered MRR: timestamp beats vanilla %d/5, split(time) %d/5, %.1fs (< 300s)",
                    ts_wins, split_wins, secs) +
                    detail);
}

// Piecewise-constant levels with distinct neighbours, plus optional noise.
std::vector<double> piecewise(std::mt19937_64& rng, std::size_t length, std::size_t segments, double noise) {
    std::vector<std::size_t> cuts(length - 1);
    std::iota(cuts.begin(), cuts.end(), 1);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(segments - 1);
    cuts.push_back(length);
    std::sort(cuts.begin(), cuts.end());
    std::uniform_int_distribution<int> level(0, 5);
    std::normal_distribution<double> n(0.0, noise > 0 ? noise : 1.0);
    std::vector<double> v;
    int prev = -1;
    std::size_t start = 0;
    for (auto c : cuts) {
        int lv;
        do lv = level(rng);
        while (lv == prev);
        prev = lv;
        for (std::size_t i = start; i < c; ++i) v.push_back(lv + (noise > 0 ? n(rng) : 0.0));
        start = c;
    }
    return v;
}

void cpd_oracle(Gate& gate) {
    std::mt19937_64 rng(7);
    std::size_t signals = 0, within = 0, exact = 0, noiseless = 0;
    double worst = 0.0;
    for (std::size_t len = 2; len <= 12; ++len)
        for (std::size_t k = 1; k <= std::min<std::size_t>(4, len); ++k)
            for (double noise : {0.05, 0.2, 0.5})
                for (int rep = 0; rep < 3; ++rep) {
                    auto sig = cpd::Signal::scalar(piecewise(rng, len, k, noise));
                    for (double eps : {0.1, 0.5, 1.0, 2.0}) {
                        cpd::CpdConfig c;
                        c.epsilon = eps;
                        auto seg = cpd::bottom_up(sig, c);
                        double got = cpd::segmentation_cost(sig, seg.breakpoints, seg.gamma);
                        double opt = tkg::testing::exhaustive_cost(sig, seg.breakpoints.size(), seg.gamma);
                        ++signals;
                        if (got <= 1.05 * opt + 1e-12) ++within;
                        if (opt > 1e-12) worst = std::max(worst, got / opt);
                    }
                }
    for (std::size_t len = 2; len <= 12; ++len)
        for (std::size_t k = 1; k <= std::min<std::size_t>(4, len); ++k)
            for (int rep = 0; rep < 3; ++rep) {
                auto v = piecewise(rng, len, k, 0.0);
                std::vector<std::size_t> truth;
                for (std::size_t i = 1; i < len; ++i)
                    if (v[i] != v[i - 1]) truth.push_back(i);
                truth.push_back(len);
                cpd::CpdConfig c;
                c.epsilon = 1e-9;
                ++noiseless;
                exact += cpd::bottom_up(cpd::Signal::scalar(v), c).breakpoints == truth;
            }
    gate.report(within == signals, "6a",
                fmt("bottom_up within 5%% of exhaustive optimum: %zu/%zu runs, worst ratio %.4f", within, signals,
                    worst));
    gate.report(exact == noiseless, "6b",
                fmt("exact breakpoint recovery on noiseless signals: %zu/%zu", exact, noiseless));
}

void ranking_oracle(Gate& gate) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> ents(2, 50), preds(1, 5), dim(1, 8);
    std::uniform_int_distribution<int> coarse(-2, 2);
    std::size_t equal = 0, total = 0;
    for (int model = 0; model < 200; ++model) {
        const std::size_t ne = ents(rng), np = preds(rng);
        auto m = gaussian_model(rng, ne, np, dim(rng), model % 2 ? Norm::l1 : Norm::l2);
        if (model % 3 == 0) { // integer coordinates produce exact ties
            for (auto& v : m.entities) v = coarse(rng);
            for (auto& v : m.predicates) v = coarse(rng);
        }
        std::uniform_int_distribution<EntityId> e(0, static_cast<EntityId>(ne - 1));
        std::uniform_int_distribution<PredicateId> p(0, static_cast<PredicateId>(np - 1));
        std::vector<StaticTriple> test, known;
        for (int i = 0; i < 8; ++i) test.push_back({e(rng), p(rng), e(rng)});
        for (std::size_t i = 0; i < 2 * ne; ++i) known.push_back({e(rng), p(rng), e(rng)});
        known.insert(known.end(), test.begin(), test.end());
        const auto ties = static_cast<TiePolicy>(model % 3);
        RankOptions opts{ties, true, 1 + static_cast<std::size_t>(model % 4)};
        ++total;
        equal += rank_queries(m, test, std::span<const StaticTriple>(known), opts) ==
                 tkg::testing::brute_force_ranks(m, test, known, ties);
    }
    gate.report(equal == total, "7", fmt("rank_queries equals brute force on %zu/%zu models (|E| <= 50)", equal, total));
}

bool idempotent_everywhere(const SplitTriples& s, std::string& why) {
    for (auto mode : {FilterMode::none, FilterMode::inter, FilterMode::intra, FilterMode::both}) {
        SplitTriples once;
        try {
            once = apply_filter(s, mode);
        } catch (const DataError&) {
            continue; // test split emptied; reported by apply_filter itself
        }
        auto twice = apply_filter(once, mode);
        if (twice.train != once.train || twice.valid != once.valid || twice.test != once.test) {
            why = std::string(to_string(mode)) + " not idempotent";
            return false;
        }
        if (mode == FilterMode::both && !audit(once).all_zero()) {
            why = "audit after both is nonzero";
            return false;
        }
    }
    return true;
}

void filter_proxy(Gate& gate) {
    std::mt19937_64 rng(5);
    std::size_t ok = 0, total = 0;
    std::string why;
    for (int round = 0; round < 50; ++round) {
        auto g = tkg::testing::random_graph(rng, 10, 3, 6, 300);
        ++total;
        ok += idempotent_everywhere(strip_temporal(g), why);
    }
    const auto sample = tkg::testing::sample_dir();
    for (const auto& [dir, fmt_] : {std::pair{sample, DatasetFormat::valid_time},
                                    std::pair{sample.parent_path() / "sample_events", DatasetFormat::event}}) {
        LoadOptions o;
        o.format = fmt_;
        ++total;
        ok += idempotent_everywhere(strip_temporal(load_dataset(dir, o)), why);
    }
    gate.report(ok == total, "8s",
                fmt("(synthetic proxy) filter idempotent and audit-after-both zero on %zu/%zu graphs %s", ok, total,
                    why.c_str()));
}

// ----------------------------------------------------------------- datasets

struct DatasetInfo {
    std::string name;
    DatasetFormat format;
    DatasetStats table;
};

const std::vector<DatasetInfo>& known_datasets() {
    static const std::vector<DatasetInfo> all{
        {"Wikidata12k", DatasetFormat::valid_time, {12554, 24, 70, 32497, 4062, 4062}},
        {"YAGO11k", DatasetFormat::valid_time, {10526, 10, 59, 16408, 2050, 2051}},
        {"ICEWS14", DatasetFormat::event, {7128, 230, 365, 72826, 8941, 8963}},
    };
    return all;
}

struct AuditRow {
    std::size_t count;
    double percent;
};

struct AuditTable {
    AuditRow dup_train, dup_test, dup_valid, test_in_train, valid_in_train;
};

const std::map<std::string, AuditTable>& audit_table() {
    static const std::map<std::string, AuditTable> t{
        {"Wikidata12k", {{4720, 14.53}, {214, 5.27}, {193, 4.75}, {1042, 27.10}, {1027, 26.54}}},
        {"ICEWS14", {{30136, 41.38}, {1544, 17.23}, {1610, 18.01}, {3499, 47.16}, {3527, 48.11}}},
        {"YAGO11k", {{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}},
    };
    return t;
}

std::string stats_string(const DatasetStats& s) {
    return fmt("%zu/%zu/%zu %zu/%zu/%zu", s.entities, s.predicates, s.timestamps, s.train, s.valid, s.test);
}

bool same_stats(const DatasetStats& a, const DatasetStats& b) {
    return a.entities == b.entities && a.predicates == b.predicates && a.timestamps == b.timestamps &&
           a.train == b.train && a.valid == b.valid && a.test == b.test;
}

bool within_half(std::size_t got, std::size_t target) {
    return std::abs(static_cast<double>(got) - static_cast<double>(target)) <= 0.5 * static_cast<double>(target);
}

void run_dataset(Gate& gate, const DatasetInfo& info, const fs::path& dir) {
    const auto& n = info.name;
    LoadOptions opts;
    opts.format = info.format;

    auto t0 = Clock::now();
    auto g = load_dataset(dir, opts);
    double secs = seconds_since(t0);
    auto st = stats(g);
    gate.report(same_stats(st, info.table) && secs < 10.0, "1",
                fmt("%s statistics %s (expected %s), load %.2fs", n.c_str(), stats_string(st).c_str(),
                    stats_string(info.table).c_str(), secs));

    auto stripped = strip_temporal(g);
    auto a = audit(stripped);
    const auto& want = audit_table().at(n);
    bool audit_ok = true;
    std::string audit_detail;
    auto row = [&](const char* label, const CountFraction& got, const AuditRow& w) {
        bool ok = got.count == w.count && std::abs(got.percent() - w.percent) <= 0.01 + 1e-9;
        audit_ok = audit_ok && ok;
        audit_detail += fmt(" %s %zu (%.2f%%)%s", label, got.count, got.percent(), ok ? "" : fmt(" != %zu (%.2f%%)", w.count, w.percent).c_str());
    };
    row("dup_train", a.duplicates_train, want.dup_train);
    row("dup_test", a.duplicates_test, want.dup_test);
    row("dup_valid", a.duplicates_valid, want.dup_valid);
    row("test_in_train", a.test_in_train, want.test_in_train);
    row("valid_in_train", a.valid_in_train, want.valid_in_train);
    gate.report(audit_ok, "2", n + " audit:" + audit_detail);

    auto timed = [&](auto&& fn) {
        auto t = Clock::now();
        auto r = fn();
        return std::pair{std::move(r), seconds_since(t)};
    };
    auto exact = [&](const std::string& what, std::size_t expected, auto&& fn) {
        auto [r, s] = timed(fn);
        const auto got = r.graph.predicate_count();
        gate.report(got == expected && s < 120.0, "3",
                    fmt("%s %s: %zu predicates (expected %zu), %.1fs", n.c_str(), what.c_str(), got, expected, s));
        return std::move(r);
    };
    const std::map<std::string, std::size_t> ts_counts{{"Wikidata12k", 1622}, {"YAGO11k", 570}, {"ICEWS14", 17061}};
    exact("timestamp", ts_counts.at(n), [&] { return timestamp(g); });
    if (n == "Wikidata12k") {
        exact("split(time, grow=10)", 240, [&] { return split_parameterized(g, SplitCriterion::time, 10); });
        exact("split(count, grow=25)", 600, [&] { return split_parameterized(g, SplitCriterion::count, 25); });
    } else if (n == "YAGO11k") {
        exact("split(time, grow=20)", 200, [&] { return split_parameterized(g, SplitCriterion::time, 20); });
        exact("split(time, grow=25)", 250, [&] { return split_parameterized(g, SplitCriterion::time, 25); });
    } else {
        exact("split(time, grow=20)", 4600, [&] { return split_parameterized(g, SplitCriterion::time, 20); });
        exact("split(time, grow=25)", 5750, [&] { return split_parameterized(g, SplitCriterion::time, 25); });
    }

    struct Approx {
        ProximityMeasure measure;
        double epsilon;
        std::size_t cpd;
        double shrink;
        std::size_t merged;
    };
    const std::map<std::string, Approx> approx{
        {"Wikidata12k", {ProximityMeasure::pref_attachment, 2.5, 726, 4.0, 423}},
        {"YAGO11k", {ProximityMeasure::pref_attachment, 5.0, 177, 2.0, 290}},
        {"ICEWS14", {ProximityMeasure::adamic_adar, 25.0, 5866, 1.5, 11449}},
    };
    const auto& ap = approx.at(n);
    CpdSplitOptions co;
    co.measure = ap.measure;
    co.cpd.epsilon = ap.epsilon;
    co.threads = std::max(1u, std::thread::hardware_concurrency());
    auto [cpd_r, cpd_s] = timed([&] { return split_cpd(g, co); });
    gate.report(within_half(cpd_r.graph.predicate_count(), ap.cpd), "4",
                fmt("%s split(cpd, %s, eps=%g): %zu predicates (target %zu +-50%%), %.1fs", n.c_str(),
                    std::string(to_string(ap.measure)).c_str(), ap.epsilon, cpd_r.graph.predicate_count(), ap.cpd,
                    cpd_s));
    auto [merge_r, merge_s] = timed([&] { return merge(g, ap.shrink); });
    gate.report(within_half(merge_r.graph.predicate_count(), ap.merged), "4",
                fmt("%s merge(shrink=%g): %zu predicates (target %zu +-50%%), %.1fs", n.c_str(), ap.shrink,
                    merge_r.graph.predicate_count(), ap.merged, merge_s));
    auto full = merge(g, std::numeric_limits<double>::infinity());
    gate.report(full.graph.predicate_count() == g.predicate_count(), "4",
                fmt("%s full merge restores %zu predicates (got %zu)", n.c_str(), g.predicate_count(),
                    full.graph.predicate_count()));

    std::string why;
    gate.report(idempotent_everywhere(stripped, why), "8",
                n + " apply_filter idempotent for all modes, audit after both zero " + why);

    if (n == "ICEWS14") {
        int wins = 0;
        std::string detail;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            auto h10 = [&](FilterMode mode) {
                auto s = apply_filter(stripped, mode);
                TrainConfig cfg;
                cfg.epochs = 20;
                cfg.seed = seed;
                auto m = train(s.train, g.entity_count(), g.predicate_table_size(), cfg);
                std::vector<StaticTriple> known;
                for (Split sp : all_splits) known.insert(known.end(), s[sp].begin(), s[sp].end());
                RankOptions ro;
                ro.threads = co.threads;
                return metrics(rank_queries(m, s.test, std::span<const StaticTriple>(known), ro)).hits_at(10);
            };
            double none = h10(FilterMode::none), both = h10(FilterMode::both);
            wins += both < none;
            detail += fmt(" [seed %llu: none %.4f both %.4f]", static_cast<unsigned long long>(seed), none, both);
        }
        gate.report(wins == 3, "9", fmt("ICEWS14 hits@10 both < none in %d/3 seeds", wins) + detail);
    }
}

// Criterion 9 run on the bundled event sample. Its 48 test facts are too few
// for the comparison to be stable, so the line is informational only.
void leakage_direction_proxy(Gate& gate) {
    LoadOptions o;
    o.format = DatasetFormat::event;
    auto g = load_dataset(tkg::testing::sample_dir().parent_path() / "sample_events", o);
    auto stripped = strip_temporal(g);
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto h10 = [&](FilterMode mode) {
            auto s = apply_filter(stripped, mode);
            TrainConfig cfg;
            cfg.epochs = 20;
            cfg.seed = seed;
            auto m = train(s.train, g.entity_count(), g.predicate_table_size(), cfg);
            std::vector<StaticTriple> known;
            for (Split sp : all_splits) known.insert(known.end(), s[sp].begin(), s[sp].end());
            return metrics(rank_queries(m, s.test, std::span<const StaticTriple>(known))).hits_at(10);
        };
        double none = h10(FilterMode::none), both = h10(FilterMode::both);
        wins += both < none;
        detail += fmt(" [seed %llu: none %.4f both %.4f]", static_cast<unsigned long long>(seed), none, both);
    }
    gate.info("9s", fmt("(not gated) event sample hits@10 both < none in %d/3 seeds", wins) + detail);
}

int run_synthetic() {
    Gate gate;
    gradient_check(gate);
    reversal_runs(gate);
    cpd_oracle(gate);
    ranking_oracle(gate);
    filter_proxy(gate);
    leakage_direction_proxy(gate);
    std::printf("synthetic: %d passed, %d failed\n", gate.passed, gate.failed);
    return gate.failed ? 1 : 0;
}

int run_datasets() {
    Gate gate;
    const char* root = std::getenv("TKG_DATA_DIR");
    for (const auto& info : known_datasets()) {
        fs::path dir = root ? fs::path(root) / info.name : fs::path();
        if (!root || !fs::exists(dir / "train.txt")) {
            gate.skip("1-4,8", info.name + ": not found (set TKG_DATA_DIR)");
            if (info.name == "ICEWS14") gate.skip("9", "ICEWS14: not found (set TKG_DATA_DIR)");
            continue;
        }
        try {
            run_dataset(gate, info, dir);
        } catch (const std::exception& e) {
            gate.report(false, "-", info.name + ": " + e.what());
        }
    }
    std::printf("datasets: %d passed, %d failed, %d skipped\n", gate.passed, gate.failed, gate.skipped);
    if (gate.failed) return 1;
    return gate.passed == 0 ? 77 : 0;
}

} // namespace

int main(int argc, char** argv) {
    std::string group = "synthetic";
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--group") == 0 && i + 1 < argc) group = argv[++i];
    try {
        if (group == "synthetic") return run_synthetic();
        if (group == "datasets") return run_datasets();
    } catch (const std::exception& e) {
        std::printf("FAIL  -     aborted: %s\n", e.what());
        return 1;
    }
    std::fprintf(stderr, "usage: acceptance --group synthetic|datasets\n");
    return 2;
}
