#pragma once
// Graph builders, synthetic generators and brute-force oracles shared by the
// unit and acceptance tests.

#include "tkg/cpd.hpp"
#include "tkg/embed.hpp"
#include "tkg/eval.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

namespace tkg::testing {

// Graph over entities e0..e{n-1}, predicates p0..p{m-1} and integer times 0..T-1.
inline TemporalGraph make_graph(std::size_t n_entities, std::size_t n_predicates, std::size_t n_times,
                                std::vector<Fact> facts) {
    auto ents = std::make_shared<Interner>();
    for (std::size_t i = 0; i < n_entities; ++i) ents->intern("e" + std::to_string(i));
    auto axis = std::make_shared<TimeAxis>(TimeAxis::integers(n_times));
    std::vector<std::string> preds;
    for (std::size_t i = 0; i < n_predicates; ++i) preds.push_back("p" + std::to_string(i));
    return TemporalGraph(ents, axis, std::move(preds), std::move(facts));
}

inline Fact fact(EntityId s, PredicateId p, EntityId o, TimeId b, TimeId e, Split split = Split::train) {
    Fact f;
    f.s = s;
    f.p = p;
    f.o = o;
    f.b = b;
    f.e = e;
    f.split = split;
    return f;
}

// Random valid-time graph; every predicate gets at least one fact.
inline TemporalGraph random_graph(std::mt19937_64& rng, std::size_t n_entities, std::size_t n_predicates,
                                  std::size_t n_times, std::size_t n_facts, TimeId max_len = 4) {
    std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(n_entities - 1));
    std::uniform_int_distribution<PredicateId> pred(0, static_cast<PredicateId>(n_predicates - 1));
    std::uniform_int_distribution<TimeId> time(0, static_cast<TimeId>(n_times - 1));
    std::uniform_int_distribution<TimeId> len(0, max_len);
    std::uniform_int_distribution<int> split(0, 9);
    std::vector<Fact> facts;
    for (std::size_t i = 0; i < n_facts; ++i) {
        PredicateId p = i < n_predicates ? static_cast<PredicateId>(i) : pred(rng);
        TimeId b = time(rng);
        TimeId e = std::min<TimeId>(static_cast<TimeId>(n_times - 1), b + len(rng));
        int sp = split(rng);
        facts.push_back(fact(ent(rng), p, ent(rng), b, e, sp < 8 ? Split::train : (sp == 8 ? Split::valid : Split::test)));
    }
    return make_graph(n_entities, n_predicates, n_times, std::move(facts));
}

// 50 entities, 4 predicates, 20 timestamps. Left entities 0..24 map to right
// entities 25..49 through one permutation under every predicate. Predicate 0
// reverses direction at t = 10: from then on its objects are the left group.
inline TemporalGraph reversal_graph(std::uint64_t seed) {
    constexpr std::size_t half = 25, times = 20;
    std::mt19937_64 rng(seed);
    std::vector<EntityId> perm(half);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::bernoulli_distribution present(0.6);
    std::uniform_int_distribution<int> split(0, 9);
    std::vector<Fact> facts;
    for (TimeId t = 0; t < times; ++t) {
        for (PredicateId p = 0; p < 4; ++p) {
            for (EntityId l = 0; l < half; ++l) {
                if (!present(rng)) continue;
                const EntityId r = static_cast<EntityId>(half + perm[l]);
                const bool reversed = p == 0 && t >= times / 2;
                int sp = split(rng);
                facts.push_back(fact(reversed ? r : l, p, reversed ? l : r, t, t,
                                     sp < 8 ? Split::train : (sp == 8 ? Split::valid : Split::test)));
            }
        }
    }
    return make_graph(2 * half, 4, times, std::move(facts));
}

// Exhaustive optimum over segmentations with exactly `segments` segments.
inline double exhaustive_cost(const cpd::Signal& sig, std::size_t segments, double gamma,
                              std::vector<std::size_t>* best_bkps = nullptr) {
    const std::size_t l = sig.size();
    // dp[k][j] = best cost of splitting x_0..x_{j-1} into k segments.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(segments + 1, std::vector<double>(l + 1, inf));
    std::vector<std::vector<std::size_t>> arg(segments + 1, std::vector<std::size_t>(l + 1, 0));
    dp[0][0] = 0.0;
    for (std::size_t k = 1; k <= segments; ++k)
        for (std::size_t j = k; j <= l; ++j)
            for (std::size_t i = k - 1; i < j; ++i) {
                if (dp[k - 1][i] == inf) continue;
                double c = dp[k - 1][i] + cpd::segment_cost(sig, i, j, gamma);
                if (c < dp[k][j]) {
                    dp[k][j] = c;
                    arg[k][j] = i;
                }
            }
    if (best_bkps) {
        best_bkps->clear();
        std::size_t j = l;
        for (std::size_t k = segments; k > 0; --k) {
            best_bkps->insert(best_bkps->begin(), j);
            j = arg[k][j];
        }
    }
    return dp[segments][l];
}

// Score every candidate, sort, drop filtered ones, locate the target.
inline std::vector<RankRecord> brute_force_ranks(const EmbeddingModel& m, std::span<const StaticTriple> test,
                                                 std::span<const StaticTriple> known, TiePolicy ties) {
    std::set<StaticTriple> known_set(known.begin(), known.end());
    std::vector<RankRecord> out;
    for (const auto& t : test) {
        for (Side side : {Side::subject, Side::object}) {
            std::vector<std::pair<double, EntityId>> all;
            for (EntityId e = 0; e < m.entity_count(); ++e) {
                StaticTriple c = t;
                (side == Side::subject ? c.s : c.o) = e;
                all.emplace_back(score(m, c), e);
            }
            std::sort(all.begin(), all.end());
            const EntityId target = side == Side::subject ? t.s : t.o;
            const double ts = score(m, t);
            std::vector<std::pair<double, EntityId>> kept;
            for (const auto& [sc, e] : all) {
                StaticTriple c = t;
                (side == Side::subject ? c.s : c.o) = e;
                if (e != target && known_set.count(c)) continue;
                kept.emplace_back(sc, e);
            }
            // First and last position of the target's score in the kept list.
            std::size_t first = kept.size(), last = 0;
            for (std::size_t i = 0; i < kept.size(); ++i) {
                if (kept[i].first == ts) {
                    first = std::min(first, i);
                    last = i;
                }
            }
            double rank = 0.0;
            switch (ties) {
            case TiePolicy::optimistic: rank = static_cast<double>(first) + 1.0; break;
            case TiePolicy::pessimistic: rank = static_cast<double>(last) + 1.0; break;
            case TiePolicy::mean: rank = 0.5 * static_cast<double>(first + last) + 1.0; break;
            }
            out.push_back({t, side, rank});
        }
    }
    return out;
}

// Directory where a test may write scratch files.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("tkg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::filesystem::path sample_dir() {
    if (const char* v = std::getenv("TKG_SAMPLE_DIR")) return v;
    return "data/sample";
}

} // namespace tkg::testing
