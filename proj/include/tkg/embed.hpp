#pragma once
// TransE with self-adversarial negative sampling, trained with Adam.

#include "tkg/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace tkg {

enum class Norm { l1, l2 };

inline std::string_view to_string(Norm n) { return n == Norm::l1 ? "L1" : "L2"; }

inline std::optional<Norm> parse_norm(std::string_view s) {
    if (s == "L1" || s == "l1" || s == "1") return Norm::l1;
    if (s == "L2" || s == "l2" || s == "2") return Norm::l2;
    return std::nullopt;
}

// Dense entity and predicate vectors, row-major.
struct EmbeddingModel {
    std::size_t dim = 0;
    Norm norm = Norm::l1;
    std::vector<double> entities;
    std::vector<double> predicates;

    EmbeddingModel() = default;
    EmbeddingModel(std::size_t n_entities, std::size_t n_predicates, std::size_t d, Norm n)
        : dim(d), norm(n), entities(n_entities * d, 0.0), predicates(n_predicates * d, 0.0) {}

    std::size_t entity_count() const noexcept { return dim == 0 ? 0 : entities.size() / dim; }
    std::size_t predicate_count() const noexcept { return dim == 0 ? 0 : predicates.size() / dim; }

    std::span<double> entity(EntityId e) { return {entities.data() + std::size_t{e} * dim, dim}; }
    std::span<const double> entity(EntityId e) const { return {entities.data() + std::size_t{e} * dim, dim}; }
    std::span<double> predicate(PredicateId p) { return {predicates.data() + std::size_t{p} * dim, dim}; }
    std::span<const double> predicate(PredicateId p) const {
        return {predicates.data() + std::size_t{p} * dim, dim};
    }

    bool finite() const {
        auto ok = [](double v) { return std::isfinite(v); };
        return std::all_of(entities.begin(), entities.end(), ok) && std::all_of(predicates.begin(), predicates.end(), ok);
    }

    friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

inline void check_ids(const EmbeddingModel& m, const StaticTriple& t) {
    if (t.s >= m.entity_count() || t.o >= m.entity_count() || t.p >= m.predicate_count())
        throw DataError("triple (" + std::to_string(t.s) + "," + std::to_string(t.p) + "," + std::to_string(t.o) +
                        ") is out of the model's range");
}

// φ(s,p,o) = ‖e_s + e_p − e_o‖. Lower is more plausible.
inline double score(const EmbeddingModel& m, const StaticTriple& t) {
    check_ids(m, t);
    auto s = m.entity(t.s), p = m.predicate(t.p), o = m.entity(t.o);
    double acc = 0.0;
    if (m.norm == Norm::l1) {
        for (std::size_t k = 0; k < m.dim; ++k) acc += std::abs(s[k] + p[k] - o[k]);
        return acc;
    }
    for (std::size_t k = 0; k < m.dim; ++k) {
        double v = s[k] + p[k] - o[k];
        acc += v * v;
    }
    return std::sqrt(acc);
}

enum class NegativeSharing { per_batch, per_positive };

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t dim = 100;
    double learning_rate = 1e-3;
    std::size_t batch_size = 500;
    // Total per batch (per_batch) or per positive (per_positive).
    std::size_t negatives = 500;
    NegativeSharing sharing = NegativeSharing::per_batch;
    double margin = 1.0;
    double temperature = 0.5;
    Norm norm = Norm::l1;
    std::uint64_t seed = 0;
    bool detach_weights = true;

    void validate() const {
        if (dim == 0) throw ConfigError("train: dim must be positive");
        if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
        if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
        if (negatives == 0) throw ConfigError("train: negatives must be positive");
        if (!(margin > 0)) throw ConfigError("train: margin must be positive");
        if (!(temperature > 0)) throw ConfigError("train: temperature must be positive");
    }
};

// Xavier-uniform with fan_in = fan_out = d.
inline EmbeddingModel xavier_init(std::size_t n_entities, std::size_t n_predicates, std::size_t d, Norm norm,
                                  std::mt19937_64& rng) {
    EmbeddingModel m(n_entities, n_predicates, d, norm);
    const double bound = std::sqrt(6.0 / static_cast<double>(2 * d));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : m.entities) v = u(rng);
    for (auto& v : m.predicates) v = u(rng);
    return m;
}

// Corrupts subject or object (fair coin) with a uniformly drawn entity. A
// draw equal to the positive is redrawn once and then kept.
inline std::vector<StaticTriple> negative_sample(const StaticTriple& t, std::size_t n, std::size_t entity_count,
                                                 std::mt19937_64& rng) {
    std::vector<StaticTriple> out;
    out.reserve(n);
    std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(entity_count - 1));
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        const bool subject = coin(rng);
        StaticTriple neg = t;
        for (int attempt = 0; attempt < 2; ++attempt) {
            (subject ? neg.s : neg.o) = pick(rng);
            if (neg != t) break;
        }
        out.push_back(neg);
    }
    return out;
}

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// w_i = softmax_i(α (γ_m − φ(neg_i))).
inline std::vector<double> adversarial_weights(const EmbeddingModel& m, std::span<const StaticTriple> negatives,
                                               double margin, double temperature) {
    std::vector<double> w(negatives.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = temperature * (margin - score(m, negatives[i]));
    const double mx = *std::max_element(w.begin(), w.end());
    double z = 0.0;
    for (auto& v : w) z += (v = std::exp(v - mx));
    for (auto& v : w) v /= z;
    return w;
}

// Gradient buffers shaped like the model.
struct Gradient {
    std::vector<double> entities;
    std::vector<double> predicates;

    explicit Gradient(const EmbeddingModel& m) : entities(m.entities.size(), 0.0), predicates(m.predicates.size(), 0.0) {}

    void clear() {
        std::fill(entities.begin(), entities.end(), 0.0);
        std::fill(predicates.begin(), predicates.end(), 0.0);
    }
};

namespace detail {

// Adds scale * dφ/dθ for triple t into g.
inline void add_score_gradient(const EmbeddingModel& m, const StaticTriple& t, double scale, Gradient& g) {
    auto s = m.entity(t.s), p = m.predicate(t.p), o = m.entity(t.o);
    const std::size_t d = m.dim;
    double* gs = g.entities.data() + std::size_t{t.s} * d;
    double* go = g.entities.data() + std::size_t{t.o} * d;
    double* gp = g.predicates.data() + std::size_t{t.p} * d;
    double norm = 0.0;
    if (m.norm == Norm::l2) {
        for (std::size_t k = 0; k < d; ++k) {
            double v = s[k] + p[k] - o[k];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) return;
    }
    for (std::size_t k = 0; k < d; ++k) {
        double v = s[k] + p[k] - o[k];
        double dv = m.norm == Norm::l1 ? (v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0)) : v / norm;
        dv *= scale;
        gs[k] += dv;
        gp[k] += dv;
        go[k] -= dv;
    }
}

} // namespace detail

// L = −log σ(γ_m − φ(pos)) − Σ_i w_i log σ(φ(neg_i) − γ_m) for fixed weights w.
inline double loss_with_weights(const EmbeddingModel& m, const StaticTriple& positive,
                                std::span<const StaticTriple> negatives, std::span<const double> weights,
                                double margin) {
    double loss = -log_sigmoid(margin - score(m, positive));
    for (std::size_t i = 0; i < negatives.size(); ++i)
        loss -= weights[i] * log_sigmoid(score(m, negatives[i]) - margin);
    return loss;
}

// Self-adversarial loss of one positive and its negatives. If `grad` is
// non-null, scale * dL/dθ is accumulated into it. With detach_weights the
// adversarial weights are treated as constants.
inline double self_adversarial_loss(const EmbeddingModel& m, const StaticTriple& positive,
                                    std::span<const StaticTriple> negatives, double margin, double temperature,
                                    Gradient* grad = nullptr, double scale = 1.0, bool detach_weights = true) {
    if (negatives.empty()) throw DataError("self_adversarial_loss: no negatives");
    const auto w = adversarial_weights(m, negatives, margin, temperature);
    const double pos_score = score(m, positive);
    double loss = -log_sigmoid(margin - pos_score);
    std::vector<double> neg_scores(negatives.size()), log_terms(negatives.size());
    double weighted_log = 0.0;
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        neg_scores[i] = score(m, negatives[i]);
        log_terms[i] = log_sigmoid(neg_scores[i] - margin);
        loss -= w[i] * log_terms[i];
        weighted_log += w[i] * log_terms[i];
    }
    if (grad) {
        detail::add_score_gradient(m, positive, scale * sigmoid(pos_score - margin), *grad);
        for (std::size_t i = 0; i < negatives.size(); ++i) {
            double dphi = -w[i] * sigmoid(margin - neg_scores[i]);
            if (!detach_weights) dphi += temperature * w[i] * (log_terms[i] - weighted_log);
            detail::add_score_gradient(m, negatives[i], scale * dphi, *grad);
        }
    }
    return loss;
}

// Adam over one flat parameter block.
class Adam {
public:
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
        }
    }

    std::size_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

struct TrainLog {
    std::vector<double> epoch_loss; // mean loss per positive
};

// Trains on `triples` over the given id spaces. Deterministic for a seed.
inline EmbeddingModel train(std::span<const StaticTriple> triples, std::size_t entity_count,
                            std::size_t predicate_count, const TrainConfig& cfg, TrainLog* log = nullptr) {
    cfg.validate();
    if (triples.empty()) throw DataError("train: empty training set");
    if (entity_count == 0 || predicate_count == 0) throw DataError("train: empty vocabulary");
    std::mt19937_64 rng(cfg.seed);
    EmbeddingModel m = xavier_init(entity_count, predicate_count, cfg.dim, cfg.norm, rng);
    for (const auto& t : triples) check_ids(m, t);

    Gradient grad(m);
    Adam adam_e(m.entities.size(), cfg.learning_rate);
    Adam adam_p(m.predicates.size(), cfg.learning_rate);
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::size_t batch = end - start;
            const std::size_t per_positive = cfg.sharing == NegativeSharing::per_batch
                                                 ? (cfg.negatives + batch - 1) / batch
                                                 : cfg.negatives;
            grad.clear();
            double batch_loss = 0.0;
            const double scale = 1.0 / static_cast<double>(batch);
            for (std::size_t k = start; k < end; ++k) {
                const auto& pos = triples[order[k]];
                auto negs = negative_sample(pos, per_positive, entity_count, rng);
                double l = self_adversarial_loss(m, pos, negs, cfg.margin, cfg.temperature, &grad, scale,
                                                 cfg.detach_weights);
                if (!std::isfinite(l)) {
                    throw NumericError("non-finite loss at step " + std::to_string(step) + " on triple (" +
                                       std::to_string(pos.s) + "," + std::to_string(pos.p) + "," +
                                       std::to_string(pos.o) + ")");
                }
                batch_loss += l;
            }
            adam_e.step(m.entities, grad.entities);
            adam_p.step(m.predicates, grad.predicates);
            epoch_loss += batch_loss;
        }
        if (!m.finite()) throw NumericError("non-finite parameters after epoch " + std::to_string(epoch));
        if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(triples.size()));
    }
    return m;
}

// Text checkpoint. Values use shortest round-trip formatting, so a
// save/load cycle is exact.
inline void save_model(std::ostream& out, const EmbeddingModel& m, std::string_view vocab_ref = "-") {
    out << "tkg-transe 1\n"
        << "norm " << to_string(m.norm) << '\n'
        << "dim " << m.dim << '\n'
        << "entities " << m.entity_count() << '\n'
        << "predicates " << m.predicate_count() << '\n'
        << "vocab " << vocab_ref << '\n';
    char buf[32];
    auto rows = [&](char tag, const std::vector<double>& data) {
        for (std::size_t r = 0; m.dim && r < data.size() / m.dim; ++r) {
            out << tag;
            for (std::size_t k = 0; k < m.dim; ++k) {
                auto res = std::to_chars(buf, buf + sizeof buf, data[r * m.dim + k]);
                out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
            }
            out << '\n';
        }
    };
    rows('E', m.entities);
    rows('P', m.predicates);
}

inline EmbeddingModel load_model(std::istream& in, std::string* vocab_ref = nullptr) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "tkg-transe" || version != 1) throw DataError("not a tkg-transe v1 checkpoint");
    std::string key, norm;
    std::size_t dim = 0, ne = 0, np = 0;
    std::string vocab;
    in >> key >> norm;
    if (key != "norm") throw DataError("checkpoint: expected norm");
    in >> key >> dim;
    if (key != "dim") throw DataError("checkpoint: expected dim");
    in >> key >> ne;
    if (key != "entities") throw DataError("checkpoint: expected entities");
    in >> key >> np;
    if (key != "predicates") throw DataError("checkpoint: expected predicates");
    in >> key >> vocab;
    if (key != "vocab") throw DataError("checkpoint: expected vocab");
    auto n = parse_norm(norm);
    if (!n) throw DataError("checkpoint: bad norm " + norm);
    EmbeddingModel m(ne, np, dim, *n);
    auto read_rows = [&](char tag, std::vector<double>& data) {
        for (std::size_t r = 0; dim && r < data.size() / dim; ++r) {
            char t = 0;
            in >> t;
            if (t != tag) throw DataError(std::string("checkpoint: expected row tag ") + tag);
            for (std::size_t k = 0; k < dim; ++k) {
                std::string tok;
                in >> tok;
                auto res = std::from_chars(tok.data(), tok.data() + tok.size(), data[r * dim + k]);
                if (res.ec != std::errc{}) throw DataError("checkpoint: bad value " + tok);
            }
        }
    };
    read_rows('E', m.entities);
    read_rows('P', m.predicates);
    if (!in) throw DataError("checkpoint: truncated");
    if (vocab_ref) *vocab_ref = vocab;
    return m;
}

// label<TAB>v1..vd rows for external visualization tools.
inline void export_vectors(std::ostream& out, std::span<const double> data, std::size_t dim,
                           const std::vector<std::string>& labels) {
    for (std::size_t r = 0; r < labels.size(); ++r) {
        out << labels[r];
        for (std::size_t k = 0; k < dim; ++k) out << '\t' << data[r * dim + k];
        out << '\n';
    }
}

} // namespace tkg
