#pragma once
// Offline change point detection: RBF kernel, kernelized mean-change cost and
// bottom-up segmentation with a residual (total cost) budget.

#include "tkg/error.hpp"
#include "tkg/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace tkg::cpd {

// Samples x_0..x_{l-1} of equal dimension, stored row-major.
class Signal {
public:
    Signal() = default;

    Signal(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
        if (dim_ == 0 ? !data_.empty() : data_.size() % dim_ != 0)
            throw DataError("signal data is not a whole number of samples");
    }

    static Signal from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        std::vector<double> data;
        for (const auto& r : rows) {
            if (r.size() != rows.front().size()) throw DataError("signal samples differ in dimension");
            data.insert(data.end(), r.begin(), r.end());
        }
        Signal s;
        s.dim_ = rows.front().size();
        s.data_ = std::move(data);
        s.len_ = rows.size();
        return s;
    }

    // Convenience for scalar signals.
    static Signal scalar(std::span<const double> values) {
        return Signal(1, std::vector<double>(values.begin(), values.end()));
    }

    std::size_t size() const noexcept { return dim_ == 0 ? len_ : data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::size_t len_ = 0; // only used for zero-dimensional samples
};

// How the breakpoints left after merging are positioned. The count is always
// the one bottom-up merging stops at.
enum class Placement { greedy, local, exact };

inline std::string_view to_string(Placement p) {
    switch (p) {
    case Placement::greedy: return "greedy";
    case Placement::local: return "local";
    case Placement::exact: return "exact";
    }
    return "?";
}

inline std::optional<Placement> parse_placement(std::string_view s) {
    for (auto p : {Placement::greedy, Placement::local, Placement::exact})
        if (s == to_string(p)) return p;
    return std::nullopt;
}

struct CpdConfig {
    std::size_t min_size = 1;
    std::size_t jump = 1;
    double epsilon = 1.0;
    std::optional<double> gamma;
    Placement placement = Placement::exact;

    void validate() const {
        if (min_size < 1) throw ConfigError("cpd: min_size must be >= 1");
        if (jump < 1) throw ConfigError("cpd: jump must be >= 1");
        if (!(epsilon > 0)) throw ConfigError("cpd: epsilon must be > 0");
        if (gamma && !(*gamma > 0)) throw ConfigError("cpd: gamma must be > 0");
    }
};

struct Segmentation {
    std::vector<std::size_t> breakpoints; // strictly increasing, last == signal length
    double gamma = 1.0;
    double cost = 0.0;
    bool constant = false; // signal had no variation; no search was run
    bool too_short = false; // signal shorter than 2 * min_size
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("rbf: dimension mismatch");
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double diff = a[k] - b[k];
        d += diff * diff;
    }
    return d;
}

inline double rbf(std::span<const double> x1, std::span<const double> x2, double gamma) {
    return std::exp(-gamma * squared_distance(x1, x2));
}

struct Bandwidth {
    double gamma = 1.0;
    bool constant = false;
};

inline constexpr std::size_t median_pair_limit = 10000;

// gamma = 1 / median of pairwise squared distances. At most
// median_pair_limit pairs are used, drawn with a fixed seed.
inline Bandwidth median_heuristic(const Signal& signal) {
    const std::size_t l = signal.size();
    if (l < 2) return {1.0, true};
    const std::size_t total = l * (l - 1) / 2;
    std::vector<double> d;
    bool all_zero = true;
    if (total <= median_pair_limit) {
        d.reserve(total);
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = i + 1; j < l; ++j) d.push_back(squared_distance(signal[i], signal[j]));
    } else {
        std::mt19937_64 rng(0x6d656469616eULL);
        std::uniform_int_distribution<std::size_t> pick(0, l - 1);
        d.reserve(median_pair_limit);
        while (d.size() < median_pair_limit) {
            auto i = pick(rng), j = pick(rng);
            if (i == j) continue;
            d.push_back(squared_distance(signal[i], signal[j]));
        }
        // The subsample can miss the only differing sample; check exhaustively.
        for (std::size_t i = 1; i < l && all_zero; ++i)
            if (squared_distance(signal[0], signal[i]) != 0.0) all_zero = false;
    }
    if (total <= median_pair_limit)
        all_zero = std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
    if (all_zero) return {1.0, true};

    const std::size_t n = d.size();
    std::nth_element(d.begin(), d.begin() + n / 2, d.end());
    double med = d[n / 2];
    if (n % 2 == 0) {
        double lower = *std::max_element(d.begin(), d.begin() + n / 2);
        med = 0.5 * (med + lower);
    }
    if (med == 0.0) return {1.0, false};
    return {1.0 / med, false};
}

// c(S_{a,b}) in kernel form, by direct summation.
inline double segment_cost(const Signal& signal, std::size_t a, std::size_t b, double gamma) {
    if (!(a < b && b <= signal.size())) throw DataError("segment_cost: empty or out-of-range segment");
    double sum = 0.0;
    for (std::size_t i = a; i < b; ++i)
        for (std::size_t j = a; j < b; ++j) sum += rbf(signal[i], signal[j], gamma);
    const double n = static_cast<double>(b - a);
    return std::max(0.0, n - sum / n);
}

// O(1) segment costs from 2-D prefix sums of the Gram matrix.
class KernelCost {
public:
    KernelCost(const Signal& signal, double gamma) : n_(signal.size()), prefix_((n_ + 1) * (n_ + 1), 0.0) {
        std::vector<double> gram(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            gram[i * n_ + i] = 1.0;
            for (std::size_t j = i + 1; j < n_; ++j) gram[i * n_ + j] = gram[j * n_ + i] = rbf(signal[i], signal[j], gamma);
        }
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                P(i + 1, j + 1) = gram[i * n_ + j] + P(i, j + 1) + P(i + 1, j) - P(i, j);
    }

    double operator()(std::size_t a, std::size_t b) const {
        const double sum = P(b, b) - P(a, b) - P(b, a) + P(a, a);
        const double n = static_cast<double>(b - a);
        return std::max(0.0, n - sum / n);
    }

private:
    double& P(std::size_t i, std::size_t j) { return prefix_[i * (n_ + 1) + j]; }
    double P(std::size_t i, std::size_t j) const { return prefix_[i * (n_ + 1) + j]; }

    std::size_t n_;
    std::vector<double> prefix_;
};

// Coordinate descent over interior breakpoints: each one moves to the grid
// position minimising the cost of its two segments. Keeps the count, never
// raises the total. Returns the new total.
inline double refine_breakpoints(const KernelCost& cost, std::vector<std::size_t>& bounds, const CpdConfig& cfg) {
    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t i = 1; i + 1 < bounds.size(); ++i) {
            const std::size_t lo = bounds[i - 1], hi = bounds[i + 1];
            double best = cost(lo, bounds[i]) + cost(bounds[i], hi);
            for (std::size_t k = lo + cfg.min_size; k + cfg.min_size <= hi; ++k) {
                if (k % cfg.jump) continue;
                double c = cost(lo, k) + cost(k, hi);
                if (c < best - 1e-12) {
                    best = c;
                    bounds[i] = k;
                    moved = true;
                }
            }
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) total += cost(bounds[i], bounds[i + 1]);
    return total;
}

// Dynamic program over the jump grid: the cheapest segmentation with the same
// number of segments as `bounds`, every segment at least min_size long.
inline double place_optimally(const KernelCost& cost, std::vector<std::size_t>& bounds, std::size_t l,
                              const CpdConfig& cfg) {
    const std::size_t segments = bounds.size() - 1;
    if (segments < 2) return cost(0, l);
    std::vector<std::size_t> grid{0};
    for (std::size_t k = cfg.jump; k < l; k += cfg.jump) grid.push_back(k);
    grid.push_back(l);
    const std::size_t n = grid.size();
    const double inf = std::numeric_limits<double>::infinity();
    // best[j][c]: cheapest j segments covering [0, grid[c]); from[j][c]: previous grid index.
    std::vector<std::vector<double>> best(segments + 1, std::vector<double>(n, inf));
    std::vector<std::vector<std::size_t>> from(segments + 1, std::vector<std::size_t>(n, 0));
    best[0][0] = 0.0;
    for (std::size_t j = 1; j <= segments; ++j)
        for (std::size_t c = 1; c < n; ++c)
            for (std::size_t p = 0; p < c; ++p) {
                if (best[j - 1][p] == inf || grid[c] - grid[p] < cfg.min_size) continue;
                const double v = best[j - 1][p] + cost(grid[p], grid[c]);
                if (v < best[j][c] - 1e-12) {
                    best[j][c] = v;
                    from[j][c] = p;
                }
            }
    // The merged result is itself feasible, so keep it unless strictly beaten.
    double current = 0.0;
    for (std::size_t i = 0; i < segments; ++i) current += cost(bounds[i], bounds[i + 1]);
    if (!(best[segments][n - 1] < current - 1e-12)) return current;
    std::size_t c = n - 1;
    for (std::size_t j = segments; j > 0; --j) {
        bounds[j] = grid[c];
        c = from[j][c];
    }
    return best[segments][n - 1];
}

// Total cost of a segmentation given by its breakpoints (last == l).
inline double segmentation_cost(const Signal& signal, std::span<const std::size_t> breakpoints, double gamma) {
    double total = 0.0;
    std::size_t start = 0;
    for (auto k : breakpoints) {
        total += segment_cost(signal, start, k, gamma);
        start = k;
    }
    return total;
}

// Bottom-up search: start from breakpoints every `jump` samples and merge the
// adjacent pair with the smallest cost increase until the next merge would
// push the total cost above epsilon. Ties go to the leftmost pair.
inline Segmentation bottom_up(const Signal& signal, const CpdConfig& cfg) {
    cfg.validate();
    const std::size_t l = signal.size();
    Segmentation out;
    if (l == 0) throw DataError("bottom_up: empty signal");
    if (l < 2 * cfg.min_size) {
        out.breakpoints = {l};
        out.too_short = true;
        return out;
    }
    Bandwidth bw = cfg.gamma ? Bandwidth{*cfg.gamma, false} : median_heuristic(signal);
    out.gamma = bw.gamma;
    if (bw.constant) {
        out.breakpoints = {l};
        out.constant = true;
        return out;
    }

    std::vector<std::size_t> bounds{0};
    for (std::size_t k = cfg.jump; k < l; k += cfg.jump)
        if (k - bounds.back() >= cfg.min_size && l - k >= cfg.min_size) bounds.push_back(k);
    bounds.push_back(l);

    KernelCost cost(signal, bw.gamma);
    std::vector<double> seg_cost;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        seg_cost.push_back(cost(bounds[i], bounds[i + 1]));
        total += seg_cost.back();
    }

    while (seg_cost.size() > 1) {
        std::size_t best = 0;
        double best_gain = std::numeric_limits<double>::infinity();
        double best_merged = 0.0;
        for (std::size_t i = 0; i + 1 < seg_cost.size(); ++i) {
            double merged = cost(bounds[i], bounds[i + 2]);
            double gain = merged - seg_cost[i] - seg_cost[i + 1];
            if (gain < best_gain) {
                best_gain = gain;
                best = i;
                best_merged = merged;
            }
        }
        if (total + best_gain > cfg.epsilon) break;
        total += best_gain;
        seg_cost[best] = best_merged;
        seg_cost.erase(seg_cost.begin() + static_cast<std::ptrdiff_t>(best) + 1);
        bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    }
    if (cfg.placement == Placement::local) total = refine_breakpoints(cost, bounds, cfg);
    if (cfg.placement == Placement::exact) total = place_optimally(cost, bounds, l, cfg);
    out.breakpoints.assign(bounds.begin() + 1, bounds.end());
    out.cost = total;
    return out;
}

// Scales each row to unit Euclidean norm; zero rows stay zero.
inline Signal normalize(const SignatureSeries& series) {
    std::vector<double> data = series.matrix;
    const std::size_t d = series.cols();
    for (std::size_t t = 0; t < series.rows; ++t) {
        double norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) norm += data[t * d + c] * data[t * d + c];
        if (norm == 0.0) continue;
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < d; ++c) data[t * d + c] /= norm;
    }
    if (d == 0) return Signal::from_rows(std::vector<std::vector<double>>(series.rows));
    return Signal(d, std::move(data));
}

} // namespace tkg::cpd
