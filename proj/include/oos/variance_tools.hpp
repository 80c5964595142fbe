#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "oos/dataset.hpp"
#include "oos/errors.hpp"
#include "oos/estimator.hpp"
#include "oos/rng.hpp"

namespace oos {

/// A target linear combination t_sigma * sigma^2 + t_c * C + t_mu * mu^2 of
/// the unknown second-moment parameters of an exchangeable sequence
/// (variance sigma^2, common covariance C, squared mean mu^2).
struct MomentTarget {
    double t_sigma = 0.0;
    double t_c = 0.0;
    double t_mu = 0.0;
};

/// Whether a quadratic estimator with the target expectation exists, and if
/// so the witness weights: a on the sum of X_j^2 terms, b on the sum of
/// X_j X_j' terms.
struct FeasibilityResult {
    bool feasible = false;
    std::optional<std::pair<double, double>> coefficients;
};

/// A quadratic form sum a_j X_j^2 + sum b_{jj'} X_j X_{j'} has expectation
/// a (sigma^2 + mu^2) + b (C + mu^2) with a, b the total weights, so a target
/// is attainable exactly when t_mu = t_sigma + t_c; the witness is then
/// (a, b) = (t_sigma, t_c).
inline FeasibilityResult moment_feasibility(const MomentTarget& target) {
    if (std::abs(target.t_mu - (target.t_sigma + target.t_c)) > 1e-12) return {false, {}};
    return {true, std::make_pair(target.t_sigma, target.t_c)};
}

/// Unbiased sample variance (n-1 divisor). For exchangeable data with common
/// covariance C its expectation is sigma^2 - C, not sigma^2.
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2)
        throw TooFewObservationsError("sample variance needs at least 2 observations");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

/// Four-point symmetric pmf used as the iid part of the pathological
/// exchangeable sequence:
///   +/- sqrt(sigma2 - c)/2   with probability (n^2 - 1) / (2n^2 - 1/2) each,
///   +/- n (sigma2 - c)       with probability 3 / (8n^2 - 2) each.
/// The probabilities sum to 1 exactly. Note the variance is
/// (d (n^2-1) + 3 n^2 d^2) / (4n^2 - 1) with d = sigma2 - c, which equals d
/// only when d = 1; variance() reports the true direct-summation value.
class PathologicalPmf {
  public:
    PathologicalPmf(std::size_t n, double sigma2, double c) {
        if (n < 2) throw InvalidMomentsError("pathological pmf needs n >= 2");
        if (!(c > 0.0) || !(c < sigma2))
            throw InvalidMomentsError("pathological pmf needs 0 < c < sigma2");
        const double d = sigma2 - c;
        const double nn = static_cast<double>(n);
        const double p_small = (nn * nn - 1.0) / (2.0 * nn * nn - 0.5);
        const double p_big = 3.0 / (8.0 * nn * nn - 2.0);
        support_ = {-nn * d, -std::sqrt(d) / 2.0, std::sqrt(d) / 2.0, nn * d};
        probability_ = {p_big, p_small, p_small, p_big};
    }

    std::span<const double> support() const { return support_; }
    std::span<const double> probabilities() const { return probability_; }

    double probability_sum() const {
        return probability_[0] + probability_[1] + probability_[2] + probability_[3];
    }

    double mean() const {
        double m = 0.0;
        for (int i = 0; i < 4; ++i) m += support_[i] * probability_[i];
        return m;
    }

    double variance() const {
        const double m = mean();
        double v = 0.0;
        for (int i = 0; i < 4; ++i) v += probability_[i] * (support_[i] - m) * (support_[i] - m);
        return v;
    }

    double sample(std::mt19937_64& engine) const {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(engine);
        double cumulative = 0.0;
        for (int i = 0; i < 3; ++i) {
            cumulative += probability_[i];
            if (u < cumulative) return support_[i];
        }
        return support_[3];
    }

  private:
    std::array<double, 4> support_{};
    std::array<double, 4> probability_{};
};

inline PathologicalPmf pathological_pmf(std::size_t n, double sigma2, double c) {
    return PathologicalPmf(n, sigma2, c);
}

/// One draw of the pathological exchangeable sequence X_j = Y_j + eps with
/// Y_j iid from the pmf and a single shared eps ~ N(mu, c). The Y_j and eps
/// are exposed so the shift-cancellation property s2(X) = s2(Y) can be
/// inspected directly.
struct ExchangeableDraw {
    std::vector<double> x;
    std::vector<double> y;
    double shared_noise = 0.0;
};

inline ExchangeableDraw pathological_draw(std::size_t n, double sigma2, double c, double mu,
                                          std::uint64_t seed) {
    const PathologicalPmf pmf(n, sigma2, c);
    auto engine = make_engine(seed);
    ExchangeableDraw draw;
    draw.shared_noise = mu + std::sqrt(c) * std::normal_distribution<double>(0.0, 1.0)(engine);
    draw.y.resize(n);
    draw.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        draw.y[i] = pmf.sample(engine);
        draw.x[i] = draw.y[i] + draw.shared_noise;
    }
    return draw;
}

/// The X-sequence only; exchangeable with mean mu, variance sigma2 and
/// pairwise covariance c. Deterministic under seed.
inline std::vector<double> pathological_sequence(std::size_t n, double sigma2, double c, double mu,
                                                 std::uint64_t seed) {
    return pathological_draw(n, sigma2, c, mu, seed).x;
}

struct VarianceGrowthRow {
    std::size_t n = 0;
    double mean_s2 = 0.0;
    double var_s2 = 0.0;
};

/// Empirical mean and variance of the sample variance s2 across `reps`
/// replicates for each n in the grid. With 0 < c < sigma2 the replicates are
/// pathological sequences and var(s2) grows with n; with c = 0 the replicates
/// are plain iid N(mu, sigma2) draws and var(s2) ~ 2 sigma2^2/(n-1) decays,
/// serving as the contrast control.
inline std::vector<VarianceGrowthRow> variance_growth_study(std::span<const std::size_t> n_grid,
                                                            std::size_t reps, double sigma2,
                                                            double c, double mu,
                                                            std::uint64_t seed) {
    if (reps < 100) throw TooFewReplicatesError("variance growth study needs reps >= 100");
    if (c != 0.0 && (!(c > 0.0) || !(c < sigma2)))
        throw InvalidMomentsError("need 0 < c < sigma2, or c = 0 for the iid control");
    if (!(sigma2 > 0.0)) throw InvalidMomentsError("sigma2 must be positive");

    std::vector<VarianceGrowthRow> rows;
    rows.reserve(n_grid.size());
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        const std::size_t n = n_grid[ni];
        std::vector<double> s2(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            const std::uint64_t replicate_seed = derive_seed(seed, ni, r);
            if (c == 0.0) {
                auto engine = make_engine(replicate_seed);
                std::normal_distribution<double> normal(mu, std::sqrt(sigma2));
                std::vector<double> xs(n);
                for (auto& x : xs) x = normal(engine);
                s2[r] = sample_variance(xs);
            } else {
                s2[r] = sample_variance(pathological_sequence(n, sigma2, c, mu, replicate_seed));
            }
        }
        double mean = 0.0;
        for (double v : s2) mean += v;
        mean /= static_cast<double>(reps);
        double var = 0.0;
        for (double v : s2) var += (v - mean) * (v - mean);
        var /= static_cast<double>(reps - 1);
        rows.push_back({n, mean, var});
    }
    return rows;
}

/// Stratified bootstrap variance of the out-of-source error estimate:
/// resamples n_j observations with replacement within each source, recomputes
/// the estimate, and returns the variance of the B replicate values
/// (B-1 divisor). Deterministic under seed; replicate r uses the derived
/// stream (seed, 0, r), and resampling draws from the sorted source values so
/// the result is invariant to within-source permutation of the input.
template <decision_rule R, loss_function L>
double bootstrap_variance(const MultiSourceDataset& dataset, const R& rule, const L& loss,
                          std::size_t b, std::uint64_t seed,
                          std::optional<unsigned> workers = {}) {
    if (b < 100) throw TooFewBootstrapError("bootstrap needs B >= 100 replicates");
    const std::size_t k = dataset.source_count();
    for (std::size_t j = 0; j < k; ++j)
        if (dataset.source_size(j) < 2)
            throw TooFewPerSourceError("bootstrap needs at least 2 observations per source");

    const auto sources = detail::sorted_sources(dataset);
    std::vector<double> replicates(b);
    parallel_for_indexed(b, worker_count(workers), [&](std::size_t r) {
        auto engine = make_engine(derive_seed(seed, 0, r));
        std::vector<std::pair<SourceLabel, std::vector<double>>> groups;
        groups.reserve(k);
        for (std::size_t j = 0; j < k; ++j) {
            const auto& values = sources[j];
            std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
            std::vector<double> resampled(values.size());
            for (auto& v : resampled) v = values[pick(engine)];
            groups.emplace_back(dataset.label(j), std::move(resampled));
        }
        replicates[r] = oos_estimate(MultiSourceDataset(std::move(groups)), rule, loss).total;
    });

    double mean = 0.0;
    for (double v : replicates) mean += v;
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (double v : replicates) var += (v - mean) * (v - mean);
    return var / static_cast<double>(b - 1);
}

}  // namespace oos
