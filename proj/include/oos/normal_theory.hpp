#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oos/dataset.hpp"
#include "oos/errors.hpp"

namespace oos {

/// Standard normal CDF, Phi(x) = erfc(-x / sqrt(2)) / 2.
/// Absolute error is that of libm's erfc (well below 1e-12).
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// E|X| for X ~ N(mu, sigma^2):
///   mu * [1 - 2*Phi(-mu/sigma)] + sigma * sqrt(2/pi) * exp(-mu^2 / (2 sigma^2)).
/// Always >= |mu|.
inline double folded_normal_mean(double mu, double sigma) {
    if (!(sigma > 0.0)) throw InvalidParamsError("folded_normal_mean requires sigma > 0");
    const double sqrt_2_over_pi = std::sqrt(2.0 / std::numbers::pi);
    return mu * (1.0 - 2.0 * std_normal_cdf(-mu / sigma)) +
           sigma * sqrt_2_over_pi * std::exp(-mu * mu / (2.0 * sigma * sigma));
}

/// Cov(X1^2, X2^2) for jointly normal (X1, X2) with means (mu1, mu2),
/// variances (var1, var2) and covariance cov12:
///   2 * cov12 * (cov12 + 2 * mu1 * mu2).
/// Requires cov12^2 <= var1 * var2.
inline double bivariate_square_cov(double mu1, double mu2, double var1, double var2,
                                   double cov12) {
    if (!(var1 > 0.0) || !(var2 > 0.0))
        throw InvalidParamsError("bivariate_square_cov requires positive variances");
    if (cov12 * cov12 > var1 * var2 * (1.0 + 1e-12))
        throw InvalidCovarianceError("covariance violates the Cauchy-Schwarz bound");
    return 2.0 * cov12 * (cov12 + 2.0 * mu1 * mu2);
}

/// Normal-theory description of a multi-source sample: per-source means and
/// variances, the sample shares, and the total sample size.
struct NormalSourceParams {
    std::vector<double> means;
    std::vector<double> variances;
    Proportions shares;
    std::size_t n = 0;

    NormalSourceParams(std::vector<double> means_, std::vector<double> variances_,
                       Proportions shares_, std::size_t n_)
        : means(std::move(means_)), variances(std::move(variances_)), shares(std::move(shares_)), n(n_) {
        const std::size_t k = shares.source_count();
        if (means.size() != k || variances.size() != k)
            throw InvalidParamsError("means/variances/proportions must have equal length");
        if (n == 0) throw InvalidParamsError("total sample size must be positive");
        for (std::size_t j = 0; j < k; ++j) {
            if (!(variances[j] > 0.0)) throw InvalidParamsError("source variances must be positive");
            if (static_cast<double>(n) * shares.p[j] < 1.0)
                throw InvalidParamsError("every source needs an expected count of at least 1");
        }
    }

    std::size_t source_count() const { return shares.source_count(); }
};

/// Out-of-source error under squared loss for normal sources:
///
///   sum_j p_j sigma_j^2
/// + sum_j od_j sum_{l != j} p_l (mu_j - mu_l)^2
/// + (1/n) sum_j od_j sum_{l != j} sigma_l^2
///
/// The third (small-sample) term carries the *training* source variance
/// sigma_l^2: it comes from Var(mean of source l) = sigma_l^2 / n_l entering
/// each pairwise error sigma_j^2 + sigma_l^2/n_l + (mu_j - mu_l)^2.
inline double normal_oos_squared(const NormalSourceParams& params) {
    const std::size_t k = params.source_count();
    const auto& p = params.shares.p;
    const auto& od = params.shares.od;
    double within = 0.0, separation = 0.0, small_sample = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        within += p[j] * params.variances[j];
        double sep_j = 0.0, ss_j = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            const double d = params.means[j] - params.means[l];
            sep_j += p[l] * d * d;
            ss_j += params.variances[l];
        }
        separation += od[j] * sep_j;
        small_sample += od[j] * ss_j;
    }
    return within + separation + small_sample / static_cast<double>(params.n);
}

/// Out-of-source error under absolute loss for normal sources:
/// sum_j od_j sum_{l != j} p_l * E|N(mu_j - mu_l, sigma_j^2 + sigma_l^2/(n p_l))|.
inline double normal_oos_absolute(const NormalSourceParams& params) {
    const std::size_t k = params.source_count();
    const auto& p = params.shares.p;
    const auto& od = params.shares.od;
    const double n = static_cast<double>(params.n);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            const double mean_diff = params.means[j] - params.means[l];
            const double sd = std::sqrt(params.variances[j] + params.variances[l] / (n * p[l]));
            total += od[j] * p[l] * folded_normal_mean(mean_diff, sd);
        }
    }
    return total;
}

/// Expected value of the pooled-complement cross validation statistic under
/// squared loss for normal sources:
///   sum_j p_j [ sigma_j^2 + varPool_j + (mu_j - muPool_j)^2 ]
/// where muPool_j / varPool_j are the mean and variance of the pooled
/// complement average of source j.
inline double normal_pooled_cv_squared(const NormalSourceParams& params) {
    const std::size_t k = params.source_count();
    const auto& p = params.shares.p;
    const double n = static_cast<double>(params.n);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double n_complement = n - n * p[j];
        double mu_pool = 0.0, var_pool = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            mu_pool += n * p[l] * params.means[l] / n_complement;
            var_pool += n * p[l] * params.variances[l] / (n_complement * n_complement);
        }
        const double d = params.means[j] - mu_pool;
        total += p[j] * (params.variances[j] + var_pool + d * d);
    }
    return total;
}

/// The six second-moment families entering the variance of the out-of-source
/// error estimator. Entries are NaN until set; index combinations that do not
/// exist (repeated indices) stay NaN.
///
///   v(j, l)             Var of one loss term: test point from source j,
///                       rule trained on source l.
///   c_same(j, l)        two distinct test points from source j sharing the
///                       rule of source l.
///   c_rule(j, l, l')    one test point from source j scored against the
///                       rules of two different sources l and l'.
///   c_cross(j, j', l)   test points from sources j and j' sharing the rule
///                       of source l.
///   c_entangled(j, j', l)  the source-j test point of the first term is also
///                       training data for the source-j rule scored by the
///                       second term's test point (from source j').
///   c_mutual(j, j')     each test point is scored against the rule trained
///                       on the *other* test point's source, so the two terms
///                       share both training samples.
class MomentComponents {
  public:
    explicit MomentComponents(std::size_t k)
        : k_(k),
          v_(k * k, nan()),
          c_same_(k * k, nan()),
          c_rule_(k * k * k, nan()),
          c_cross_(k * k * k, nan()),
          c_entangled_(k * k * k, nan()),
          c_mutual_(k * k, nan()) {}

    std::size_t source_count() const { return k_; }

    double v(std::size_t j, std::size_t l) const { return v_[pair(j, l)]; }
    double c_same(std::size_t j, std::size_t l) const { return c_same_[pair(j, l)]; }
    double c_rule(std::size_t j, std::size_t l, std::size_t lp) const {
        return c_rule_[triple(j, l, lp)];
    }
    double c_cross(std::size_t j, std::size_t jp, std::size_t l) const {
        return c_cross_[triple(j, jp, l)];
    }
    double c_entangled(std::size_t j, std::size_t jp, std::size_t l) const {
        return c_entangled_[triple(j, jp, l)];
    }
    double c_mutual(std::size_t j, std::size_t jp) const { return c_mutual_[pair(j, jp)]; }

    void set_v(std::size_t j, std::size_t l, double x) { v_[pair(j, l)] = x; }
    void set_c_same(std::size_t j, std::size_t l, double x) { c_same_[pair(j, l)] = x; }
    void set_c_rule(std::size_t j, std::size_t l, std::size_t lp, double x) {
        c_rule_[triple(j, l, lp)] = x;
    }
    void set_c_cross(std::size_t j, std::size_t jp, std::size_t l, double x) {
        c_cross_[triple(j, jp, l)] = x;
    }
    void set_c_entangled(std::size_t j, std::size_t jp, std::size_t l, double x) {
        c_entangled_[triple(j, jp, l)] = x;
    }
    void set_c_mutual(std::size_t j, std::size_t jp, double x) { c_mutual_[pair(j, jp)] = x; }

  private:
    static double nan() { return std::numeric_limits<double>::quiet_NaN(); }

    std::size_t pair(std::size_t a, std::size_t b) const {
        if (a >= k_ || b >= k_ || a == b) throw std::out_of_range("component index out of range");
        return a * k_ + b;
    }
    std::size_t triple(std::size_t a, std::size_t b, std::size_t c) const {
        if (a >= k_ || b >= k_ || c >= k_ || a == b || a == c || b == c)
            throw std::out_of_range("component index out of range");
        return (a * k_ + b) * k_ + c;
    }

    std::size_t k_;
    std::vector<double> v_, c_same_, c_rule_, c_cross_, c_entangled_, c_mutual_;
};

/// All second-moment components for normal sources under squared loss, each
/// one an application of bivariate_square_cov to the exact joint normal law
/// of the two residuals involved. Uses the source *variance* sigma_j^2
/// throughout (the per-term variance is 2 s^2 (s^2 + 2 m^2) with
/// s^2 = sigma_j^2 + sigma_l^2/(n p_l)).
inline MomentComponents normal_components_squared(const NormalSourceParams& params) {
    const std::size_t k = params.source_count();
    const auto& p = params.shares.p;
    const auto& mu = params.means;
    const auto& var = params.variances;
    const double n = static_cast<double>(params.n);

    // Variance of the fitted mean of source l.
    auto mean_var = [&](std::size_t l) { return var[l] / (n * p[l]); };

    MomentComponents c(k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            const double m = mu[j] - mu[l];
            const double s2 = var[j] + mean_var(l);
            c.set_v(j, l, bivariate_square_cov(m, m, s2, s2, s2));
            c.set_c_same(j, l, bivariate_square_cov(m, m, s2, s2, mean_var(l)));
        }
    }
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t lp = 0; lp < k; ++lp) {
                if (j == l || j == lp || l == lp) continue;
                // shared test point: residual covariance is sigma_j^2
                c.set_c_rule(j, l, lp,
                             bivariate_square_cov(mu[j] - mu[l], mu[j] - mu[lp],
                                                  var[j] + mean_var(l), var[j] + mean_var(lp),
                                                  var[j]));
            }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t jp = 0; jp < k; ++jp) {
            if (jp == j) continue;
            const double m_jjp = mu[j] - mu[jp];
            // both residuals subtract the other source's fitted mean
            const double s = mean_var(j) + mean_var(jp);
            c.set_c_mutual(j, jp,
                           bivariate_square_cov(m_jjp, -m_jjp, var[j] + s, var[jp] + s, -s));
            for (std::size_t l = 0; l < k; ++l) {
                if (l == j || l == jp) continue;
                c.set_c_cross(j, jp, l,
                              bivariate_square_cov(mu[j] - mu[l], mu[jp] - mu[l],
                                                   var[j] + mean_var(l), var[jp] + mean_var(l),
                                                   mean_var(l)));
                // the test point sits inside its own source's fitted mean,
                // giving residual covariance -sigma_j^2 / n_j
                c.set_c_entangled(j, jp, l,
                                  bivariate_square_cov(mu[j] - mu[l], mu[jp] - mu[j],
                                                       var[j] + mean_var(l),
                                                       var[jp] + mean_var(j), -mean_var(j)));
            }
        }
    }
    return c;
}

/// Variance of the out-of-source error estimator assembled from second-moment
/// components:
///
///   sum_j od_j^2/(n p_j) [ sum_{l!=j} p_l^2 (V_{j;l} + n(p_j - 1/n) C^same_{j;l})
///                          + sum_{l != l', both != j} p_l p_l' C^rule_{j;l,l'} ]
/// + sum_{j != j'} od_j od_j' [ sum_{l != j,j'} p_l (p_l C^cross_{j,j';l}
///                                                   + 2 p_j C^ent_{j,j';l})
///                              + p_j p_j' C^mutual_{j,j'} ]
///
/// The mutual term covers the block pair in which sources j and j' are each
/// scored against the other's rule; dropping it underestimates the variance
/// whenever k >= 2 (see the reference checks in the test suite).
/// Throws IncompleteComponentsError if any required entry is unset.
inline double theoretical_variance(const MomentComponents& components, const Proportions& shares,
                                   std::size_t n_total) {
    const std::size_t k = shares.source_count();
    if (components.source_count() != k)
        throw IncompleteComponentsError("component table size does not match proportions");
    const auto& p = shares.p;
    const auto& od = shares.od;
    const double n = static_cast<double>(n_total);

    auto need = [](double x) {
        if (!std::isfinite(x)) throw IncompleteComponentsError("missing second-moment component");
        return x;
    };

    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double inner = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            inner += p[l] * p[l] *
                     (need(components.v(j, l)) +
                      n * (p[j] - 1.0 / n) * need(components.c_same(j, l)));
        }
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t lp = 0; lp < k; ++lp) {
                if (l == lp || l == j || lp == j) continue;
                inner += p[l] * p[lp] * need(components.c_rule(j, l, lp));
            }
        total += od[j] * od[j] / (n * p[j]) * inner;
    }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t jp = 0; jp < k; ++jp) {
            if (jp == j) continue;
            double cross = 0.0;
            for (std::size_t l = 0; l < k; ++l) {
                if (l == j || l == jp) continue;
                cross += p[l] * (p[l] * need(components.c_cross(j, jp, l)) +
                                 2.0 * p[j] * need(components.c_entangled(j, jp, l)));
            }
            cross += p[j] * p[jp] * need(components.c_mutual(j, jp));
            total += od[j] * od[jp] * cross;
        }
    }
    return total;
}

}  // namespace oos
