#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "oos/dataset.hpp"
#include "oos/loss.hpp"

namespace oos {

/// k x k matrix of empirical pairwise errors: entry (j, l) with j != l is the
/// average loss of source j's observations scored against the rule fitted on
/// source l. The diagonal is undefined (within-source error is not part of
/// the out-of-source definition) and reads as NaN.
class PairwiseErrorMatrix {
  public:
    explicit PairwiseErrorMatrix(std::size_t k)
        : k_(k), cells_(k * k, std::numeric_limits<double>::quiet_NaN()) {}

    std::size_t source_count() const { return k_; }

    double at(std::size_t j, std::size_t l) const {
        check(j, l);
        return cells_[j * k_ + l];
    }

    void set(std::size_t j, std::size_t l, double value) {
        check(j, l);
        cells_[j * k_ + l] = value;
    }

  private:
    void check(std::size_t j, std::size_t l) const {
        if (j >= k_ || l >= k_) throw std::out_of_range("pairwise error index out of range");
        if (j == l) throw std::out_of_range("pairwise error diagonal is undefined");
    }

    std::size_t k_;
    std::vector<double> cells_;
};

/// Result of the out-of-source error estimator: the total, the per-source
/// errors e_hat_j, and the pairwise matrix they are built from.
struct OosEstimate {
    double total = 0.0;
    std::vector<double> per_source;
    PairwiseErrorMatrix pairwise;
};

namespace detail {

/// Sorted copy of every source. All estimator sums run over these canonical
/// orderings, which makes results bit-identical under any within-source
/// permutation of the input.
inline std::vector<std::vector<double>> sorted_sources(const MultiSourceDataset& dataset) {
    std::vector<std::vector<double>> out(dataset.source_count());
    for (std::size_t j = 0; j < dataset.source_count(); ++j) {
        auto obs = dataset.observations(j);
        out[j].assign(obs.begin(), obs.end());
        std::sort(out[j].begin(), out[j].end());
    }
    return out;
}

template <decision_rule R>
std::vector<double> fit_all(const std::vector<std::vector<double>>& sources, const R& rule) {
    std::vector<double> fits(sources.size());
    for (std::size_t l = 0; l < sources.size(); ++l) fits[l] = fit_rule(rule, sources[l]);
    return fits;
}

/// Raw loss sums S[j][l] = sum over source j of loss(z, fit_l). One rule fit
/// per training source, reused across all test sources.
template <decision_rule R, loss_function L>
std::vector<std::vector<double>> loss_sums(const std::vector<std::vector<double>>& sources,
                                           const R& rule, const L& loss) {
    const std::size_t k = sources.size();
    const auto fits = fit_all(sources, rule);
    std::vector<std::vector<double>> sums(k, std::vector<double>(k, 0.0));
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            double s = 0.0;
            for (double z : sources[j]) s += loss(z, fits[l]);
            sums[j][l] = s;
        }
    }
    return sums;
}

}  // namespace detail

/// Empirical pairwise error matrix: e_hat(j, l) = mean loss of source j
/// against the rule trained on source l.
template <decision_rule R, loss_function L>
PairwiseErrorMatrix pairwise_errors(const MultiSourceDataset& dataset, const R& rule,
                                    const L& loss) {
    const std::size_t k = dataset.source_count();
    const auto sources = detail::sorted_sources(dataset);
    const auto sums = detail::loss_sums(sources, rule, loss);
    PairwiseErrorMatrix matrix(k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l)
            if (l != j) matrix.set(j, l, sums[j][l] / static_cast<double>(sources[j].size()));
    return matrix;
}

/// Unbiased estimator of the out-of-source error:
///
///   total = (1/n) * sum_j [ 1/(n - n_j) * sum_{l != j} n_l * S(j, l) ]
///
/// with S(j, l) the raw loss sum of source j against the rule of source l.
/// Also reports the per-source errors e_hat_j = 1/(1-p_j) sum_{l!=j} p_l e_hat(j,l);
/// the total equals sum_j p_j e_hat_j and sum_j od_j sum_{l!=j} p_l e_hat(j,l)
/// up to rounding.
template <decision_rule R, loss_function L>
OosEstimate oos_estimate(const MultiSourceDataset& dataset, const R& rule, const L& loss) {
    const std::size_t k = dataset.source_count();
    const double n = static_cast<double>(dataset.total_size());
    const auto sources = detail::sorted_sources(dataset);
    const auto sums = detail::loss_sums(sources, rule, loss);

    OosEstimate result{0.0, std::vector<double>(k, 0.0), PairwiseErrorMatrix(k)};
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double n_j = static_cast<double>(sources[j].size());
        double inner = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            const double n_l = static_cast<double>(sources[l].size());
            inner += n_l * sums[j][l];
            result.pairwise.set(j, l, sums[j][l] / n_j);
        }
        total += inner / (n - n_j);

        const double p_j = n_j / n;
        double per_source = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
            if (l == j) continue;
            const double p_l = static_cast<double>(sources[l].size()) / n;
            per_source += p_l * result.pairwise.at(j, l);
        }
        result.per_source[j] = per_source / (1.0 - p_j);
    }
    result.total = total / n;
    return result;
}

/// Leave-one-source-out cross validation with a pooled training complement:
/// for each source j the rule is fitted on the union of all other sources and
/// scored on source j; the per-source averages are combined with weights p_j.
/// The p_j weighting reduces to equal 1/k weights when sources are balanced;
/// for unbalanced sources it is this library's choice of generalization.
/// With k = 2 the pooled complement of each source is exactly the other
/// source, so this coincides with oos_estimate().total.
template <decision_rule R, loss_function L>
double pooled_cv_estimate(const MultiSourceDataset& dataset, const R& rule, const L& loss) {
    const std::size_t k = dataset.source_count();
    const double n = static_cast<double>(dataset.total_size());
    const auto sources = detail::sorted_sources(dataset);

    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> pooled;
        pooled.reserve(dataset.total_size() - sources[j].size());
        for (std::size_t l = 0; l < k; ++l)
            if (l != j) pooled.insert(pooled.end(), sources[l].begin(), sources[l].end());
        const double fit = fit_rule(rule, pooled);
        double s = 0.0;
        for (double z : sources[j]) s += loss(z, fit);
        const double n_j = static_cast<double>(sources[j].size());
        total += (n_j / n) * (s / n_j);
    }
    return total;
}

}  // namespace oos
