#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oos/errors.hpp"

namespace oos {

/// A loss function scores a target observation against a decision value.
/// Must be nonnegative. Anything callable as loss(target, decision) works;
/// the built-ins below also carry a stable name for reports.
template <typename L>
concept loss_function = requires(const L& loss, double target, double decision) {
    { loss(target, decision) } -> std::convertible_to<double>;
};

/// A decision rule fits a single real decision value on a nonempty sample.
template <typename R>
concept decision_rule = requires(const R& rule, std::span<const double> sample) {
    { rule(sample) } -> std::convertible_to<double>;
};

struct SquaredLoss {
    static constexpr std::string_view name = "squared";
    double operator()(double target, double decision) const {
        const double r = target - decision;
        return r * r;
    }
};

struct AbsoluteLoss {
    static constexpr std::string_view name = "absolute";
    double operator()(double target, double decision) const { return std::abs(target - decision); }
};

/// Arithmetic mean of the sample. The sample is summed in sorted order so
/// the result is bit-identical under any permutation of the input.
struct MeanRule {
    static constexpr std::string_view name = "mean";
    double operator()(std::span<const double> sample) const {
        std::vector<double> sorted(sample.begin(), sample.end());
        std::sort(sorted.begin(), sorted.end());
        const double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
        return sum / static_cast<double>(sorted.size());
    }
};

/// Fits `rule` on `sample`. Throws EmptySampleError on an empty sample.
template <decision_rule R>
double fit_rule(const R& rule, std::span<const double> sample) {
    if (sample.empty()) throw EmptySampleError("cannot fit a decision rule on an empty sample");
    return rule(sample);
}

enum class LossKind { squared, absolute };
enum class RuleKind { mean };

inline std::string_view to_string(LossKind kind) {
    return kind == LossKind::squared ? SquaredLoss::name : AbsoluteLoss::name;
}

inline std::string_view to_string(RuleKind) { return MeanRule::name; }

inline LossKind parse_loss_kind(std::string_view text) {
    if (text == SquaredLoss::name) return LossKind::squared;
    if (text == AbsoluteLoss::name) return LossKind::absolute;
    throw InvalidConfigError("unknown loss function '" + std::string(text) +
                             "' (expected 'squared' or 'absolute')");
}

inline RuleKind parse_rule_kind(std::string_view text) {
    if (text == MeanRule::name) return RuleKind::mean;
    throw InvalidConfigError("unknown decision rule '" + std::string(text) + "' (expected 'mean')");
}

/// Applies `fn` to the loss object selected by `kind`.
template <typename F>
decltype(auto) with_loss(LossKind kind, F&& fn) {
    if (kind == LossKind::squared) return std::forward<F>(fn)(SquaredLoss{});
    return std::forward<F>(fn)(AbsoluteLoss{});
}

/// Applies `fn` to the rule object selected by `kind`.
template <typename F>
decltype(auto) with_rule(RuleKind, F&& fn) {
    return std::forward<F>(fn)(MeanRule{});
}

}  // namespace oos
