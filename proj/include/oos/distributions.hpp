#pragma once

#include <cctype>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oos/errors.hpp"

namespace oos {

// Parameters: NormalSpec carries the VARIANCE (not the sd); GammaSpec is
// (shape, rate), so gamma(10, 2) has mean 5; StudentTSpec is a standard t
// shifted by a constant.
struct NormalSpec {
    double mean;
    double variance;
};
struct UniformSpec {
    double lo;
    double hi;
};
struct StudentTSpec {
    double nu;
    double shift;
};
struct GammaSpec {
    double shape;
    double rate;
};
struct ExponentialSpec {
    double rate;
};

using DistributionSpec = std::variant<NormalSpec, UniformSpec, StudentTSpec, GammaSpec, ExponentialSpec>;

inline DistributionSpec normal_dist(double mean, double variance) {
    if (!(variance > 0.0)) throw InvalidDistributionError("normal variance must be positive");
    return NormalSpec{mean, variance};
}

inline DistributionSpec uniform_dist(double lo, double hi) {
    if (!(lo < hi)) throw InvalidDistributionError("uniform needs lo < hi");
    return UniformSpec{lo, hi};
}

// nu > 2 so the variance is finite; squared loss additionally pulls in the
// fourth moment, which callers should mind for nu <= 4 (see ScenarioConfig).
inline DistributionSpec student_t_dist(double nu, double shift = 0.0) {
    if (!(nu > 2.0)) throw InvalidDistributionError("student t needs nu > 2");
    return StudentTSpec{nu, shift};
}

inline DistributionSpec gamma_dist(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw InvalidDistributionError("gamma shape and rate must be positive");
    return GammaSpec{shape, rate};
}

inline DistributionSpec exponential_dist(double rate) {
    if (!(rate > 0.0)) throw InvalidDistributionError("exponential rate must be positive");
    return ExponentialSpec{rate};
}

inline double dist_mean(const DistributionSpec& spec) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NormalSpec>) return s.mean;
            if constexpr (std::is_same_v<T, UniformSpec>) return 0.5 * (s.lo + s.hi);
            if constexpr (std::is_same_v<T, StudentTSpec>) return s.shift;
            if constexpr (std::is_same_v<T, GammaSpec>) return s.shape / s.rate;
            if constexpr (std::is_same_v<T, ExponentialSpec>) return 1.0 / s.rate;
        },
        spec);
}

inline double dist_variance(const DistributionSpec& spec) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NormalSpec>) return s.variance;
            if constexpr (std::is_same_v<T, UniformSpec>) {
                const double w = s.hi - s.lo;
                return w * w / 12.0;
            }
            if constexpr (std::is_same_v<T, StudentTSpec>) return s.nu / (s.nu - 2.0);
            if constexpr (std::is_same_v<T, GammaSpec>) return s.shape / (s.rate * s.rate);
            if constexpr (std::is_same_v<T, ExponentialSpec>) return 1.0 / (s.rate * s.rate);
        },
        spec);
}

inline double sample(const DistributionSpec& spec, std::mt19937_64& engine) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NormalSpec>)
                return std::normal_distribution<double>(s.mean, std::sqrt(s.variance))(engine);
            if constexpr (std::is_same_v<T, UniformSpec>)
                return std::uniform_real_distribution<double>(s.lo, s.hi)(engine);
            if constexpr (std::is_same_v<T, StudentTSpec>)
                return s.shift + std::student_t_distribution<double>(s.nu)(engine);
            if constexpr (std::is_same_v<T, GammaSpec>)
                // std::gamma_distribution takes (shape, scale); scale = 1/rate
                return std::gamma_distribution<double>(s.shape, 1.0 / s.rate)(engine);
            if constexpr (std::is_same_v<T, ExponentialSpec>)
                return std::exponential_distribution<double>(s.rate)(engine);
        },
        spec);
}

inline std::string to_string(const DistributionSpec& spec) {
    std::ostringstream out;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NormalSpec>)
                out << "normal(" << s.mean << ", " << s.variance << ")";
            if constexpr (std::is_same_v<T, UniformSpec>)
                out << "uniform(" << s.lo << ", " << s.hi << ")";
            if constexpr (std::is_same_v<T, StudentTSpec>)
                out << "student_t(" << s.nu << ", " << s.shift << ")";
            if constexpr (std::is_same_v<T, GammaSpec>)
                out << "gamma(" << s.shape << ", " << s.rate << ")";
            if constexpr (std::is_same_v<T, ExponentialSpec>)
                out << "exponential(" << s.rate << ")";
        },
        spec);
    return out.str();
}

/// Parses "name(arg1, arg2)" distribution expressions: normal(mean, variance),
/// uniform(lo, hi), student_t(nu[, shift]) (alias t), gamma(shape, rate),
/// exponential(rate) (alias exp).
inline DistributionSpec parse_distribution(std::string_view text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw InvalidDistributionError("expected 'name(args)' in distribution '" +
                                       std::string(text) + "'");
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    const std::string name(trim(text.substr(0, open)));
    std::vector<double> args;
    std::string_view body = text.substr(open + 1, close - open - 1);
    while (!body.empty()) {
        const auto comma = body.find(',');
        std::string_view token = trim(body.substr(0, comma));
        if (token.empty())
            throw InvalidDistributionError("empty argument in distribution '" + std::string(text) + "'");
        try {
            std::size_t used = 0;
            args.push_back(std::stod(std::string(token), &used));
            if (used != token.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw InvalidDistributionError("bad numeric argument '" + std::string(token) +
                                           "' in distribution '" + std::string(text) + "'");
        }
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    auto expect = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi)
            throw InvalidDistributionError("wrong argument count for distribution '" +
                                           std::string(text) + "'");
    };
    if (name == "normal") {
        expect(2, 2);
        return normal_dist(args[0], args[1]);
    }
    if (name == "uniform") {
        expect(2, 2);
        return uniform_dist(args[0], args[1]);
    }
    if (name == "student_t" || name == "t") {
        expect(1, 2);
        return student_t_dist(args[0], args.size() == 2 ? args[1] : 0.0);
    }
    if (name == "gamma") {
        expect(2, 2);
        return gamma_dist(args[0], args[1]);
    }
    if (name == "exponential" || name == "exp") {
        expect(1, 1);
        return exponential_dist(args[0]);
    }
    throw InvalidDistributionError("unknown distribution '" + name + "'");
}

}  // namespace oos
