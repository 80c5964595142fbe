#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oos/errors.hpp"

namespace oos {

/// Source labels are opaque strings; the canonical source order used by every
/// matrix and report in this library is lexicographic on the label.
using SourceLabel = std::string;

/// Per-source sample shares p_j = n_j/n and the odds od_j = p_j/(1-p_j).
///
/// Invariants: every p_j in (0,1) and sum(p) == 1 within 1e-12.
struct Proportions {
    std::vector<double> p;
    std::vector<double> od;

    std::size_t source_count() const { return p.size(); }

    static Proportions from_probabilities(std::vector<double> probabilities) {
        if (probabilities.size() < 2)
            throw InvalidProportionsError("at least two sources are required");
        double sum = 0.0;
        for (double pj : probabilities) {
            if (!(pj > 0.0 && pj < 1.0))
                throw InvalidProportionsError("every proportion must lie strictly in (0, 1)");
            sum += pj;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidProportionsError("proportions must sum to 1 (got " + std::to_string(sum) + ")");
        Proportions out;
        out.od.reserve(probabilities.size());
        for (double pj : probabilities) out.od.push_back(pj / (1.0 - pj));
        out.p = std::move(probabilities);
        return out;
    }

    static Proportions from_counts(std::span<const std::size_t> counts) {
        std::size_t total = 0;
        for (std::size_t c : counts) total += c;
        if (total == 0) throw InvalidProportionsError("counts sum to zero");
        std::vector<double> probabilities(counts.size());
        for (std::size_t j = 0; j < counts.size(); ++j)
            probabilities[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
        return from_probabilities(std::move(probabilities));
    }
};

/// Labeled scalar observations grouped by source, held in canonical
/// (lexicographic) source order. Immutable after construction; observation
/// order within a source is the ingestion order.
class MultiSourceDataset {
  public:
    /// Builds from explicit per-source groups. Requires at least two sources
    /// with distinct labels, at least one observation each, all values finite.
    explicit MultiSourceDataset(std::vector<std::pair<SourceLabel, std::vector<double>>> groups)
        : groups_(std::move(groups)) {
        if (groups_.empty()) throw EmptyInputError("dataset has no sources");
        std::sort(groups_.begin(), groups_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t j = 1; j < groups_.size(); ++j)
            if (groups_[j].first == groups_[j - 1].first)
                throw DuplicateLabelError("duplicate source label '" + groups_[j].first + "'");
        if (groups_.size() < 2)
            throw SingleSourceError("at least two sources are required (got 1)");
        total_ = 0;
        for (const auto& [label, values] : groups_) {
            if (values.empty()) throw EmptySourceError("source '" + label + "' has no observations");
            for (double v : values)
                if (!std::isfinite(v))
                    throw NonFiniteValueError("non-finite observation in source '" + label + "'");
            total_ += values.size();
        }
    }

    std::size_t source_count() const { return groups_.size(); }
    std::size_t total_size() const { return total_; }
    std::size_t source_size(std::size_t j) const { return groups_.at(j).second.size(); }
    const SourceLabel& label(std::size_t j) const { return groups_.at(j).first; }
    std::span<const double> observations(std::size_t j) const { return groups_.at(j).second; }

    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> out(groups_.size());
        for (std::size_t j = 0; j < groups_.size(); ++j) out[j] = groups_[j].second.size();
        return out;
    }

  private:
    std::vector<std::pair<SourceLabel, std::vector<double>>> groups_;
    std::size_t total_ = 0;
};

/// Groups (label, value) records into a dataset, preserving within-source
/// input order.
inline MultiSourceDataset dataset_from_records(
    std::span<const std::pair<SourceLabel, double>> records) {
    if (records.empty()) throw EmptyInputError("no records given");
    std::vector<std::pair<SourceLabel, std::vector<double>>> groups;
    for (const auto& [label, value] : records) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == label; });
        if (it == groups.end()) {
            groups.emplace_back(label, std::vector<double>{value});
        } else {
            it->second.push_back(value);
        }
    }
    return MultiSourceDataset(std::move(groups));
}

inline Proportions proportions(const MultiSourceDataset& dataset) {
    return Proportions::from_counts(dataset.counts());
}

}  // namespace oos
