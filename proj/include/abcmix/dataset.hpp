#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "abcmix/summary.hpp"

namespace abcmix {

/// Observed sample, optional per-observation measurement errors (standard
/// deviations, same units as the values) and the cached KDE of the values.
class ObservedDataset {
public:
    /// Throws DomainError for n < 2, mismatched or negative errors, and
    /// DegenerateSampleError when every value is identical.
    explicit ObservedDataset(std::vector<double> values,
                             std::optional<std::vector<double>> measurement_errors = std::nullopt,
                             std::size_t grid_size = kDefaultGridSize);

    const std::vector<double>& values() const noexcept { return values_; }
    const std::optional<std::vector<double>>& measurement_errors() const noexcept {
        return errors_;
    }
    bool has_errors() const noexcept { return errors_.has_value(); }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t grid_size() const noexcept { return grid_size_; }
    const DensitySummary& summary() const noexcept { return summary_; }

    double mean() const;
    /// Sample variance with denominator n - 1.
    double variance() const;

private:
    std::vector<double> values_;
    std::optional<std::vector<double>> errors_;
    std::size_t grid_size_;
    DensitySummary summary_;
};

}  // namespace abcmix
