#include "abcmix/dataset.hpp"

#include <cmath>
#include <numeric>

#include "abcmix/error.hpp"

namespace abcmix {

namespace {

std::vector<double> checked(std::vector<double> values,
                            const std::optional<std::vector<double>>& errors) {
    if (values.size() < 2) {
        throw DomainError("a dataset needs at least two observations");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw DomainError("observations must be finite");
        }
    }
    if (errors) {
        if (errors->size() != values.size()) {
            throw DomainError("measurement errors must have one entry per observation");
        }
        for (double e : *errors) {
            if (!(e >= 0.0) || !std::isfinite(e)) {
                throw DomainError("measurement errors must be finite and nonnegative");
            }
        }
    }
    return values;
}

}  // namespace

ObservedDataset::ObservedDataset(std::vector<double> values,
                                 std::optional<std::vector<double>> measurement_errors,
                                 std::size_t grid_size)
    : values_(checked(std::move(values), measurement_errors)),
      errors_(std::move(measurement_errors)),
      grid_size_(grid_size),
      summary_(kde(values_, grid_size)) {}

double ObservedDataset::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) /
           static_cast<double>(values_.size());
}

double ObservedDataset::variance() const {
    const double m = mean();
    double ss = 0.0;
    for (double v : values_) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(values_.size() - 1);
}

}  // namespace abcmix
