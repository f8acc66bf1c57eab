#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace abcmix {

class ObservedDataset;

inline constexpr std::size_t kDefaultGridSize = 512;

/// A density tabulated on a strictly increasing grid. Off the grid the
/// density is zero; between grid points it is linearly interpolated.
class DensitySummary {
public:
    /// Throws DomainError unless the grid is strictly increasing, the density
    /// is finite and nonnegative, and its trapezoidal integral is within 1e-3
    /// of one.
    DensitySummary(std::vector<double> grid, std::vector<double> density, double bandwidth);

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& density() const noexcept { return density_; }
    double bandwidth() const noexcept { return bandwidth_; }

    double operator()(double y) const;
    double integral() const;

private:
    std::vector<double> grid_;
    std::vector<double> density_;
    double bandwidth_;
};

/// Silverman's rule of thumb, 0.9 * min(sd, IQR/1.34) * n^(-1/5). Falls back
/// to sd when the IQR is zero; throws DegenerateSampleError when sd is zero.
double silverman_bandwidth(std::span<const double> sample);

/// Gaussian KDE on an equispaced grid spanning the sample +- 4 bandwidths.
DensitySummary kde(std::span<const double> sample, std::size_t grid_size = kDefaultGridSize);

/// KDE with point masses proportional to `weights`. The bandwidth follows
/// Silverman's rule using the weighted spread and the effective sample size
/// 1 / sum(w^2).
DensitySummary weighted_kde(std::span<const double> sample, std::span<const double> weights,
                            std::size_t grid_size = kDefaultGridSize);

/// H(f, g) = (integral (sqrt f - sqrt g)^2 dy)^(1/2), trapezoidal over the
/// union of both grids. Ranges over [0, sqrt 2]. Once the running integral
/// shows the distance exceeds `cutoff` the walk stops and a value above
/// `cutoff` (not the full distance) is returned.
double hellinger(const DensitySummary& f, const DensitySummary& g,
                 double cutoff = std::numeric_limits<double>::infinity());

/// Hellinger distance between the dataset's cached KDE and the KDE of `sim`,
/// with the same early exit as hellinger().
double abc_distance(const ObservedDataset& obs, std::span<const double> sim,
                    double cutoff = std::numeric_limits<double>::infinity());

}  // namespace abcmix
