#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "abcmix/mixture.hpp"

namespace abcmix {

/// Per-component perturbation variances and the weight-resampling retention.
struct KernelScales {
    std::vector<double> mean_scale_sq;
    std::vector<double> variance_scale_sq;
    double retention = 0.5;

    /// Throws DomainError for nonpositive scales or retention outside [0, 1].
    void validate() const;
};

struct Particle {
    MixtureParams params;
    double importance_weight = 0.0;
    double distance = 0.0;
};

struct ParticleSystem {
    std::vector<Particle> particles;
    std::size_t iteration = 0;
    double tolerance = 0.0;
    /// Scales that generated this population; absent for the prior population.
    std::optional<KernelScales> scales;

    std::size_t size() const noexcept { return particles.size(); }
    std::size_t components() const;

    std::vector<double> weights() const;
    /// Values of one parameter slot across particles.
    std::vector<double> weight_values(std::size_t component) const;
    std::vector<double> mean_values(std::size_t component) const;
    std::vector<double> variance_values(std::size_t component) const;
};

/// Rescales importance weights to sum to one; DegenerateSystemError when
/// the total is zero.
void normalize_weights(ParticleSystem& system);

/// 1 / sum(W^2) of the normalized weights.
double effective_sample_size(const ParticleSystem& system);

}  // namespace abcmix
