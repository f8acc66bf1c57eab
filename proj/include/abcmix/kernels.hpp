#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abcmix/particles.hpp"

namespace abcmix {

/// sum w_i (x_i - xbar_w)^2 with weights normalized to one.
double weighted_variance(std::span<const double> values, std::span<const double> weights);

/// Twice the weighted variance of every free mean and variance slot. Slots
/// fixed by the prior get scale 1 and are never used. Throws
/// DegenerateSystemError when a free slot has zero spread.
KernelScales compute_scales(const ParticleSystem& system, const PriorSpec& prior,
                            double retention);

double perturb_mean(double value, double scale_sq, Rng& rng);

/// N(value, scale_sq) truncated to (0, inf), by CDF inversion.
double perturb_variance(double value, double scale_sq, Rng& rng);

/// Gamma-Beta jitter of a weight vector on the simplex. With
/// Z ~ Gamma(sum delta), B_i ~ Beta(p delta_i, (1-p) delta_i) and
/// eta_i ~ Gamma((1-p) delta_i), returns (Z f_i B_i + eta_i) normalized.
/// Leaves Dirichlet(delta) invariant; p = 1 returns `previous` unchanged and
/// p = 0 is a fresh Dirichlet(delta) draw.
std::vector<double> resample_weights(std::span<const double> previous,
                                     std::span<const double> delta, double retention, Rng& rng);

enum class KernelDensityMode {
    /// Variance kernel density includes the truncation normalizer.
    truncated,
    /// Plain Gaussian kernel for variances, as the weight formula is written.
    literal,
};

/// Mixture proposal density sum_j W_j K(theta | theta_j) of a previous
/// population, over the free mean and variance slots. Weights are not part of
/// the kernel. Precomputes per-particle constants so evaluating a candidate
/// costs O(N K).
class ProposalDensity {
public:
    ProposalDensity(const ParticleSystem& previous, const KernelScales& scales,
                    const PriorSpec& prior, KernelDensityMode mode = KernelDensityMode::truncated);

    /// log of the proposal density at `candidate`; -inf when it underflows.
    double log_density(const MixtureParams& candidate) const;

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    bool variances_free_ = true;
    std::vector<double> means_;      // n x k
    std::vector<double> variances_;  // n x k
    std::vector<double> offsets_;    // log W_j + per-particle normalizers
    std::vector<double> inv_two_mean_sq_;
    std::vector<double> inv_two_var_sq_;
    double constant_ = 0.0;
};

struct ImportanceDiagnostics {
    std::size_t underflows = 0;
};

/// log prior(mu, sigma^2) - log proposal. Returns -inf when the proposal
/// density underflows to zero in linear space, counted in `diagnostics`.
double log_importance_weight(const MixtureParams& candidate, const ProposalDensity& proposal,
                             const PriorSpec& prior, ImportanceDiagnostics* diagnostics = nullptr);

/// Unnormalized importance weight of `candidate` against `previous`.
double importance_weight(const MixtureParams& candidate, const ParticleSystem& previous,
                         const KernelScales& scales, const PriorSpec& prior,
                         KernelDensityMode mode = KernelDensityMode::truncated,
                         ImportanceDiagnostics* diagnostics = nullptr);

}  // namespace abcmix
