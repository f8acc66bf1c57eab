#include "abcmix/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "abcmix/error.hpp"

namespace abcmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double slot_scale(const ParticleSystem& system, const std::vector<double>& w,
                  std::vector<double> values, const char* what, std::size_t component) {
    const double var = weighted_variance(values, w);
    if (!(var > 0.0)) {
        throw DegenerateSystemError(std::string("zero weighted variance in ") + what + " " +
                                    std::to_string(component + 1) + " across " +
                                    std::to_string(system.size()) + " particles");
    }
    return 2.0 * var;
}

}  // namespace

double weighted_variance(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw DomainError("weighted variance needs one weight per value");
    }
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total += weights[i];
        mean += weights[i] * values[i];
    }
    if (!(total > 0.0)) {
        throw DomainError("weights must have positive total");
    }
    mean /= total;
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        ss += weights[i] * (values[i] - mean) * (values[i] - mean);
    }
    return ss / total;
}

KernelScales compute_scales(const ParticleSystem& system, const PriorSpec& prior,
                            double retention) {
    if (system.size() < 2) {
        throw DegenerateSystemError("kernel scales need at least two particles");
    }
    const std::size_t k = system.components();
    const auto w = system.weights();
    KernelScales scales;
    scales.retention = retention;
    scales.mean_scale_sq.resize(k);
    scales.variance_scale_sq.assign(k, 1.0);
    for (std::size_t i = 0; i < k; ++i) {
        scales.mean_scale_sq[i] = slot_scale(system, w, system.mean_values(i), "mean", i);
        if (prior.variances_free()) {
            scales.variance_scale_sq[i] =
                slot_scale(system, w, system.variance_values(i), "variance", i);
        }
    }
    scales.validate();
    return scales;
}

double perturb_mean(double value, double scale_sq, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return value + std::sqrt(scale_sq) * normal(rng);
}

double perturb_variance(double value, double scale_sq, Rng& rng) {
    if (!(value > 0.0)) {
        throw DomainError("variance to perturb must be positive");
    }
    return std::max(sample_positive_truncated_normal(rng, value, std::sqrt(scale_sq)),
                    kMinVariance);
}

std::vector<double> resample_weights(std::span<const double> previous,
                                     std::span<const double> delta, double retention, Rng& rng) {
    if (!(retention >= 0.0 && retention <= 1.0)) {
        throw DomainError("retention must lie in [0, 1]");
    }
    if (previous.size() != delta.size() || previous.empty()) {
        throw DomainError("weights and concentration must have the same length");
    }
    if (retention == 1.0) {
        return {previous.begin(), previous.end()};
    }
    const std::size_t k = previous.size();
    double delta_total = 0.0;
    for (double d : delta) {
        if (!(d > 0.0)) {
            throw DomainError("dirichlet concentration must be positive");
        }
        delta_total += d;
    }
    // Log space throughout so that small shapes cannot underflow a coordinate to zero.
    const double log_z = sample_log_gamma(rng, delta_total);
    std::vector<double> log_xi(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double kept_shape = retention * delta[i];
        const double fresh_shape = (1.0 - retention) * delta[i];
        double log_kept = kNegInf;
        if (kept_shape > 0.0) {
            // log B with B ~ Beta(kept, fresh) = G1 / (G1 + G2).
            const double g1 = sample_log_gamma(rng, kept_shape);
            const double g2 = sample_log_gamma(rng, fresh_shape);
            const double m = std::max(g1, g2);
            const double log_b = g1 - (m + std::log(std::exp(g1 - m) + std::exp(g2 - m)));
            log_kept = log_z + std::log(previous[i]) + log_b;
        }
        const double log_eta = sample_log_gamma(rng, fresh_shape);
        const double m = std::max(log_kept, log_eta);
        log_xi[i] = m + std::log(std::exp(log_kept - m) + std::exp(log_eta - m));
    }
    return open_simplex_from_log(log_xi);
}

ProposalDensity::ProposalDensity(const ParticleSystem& previous, const KernelScales& scales,
                                 const PriorSpec& prior, KernelDensityMode mode)
    : n_(previous.size()), k_(previous.components()), variances_free_(prior.variances_free()) {
    if (n_ == 0) {
        throw DomainError("proposal density needs a nonempty population");
    }
    if (scales.mean_scale_sq.size() != k_ || scales.variance_scale_sq.size() != k_) {
        throw DomainError("kernel scales do not match the component count");
    }
    means_.resize(n_ * k_);
    variances_.resize(n_ * k_);
    offsets_.resize(n_);
    inv_two_mean_sq_.resize(k_);
    inv_two_var_sq_.resize(k_);

    double total = 0.0;
    for (const auto& p : previous.particles) {
        total += p.importance_weight;
    }
    if (!(total > 0.0)) {
        throw DegenerateSystemError("previous population has zero total weight");
    }

    for (std::size_t i = 0; i < k_; ++i) {
        inv_two_mean_sq_[i] = 0.5 / scales.mean_scale_sq[i];
        constant_ -= 0.5 * std::log(2.0 * std::numbers::pi * scales.mean_scale_sq[i]);
        if (variances_free_) {
            inv_two_var_sq_[i] = 0.5 / scales.variance_scale_sq[i];
            constant_ -= 0.5 * std::log(2.0 * std::numbers::pi * scales.variance_scale_sq[i]);
        }
    }
    for (std::size_t j = 0; j < n_; ++j) {
        const auto& params = previous.particles[j].params;
        const double w = previous.particles[j].importance_weight / total;
        double offset = w > 0.0 ? std::log(w) : kNegInf;
        for (std::size_t i = 0; i < k_; ++i) {
            means_[j * k_ + i] = params.means()[i];
            variances_[j * k_ + i] = params.variances()[i];
            if (variances_free_ && mode == KernelDensityMode::truncated) {
                offset -= log_normal_cdf(params.variances()[i] /
                                         std::sqrt(scales.variance_scale_sq[i]));
            }
        }
        offsets_[j] = offset;
    }
}

double ProposalDensity::log_density(const MixtureParams& candidate) const {
    if (candidate.components() != k_) {
        throw DomainError("candidate dimension does not match the population");
    }
    const auto& cm = candidate.means();
    const auto& cv = candidate.variances();
    std::vector<double> terms(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        double t = offsets_[j];
        const double* pm = &means_[j * k_];
        const double* pv = &variances_[j * k_];
        for (std::size_t i = 0; i < k_; ++i) {
            const double dm = cm[i] - pm[i];
            t -= dm * dm * inv_two_mean_sq_[i];
            if (variances_free_) {
                const double dv = cv[i] - pv[i];
                t -= dv * dv * inv_two_var_sq_[i];
            }
        }
        terms[j] = t;
    }
    return constant_ + log_sum_exp(terms);
}

double log_importance_weight(const MixtureParams& candidate, const ProposalDensity& proposal,
                             const PriorSpec& prior, ImportanceDiagnostics* diagnostics) {
    const double log_q = proposal.log_density(candidate);
    // A denominator that is exactly zero in linear space zeroes the weight.
    if (std::exp(log_q) == 0.0) {
        if (diagnostics != nullptr) {
            ++diagnostics->underflows;
        }
        return kNegInf;
    }
    return prior_log_density(prior, candidate) - log_q;
}

double importance_weight(const MixtureParams& candidate, const ParticleSystem& previous,
                         const KernelScales& scales, const PriorSpec& prior,
                         KernelDensityMode mode, ImportanceDiagnostics* diagnostics) {
    const ProposalDensity proposal(previous, scales, prior, mode);
    return std::exp(log_importance_weight(candidate, proposal, prior, diagnostics));
}

}  // namespace abcmix
