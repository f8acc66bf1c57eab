#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "abcmix/dataset.hpp"
#include "abcmix/random.hpp"

namespace abcmix {

/// Variances below this are rejected; keeps every density finite.
inline constexpr double kMinVariance = 1e-300;

/// One parameter point of a K-component univariate Gaussian mixture.
class MixtureParams {
public:
    /// Throws DomainError unless all vectors have the same length K >= 1, the
    /// weights lie in (0, 1) (exactly 1 when K = 1) and sum to one within
    /// 1e-12, the means are finite and every variance is finite and at least
    /// kMinVariance.
    MixtureParams(std::vector<double> weights, std::vector<double> means,
                  std::vector<double> variances);

    std::size_t components() const noexcept { return means_.size(); }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& variances() const noexcept { return variances_; }

    /// Component i of the result is component order[i] of this.
    MixtureParams permuted(std::span<const std::size_t> order) const;

    friend bool operator==(const MixtureParams&, const MixtureParams&) = default;

private:
    std::vector<double> weights_;
    std::vector<double> means_;
    std::vector<double> variances_;
};

/// Priors: f ~ Dirichlet(delta), mu_i ~ N(xi, kappa), 1/sigma_i^2 ~ Gamma(alpha, rate beta).
/// `fixed_weights` / `fixed_variances` mark those slots as known.
struct PriorSpec {
    std::vector<double> dirichlet_concentration;
    double mean_prior_location = 0.0;
    double mean_prior_variance = 1.0;
    double precision_shape = 1.0;
    double precision_rate = 1.0;
    std::optional<std::vector<double>> fixed_weights;
    std::optional<std::vector<double>> fixed_variances;

    std::size_t components() const noexcept { return dirichlet_concentration.size(); }
    bool weights_free() const noexcept { return !fixed_weights.has_value(); }
    bool variances_free() const noexcept { return !fixed_variances.has_value(); }

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;
};

/// Empirical defaults: xi = sample mean, kappa = sample variance, alpha = 2,
/// beta = sample variance, delta = (1, ..., 1).
PriorSpec data_driven_prior(const ObservedDataset& data, std::size_t components);

MixtureParams sample_prior(const PriorSpec& prior, Rng& rng);

/// log N(mu_i; xi, kappa) summed over components plus, for free variances,
/// the inverse-gamma log density of sigma_i^2 induced by the Gamma prior on
/// the precision. The Dirichlet factor is not included.
double prior_log_density(const PriorSpec& prior, const MixtureParams& params);

/// Density of sigma^2 when 1/sigma^2 ~ Gamma(shape, rate); DomainError for x <= 0.
double inverse_gamma_log_density(double x, double shape, double rate);

/// n draws from the mixture: component by weight, then N(mean, variance).
std::vector<double> simulate(const MixtureParams& params, std::size_t n, Rng& rng);

/// Pairs each simulated value with the error of the observation of equal rank.
std::vector<double> assign_errors_by_rank(std::span<const double> observed,
                                          std::span<const double> errors,
                                          std::span<const double> simulated);

/// Simulates data.size() values, then adds N(0, e^2) noise where e is the
/// measurement error matched by rank. ConfigError when the dataset has no errors.
std::vector<double> simulate_with_errors(const MixtureParams& params, const ObservedDataset& data,
                                         Rng& rng);

/// Row-major matrix of log-likelihood values.
struct LogLikGrid {
    std::vector<double> axis1;
    std::vector<double> axis2;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * axis2.size() + j]; }
};

/// Entry (i, j) = sum_k log[f N(y_k; axis1_i, v1) + (1 - f) N(y_k; axis2_j, v2)].
LogLikGrid loglik_grid(std::span<const double> data, double f, double variance1,
                       double variance2, std::vector<double> axis1, std::vector<double> axis2);

/// Two-component form with the prior's fixed weights and fixed variances
/// (unit variances when none are fixed).
LogLikGrid loglik_grid(const ObservedDataset& data, const PriorSpec& prior,
                       std::vector<double> axis1, std::vector<double> axis2);

}  // namespace abcmix
