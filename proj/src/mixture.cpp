#include "abcmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "abcmix/error.hpp"

namespace abcmix {

namespace {

constexpr double kWeightSumTolerance = 1e-12;
constexpr double kMaxLogVariance = 690.0;  // exp(690) ~ 1e300

void check_simplex(std::span<const double> w, const char* what) {
    double total = 0.0;
    for (double x : w) {
        const bool ok = w.size() == 1 ? x == 1.0 : (x > 0.0 && x < 1.0);
        if (!ok) {
            throw DomainError(std::string(what) + ": each weight must lie in (0, 1)");
        }
        total += x;
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
        throw DomainError(std::string(what) + ": weights must sum to 1");
    }
}

void check_variances(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!(x >= kMinVariance) || !std::isfinite(x)) {
            throw DomainError(std::string(what) + ": variances must be finite and positive");
        }
    }
}

std::vector<std::size_t> argsort(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return idx;
}

}  // namespace

MixtureParams::MixtureParams(std::vector<double> weights, std::vector<double> means,
                             std::vector<double> variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
    if (means_.empty() || weights_.size() != means_.size() ||
        variances_.size() != means_.size()) {
        throw DomainError("mixture parameters need equal, nonzero component counts");
    }
    check_simplex(weights_, "mixture");
    for (double m : means_) {
        if (!std::isfinite(m)) {
            throw DomainError("mixture means must be finite");
        }
    }
    check_variances(variances_, "mixture");
}

MixtureParams MixtureParams::permuted(std::span<const std::size_t> order) const {
    std::vector<double> w(order.size());
    std::vector<double> m(order.size());
    std::vector<double> v(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        w[i] = weights_.at(order[i]);
        m[i] = means_.at(order[i]);
        v[i] = variances_.at(order[i]);
    }
    return MixtureParams(std::move(w), std::move(m), std::move(v));
}

void PriorSpec::validate() const {
    const std::size_t k = components();
    if (k == 0) {
        throw ConfigError("prior needs at least one component");
    }
    for (double d : dirichlet_concentration) {
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw ConfigError("dirichlet concentration must be positive");
        }
    }
    if (!std::isfinite(mean_prior_location)) {
        throw ConfigError("mean prior location must be finite");
    }
    if (!(mean_prior_variance > 0.0) || !std::isfinite(mean_prior_variance)) {
        throw ConfigError("mean prior variance must be positive");
    }
    if (!(precision_shape > 0.0) || !(precision_rate > 0.0) || !std::isfinite(precision_shape) ||
        !std::isfinite(precision_rate)) {
        throw ConfigError("precision prior shape and rate must be positive");
    }
    try {
        if (fixed_weights) {
            if (fixed_weights->size() != k) {
                throw ConfigError("fixed weights must have one entry per component");
            }
            check_simplex(*fixed_weights, "fixed weights");
        }
        if (fixed_variances) {
            if (fixed_variances->size() != k) {
                throw ConfigError("fixed variances must have one entry per component");
            }
            check_variances(*fixed_variances, "fixed variances");
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

PriorSpec data_driven_prior(const ObservedDataset& data, std::size_t components) {
    PriorSpec prior;
    prior.dirichlet_concentration.assign(components, 1.0);
    prior.mean_prior_location = data.mean();
    prior.mean_prior_variance = data.variance();
    prior.precision_shape = 2.0;
    prior.precision_rate = data.variance();
    return prior;
}

MixtureParams sample_prior(const PriorSpec& prior, Rng& rng) {
    const std::size_t k = prior.components();
    std::vector<double> weights =
        prior.fixed_weights ? *prior.fixed_weights : sample_dirichlet(rng, prior.dirichlet_concentration);

    std::normal_distribution<double> normal(prior.mean_prior_location,
                                            std::sqrt(prior.mean_prior_variance));
    std::vector<double> means(k);
    for (double& m : means) {
        m = normal(rng);
    }

    std::vector<double> variances;
    if (prior.fixed_variances) {
        variances = *prior.fixed_variances;
    } else {
        variances.resize(k);
        const double log_rate = std::log(prior.precision_rate);
        for (double& v : variances) {
            const double log_precision = sample_log_gamma(rng, prior.precision_shape) - log_rate;
            v = std::exp(std::clamp(-log_precision, std::log(kMinVariance), kMaxLogVariance));
        }
    }
    return MixtureParams(std::move(weights), std::move(means), std::move(variances));
}

double inverse_gamma_log_density(double x, double shape, double rate) {
    if (!(x > 0.0)) {
        throw DomainError("variance must be positive");
    }
    return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double prior_log_density(const PriorSpec& prior, const MixtureParams& params) {
    if (params.components() != prior.components()) {
        throw DomainError("parameter dimension does not match the prior");
    }
    double total = 0.0;
    for (double m : params.means()) {
        total += normal_log_density(m, prior.mean_prior_location, prior.mean_prior_variance);
    }
    if (prior.variances_free()) {
        for (double v : params.variances()) {
            total += inverse_gamma_log_density(v, prior.precision_shape, prior.precision_rate);
        }
    }
    return total;
}

std::vector<double> simulate(const MixtureParams& params, std::size_t n, Rng& rng) {
    const std::size_t k = params.components();
    std::vector<double> cumulative(k);
    std::partial_sum(params.weights().begin(), params.weights().end(), cumulative.begin());
    std::vector<double> sd(k);
    for (std::size_t i = 0; i < k; ++i) {
        sd[i] = std::sqrt(params.variances()[i]);
    }

    std::normal_distribution<double> standard(0.0, 1.0);
    std::vector<double> out(n);
    for (double& y : out) {
        const double u = uniform_open(rng) * cumulative.back();
        const auto c = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end() - 1, u) - cumulative.begin());
        y = params.means()[c] + sd[c] * standard(rng);
    }
    return out;
}

std::vector<double> assign_errors_by_rank(std::span<const double> observed,
                                          std::span<const double> errors,
                                          std::span<const double> simulated) {
    if (observed.size() != errors.size() || observed.size() != simulated.size()) {
        throw DomainError("rank matching needs equal-length inputs");
    }
    const auto obs_order = argsort(observed);
    const auto sim_order = argsort(simulated);
    std::vector<double> assigned(simulated.size());
    for (std::size_t r = 0; r < sim_order.size(); ++r) {
        assigned[sim_order[r]] = errors[obs_order[r]];
    }
    return assigned;
}

std::vector<double> simulate_with_errors(const MixtureParams& params, const ObservedDataset& data,
                                         Rng& rng) {
    if (!data.has_errors()) {
        throw ConfigError("measurement-error forward model needs a dataset with errors");
    }
    std::vector<double> sim = simulate(params, data.size(), rng);
    const auto errors = assign_errors_by_rank(data.values(), *data.measurement_errors(), sim);
    std::normal_distribution<double> standard(0.0, 1.0);
    for (std::size_t i = 0; i < sim.size(); ++i) {
        if (errors[i] > 0.0) {
            sim[i] += errors[i] * standard(rng);
        }
    }
    return sim;
}

LogLikGrid loglik_grid(std::span<const double> data, double f, double variance1,
                       double variance2, std::vector<double> axis1, std::vector<double> axis2) {
    if (axis1.empty() || axis2.empty()) {
        throw DomainError("log-likelihood grid axes must be nonempty");
    }
    if (!(f > 0.0 && f < 1.0)) {
        throw DomainError("mixture weight must lie in (0, 1)");
    }
    if (!(variance1 > 0.0) || !(variance2 > 0.0)) {
        throw DomainError("variances must be positive");
    }
    const double log_f = std::log(f);
    const double log_g = std::log1p(-f);
    LogLikGrid out{std::move(axis1), std::move(axis2), {}};
    out.values.resize(out.axis1.size() * out.axis2.size());

    // Component log densities per observation, tabulated per axis value.
    const std::size_t n = data.size();
    std::vector<double> first(out.axis1.size() * n);
    std::vector<double> second(out.axis2.size() * n);
    for (std::size_t i = 0; i < out.axis1.size(); ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            first[i * n + k] = log_f + normal_log_density(data[k], out.axis1[i], variance1);
        }
    }
    for (std::size_t j = 0; j < out.axis2.size(); ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            second[j * n + k] = log_g + normal_log_density(data[k], out.axis2[j], variance2);
        }
    }
    for (std::size_t i = 0; i < out.axis1.size(); ++i) {
        for (std::size_t j = 0; j < out.axis2.size(); ++j) {
            double total = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double a = first[i * n + k];
                const double b = second[j * n + k];
                const double m = std::max(a, b);
                total += m + std::log1p(std::exp(std::min(a, b) - m));
            }
            out.values[i * out.axis2.size() + j] = total;
        }
    }
    return out;
}

LogLikGrid loglik_grid(const ObservedDataset& data, const PriorSpec& prior,
                       std::vector<double> axis1, std::vector<double> axis2) {
    if (prior.components() != 2 || !prior.fixed_weights) {
        throw DomainError("log-likelihood grid needs a two-component model with fixed weights");
    }
    const double v1 = prior.fixed_variances ? (*prior.fixed_variances)[0] : 1.0;
    const double v2 = prior.fixed_variances ? (*prior.fixed_variances)[1] : 1.0;
    return loglik_grid(data.values(), (*prior.fixed_weights)[0], v1, v2, std::move(axis1),
                       std::move(axis2));
}

}  // namespace abcmix
