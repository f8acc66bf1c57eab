#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "abcmix/dataset.hpp"
#include "abcmix/particles.hpp"

namespace abcmix::testing {

// One-sample Kolmogorov-Smirnov p-value with the Stephens small-sample
// correction and the alternating Kolmogorov series.
inline double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) {
        return 1.0;
    }
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(p, 0.0, 1.0);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double gaussian_pdf(double x, double mean, double variance) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / variance) /
           std::sqrt(2.0 * std::numbers::pi * variance);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

// The two-component law: 20 draws at -20 then 20 at +20, unit variances.
inline ObservedDataset two_group_data(std::uint64_t seed) {
    Rng rng = make_stream(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(-20.0 + z(rng));
    for (int i = 0; i < 20; ++i) v.push_back(20.0 + z(rng));
    return ObservedDataset(std::move(v));
}

inline PriorSpec two_group_prior() {
    PriorSpec prior;
    prior.dirichlet_concentration = {1.0, 1.0};
    prior.mean_prior_location = 0.0;
    prior.mean_prior_variance = 100.0;
    prior.fixed_variances = std::vector<double>{1.0, 1.0};
    return prior;
}

inline ParticleSystem make_system(const std::vector<MixtureParams>& params,
                                  std::vector<double> weights = {}) {
    ParticleSystem s;
    for (std::size_t j = 0; j < params.size(); ++j) {
        const double w = weights.empty() ? 1.0 / static_cast<double>(params.size()) : weights[j];
        s.particles.push_back(Particle{params[j], w, 0.0});
    }
    s.iteration = 1;
    return s;
}

}  // namespace abcmix::testing
