#include "abcmix/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "abcmix/error.hpp"

namespace abcmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Below this, Phi(z) is computed from the asymptotic tail expansion.
constexpr double kLogCdfAsymptotic = -37.0;

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b), lo(c), hi(c)};
    return Rng(seq);
}

double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) {
    if (z > kLogCdfAsymptotic) {
        return std::log(normal_cdf(z));
    }
    // Mills ratio series: Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4).
    const double z2 = z * z;
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) +
           std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_log_density(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

double sample_gamma(Rng& rng, double shape) {
    if (shape == 0.0) {
        return 0.0;
    }
    return std::exp(sample_log_gamma(rng, shape));
}

double sample_log_gamma(Rng& rng, double shape) {
    if (shape < 0.0 || !std::isfinite(shape)) {
        throw DomainError("gamma shape must be finite and nonnegative");
    }
    if (shape == 0.0) {
        return kNegInf;
    }
    if (shape >= 1.0) {
        std::gamma_distribution<double> gamma(shape, 1.0);
        return std::log(gamma(rng));
    }
    // G(a) = G(a + 1) * U^(1/a); done in log space so tiny shapes do not underflow.
    std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
    const double boosted = std::log(gamma(rng));
    return boosted + std::log(uniform_open(rng)) / shape;
}

double sample_beta(Rng& rng, double a, double b) {
    if (a < 0.0 || b < 0.0 || (a == 0.0 && b == 0.0)) {
        throw DomainError("beta parameters must be nonnegative and not both zero");
    }
    if (b == 0.0) {
        return 1.0;
    }
    if (a == 0.0) {
        return 0.0;
    }
    const double lx = sample_log_gamma(rng, a);
    const double ly = sample_log_gamma(rng, b);
    const double m = std::max(lx, ly);
    return std::exp(lx - (m + std::log(std::exp(lx - m) + std::exp(ly - m))));
}

std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha) {
    std::vector<double> logs(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0)) {
            throw DomainError("dirichlet concentration must be positive");
        }
        logs[i] = sample_log_gamma(rng, alpha[i]);
    }
    return open_simplex_from_log(logs);
}

double sample_positive_truncated_normal(Rng& rng, double mean, double sd) {
    if (!(sd > 0.0)) {
        throw DomainError("truncated normal scale must be positive");
    }
    const double c = mean / sd;
    const double u = uniform_open(rng);
    if (c < kLogCdfAsymptotic) {
        // Far tail: the standardized excess over the bound is ~ Exp(|c|).
        return sd * (-std::log(u)) / (-c);
    }
    // Z > -c  <=>  W = -Z < c, W drawn by inversion on (0, Phi(c)).
    const double w = normal_quantile(u * normal_cdf(c));
    const double x = sd * (c - w);
    return x > 0.0 ? x : std::numeric_limits<double>::min();
}

double positive_truncated_normal_log_density(double x, double mean, double sd) {
    if (!(x > 0.0)) {
        return kNegInf;
    }
    return normal_log_density(x, mean, sd * sd) - log_normal_cdf(mean / sd);
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) {
        return kNegInf;
    }
    const double m = *std::max_element(v.begin(), v.end());
    if (m == kNegInf) {
        return kNegInf;
    }
    double s = 0.0;
    for (double x : v) {
        s += std::exp(x - m);
    }
    return m + std::log(s);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
    const double lse = log_sum_exp(log_weights);
    if (lse == kNegInf) {
        throw DegenerateSystemError("all weights are zero");
    }
    std::vector<double> w(log_weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(log_weights[i] - lse);
        total += w[i];
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

std::vector<double> open_simplex_from_log(std::span<const double> log_weights) {
    auto w = normalize_log_weights(log_weights);
    if (w.size() > 1) {
        const double top = std::nextafter(1.0, 0.0);
        for (double& x : w) {
            x = std::clamp(x, std::numeric_limits<double>::min(), top);
        }
    }
    return w;
}

}  // namespace abcmix
