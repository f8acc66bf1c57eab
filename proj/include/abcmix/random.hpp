#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace abcmix {

using Rng = std::mt19937_64;

/// Independent stream keyed by (seed, a, b, c). The engine uses
/// (iteration, slot) as the key so that results do not depend on
/// how slots are scheduled across threads.
Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                std::uint64_t c = 0);

/// Uniform draw on the open interval (0, 1).
double uniform_open(Rng& rng);

double normal_cdf(double z);
/// log Phi(z), accurate far into the lower tail.
double log_normal_cdf(double z);
double normal_quantile(double p);

/// log N(x; mean, variance).
double normal_log_density(double x, double mean, double variance);

/// Gamma(shape, 1) draw; shape 0 is the point mass at 0.
double sample_gamma(Rng& rng, double shape);
/// log of a Gamma(shape, 1) draw, stable for small shapes; -inf for shape 0.
double sample_log_gamma(Rng& rng, double shape);
/// Beta(a, b) draw. Beta(a, 0) is the point mass at 1 and Beta(0, b) the
/// point mass at 0.
double sample_beta(Rng& rng, double a, double b);
/// Dirichlet(alpha) draw, every coordinate strictly inside (0, 1).
std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha);

/// Normal(mean, sd^2) truncated to (0, inf), drawn by inverting the CDF.
double sample_positive_truncated_normal(Rng& rng, double mean, double sd);
/// Log density of the same law at x > 0.
double positive_truncated_normal_log_density(double x, double mean, double sd);

/// log(sum(exp(v))), -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

/// Turns log-weights into probabilities that sum to one.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Log-weights to a point strictly inside the open simplex: coordinates that
/// round to 0 or 1 are pulled to the nearest representable interior value.
std::vector<double> open_simplex_from_log(std::span<const double> log_weights);

}  // namespace abcmix
