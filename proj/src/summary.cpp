#include "abcmix/summary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

#include "abcmix/dataset.hpp"
#include "abcmix/error.hpp"

namespace abcmix {

namespace {

constexpr double kIntegralTolerance = 1e-3;
constexpr double kGridPadding = 4.0;  // bandwidths beyond the sample range
constexpr double kKernelCutoff = 7.0;  // bandwidths; exp(-24.5) ~ 2e-11

double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    return s;
}

// Type-7 quantile of sorted data.
double sorted_quantile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Quantile of a weighted sample, interpolating between cumulative-weight
// midpoints. `order` indexes the sample in ascending order.
double weighted_quantile(std::span<const double> x, std::span<const double> w,
                         std::span<const std::size_t> order, double q) {
    double cum = 0.0;
    double prev_pos = 0.0;
    double prev_val = x[order.front()];
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double wk = w[order[k]];
        const double pos = cum + 0.5 * wk;
        const double val = x[order[k]];
        if (pos >= q) {
            if (k == 0 || pos == prev_pos) {
                return val;
            }
            return prev_val + (q - prev_pos) / (pos - prev_pos) * (val - prev_val);
        }
        cum += wk;
        prev_pos = pos;
        prev_val = val;
    }
    return prev_val;
}

double rule_of_thumb(double sd, double iqr, double n) {
    if (!(sd > 0.0)) {
        throw DegenerateSampleError("sample has zero spread; bandwidth would be zero");
    }
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

// Native vector width; the kernel loop keeps four of these in flight.
#if defined(__AVX512F__)
constexpr std::size_t kWidth = 8;
#elif defined(__AVX__)
constexpr std::size_t kWidth = 4;
#else
constexpr std::size_t kWidth = 2;
#endif
constexpr std::size_t kLanes = 4 * kWidth;
using Pack = double __attribute__((vector_size(kWidth * sizeof(double))));

Pack load(const double* p) {
    Pack v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

void store(double* p, Pack v) { std::memcpy(p, &v, sizeof v); }

// Adds mass * K_h(grid - y) for every grid point within the kernel cutoff.
// Runs kLanes interleaved Gaussian ratio recurrences (exp(-u^2/2) stepped by
// kLanes grid points) so each point costs two multiplications instead of an
// exp, without one long dependency chain.
void accumulate_kernel(std::vector<double>& out, double lo, double dx, double h, double y,
                       double mass) {
    const auto g = static_cast<double>(out.size());
    const double first = std::ceil((y - kKernelCutoff * h - lo) / dx);
    const double last = std::floor((y + kKernelCutoff * h - lo) / dx);
    if (last < 0.0 || first > g - 1.0) {
        return;
    }
    const auto jlo = static_cast<std::size_t>(std::max(first, 0.0));
    const auto jhi = static_cast<std::size_t>(std::min(last, g - 1.0));
    const double d = dx / h;
    const double u0 = (lo + static_cast<double>(jlo) * dx - y) / h;
    const std::size_t count = jhi - jlo + 1;

    if (d > 0.5 || count < 2 * kLanes) {
        for (std::size_t j = jlo; j <= jhi; ++j) {
            const double u = (lo + static_cast<double>(j) * dx - y) / h;
            out[j] += mass * std::exp(-0.5 * u * u);
        }
        return;
    }

    // Lane l starts at grid point jlo + l and advances by `stride` bandwidths.
    const double stride = static_cast<double>(kLanes) * d;
    std::array<double, kLanes> val{};
    std::array<double, kLanes> ratio{};
    val[0] = mass * std::exp(-0.5 * u0 * u0);
    ratio[0] = std::exp(-u0 * stride - 0.5 * stride * stride);
    double step = std::exp(-u0 * d - 0.5 * d * d);
    const double step_q = std::exp(-d * d);
    const double lane_q = std::exp(-d * stride);
    for (std::size_t l = 1; l < kLanes; ++l) {
        val[l] = val[l - 1] * step;
        step *= step_q;
        ratio[l] = ratio[l - 1] * lane_q;
    }
    const double qs = std::exp(-stride * stride);
    const Pack q = Pack{} + qs;

    Pack v0 = load(&val[0]), v1 = load(&val[kWidth]);
    Pack v2 = load(&val[2 * kWidth]), v3 = load(&val[3 * kWidth]);
    Pack r0 = load(&ratio[0]), r1 = load(&ratio[kWidth]);
    Pack r2 = load(&ratio[2 * kWidth]), r3 = load(&ratio[3 * kWidth]);
    double* dst = out.data() + jlo;
    std::size_t j = 0;
    for (; j + kLanes <= count; j += kLanes) {
        double* p = dst + j;
        store(p, load(p) + v0);
        store(p + kWidth, load(p + kWidth) + v1);
        store(p + 2 * kWidth, load(p + 2 * kWidth) + v2);
        store(p + 3 * kWidth, load(p + 3 * kWidth) + v3);
        v0 *= r0;
        v1 *= r1;
        v2 *= r2;
        v3 *= r3;
        r0 *= q;
        r1 *= q;
        r2 *= q;
        r3 *= q;
    }
    store(&val[0], v0);
    store(&val[kWidth], v1);
    store(&val[2 * kWidth], v2);
    store(&val[3 * kWidth], v3);
    for (std::size_t l = 0; j + l < count; ++l) {
        dst[j + l] += val[l];
    }
}

DensitySummary tabulate(std::span<const double> sample, std::span<const double> masses,
                        double h, std::size_t grid_size) {
    if (grid_size < 16) {
        throw DomainError("grid_size must be at least 16");
    }
    const auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
    const double lo = *mn - kGridPadding * h;
    const double hi = *mx + kGridPadding * h;
    const double dx = (hi - lo) / static_cast<double>(grid_size - 1);

    std::vector<double> grid(grid_size);
    for (std::size_t j = 0; j < grid_size; ++j) {
        grid[j] = lo + static_cast<double>(j) * dx;
    }
    grid.back() = hi;

    std::vector<double> density(grid_size, 0.0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        accumulate_kernel(density, lo, dx, h, sample[i], masses[i]);
    }
    // Normalized by the grid's own trapezoidal mass rather than 1/(h sqrt(2 pi)),
    // so that a bandwidth too narrow for the grid step still yields a density.
    const double mass = trapezoid(grid, density);
    if (!(mass > 0.0)) {
        throw DegenerateSampleError("bandwidth is too small for the grid to resolve any kernel");
    }
    for (double& v : density) {
        v /= mass;
    }
    return DensitySummary(std::move(grid), std::move(density), h);
}

}  // namespace

DensitySummary::DensitySummary(std::vector<double> grid, std::vector<double> density,
                               double bandwidth)
    : grid_(std::move(grid)), density_(std::move(density)), bandwidth_(bandwidth) {
    if (grid_.size() < 2 || grid_.size() != density_.size()) {
        throw DomainError("density summary needs matching grid and density of length >= 2");
    }
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
        throw DomainError("bandwidth must be positive");
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (!std::isfinite(grid_[i]) || (i > 0 && !(grid_[i] > grid_[i - 1]))) {
            throw DomainError("grid must be finite and strictly increasing");
        }
        if (!std::isfinite(density_[i]) || density_[i] < 0.0) {
            throw DomainError("density values must be finite and nonnegative");
        }
    }
    const double total = integral();
    if (std::abs(total - 1.0) > kIntegralTolerance) {
        throw DomainError("density integrates to " + std::to_string(total) + ", not 1");
    }
}

double DensitySummary::operator()(double y) const {
    if (y < grid_.front() || y > grid_.back()) {
        return 0.0;
    }
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), y);
    if (it == grid_.end()) {
        return density_.back();
    }
    const auto k = static_cast<std::size_t>(it - grid_.begin()) - 1;
    const double t = (y - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return density_[k] + t * (density_[k + 1] - density_[k]);
}

double DensitySummary::integral() const { return trapezoid(grid_, density_); }

double silverman_bandwidth(std::span<const double> sample) {
    const auto n = static_cast<double>(sample.size());
    if (sample.size() < 2) {
        throw DomainError("bandwidth needs at least two observations");
    }
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : sorted) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    return rule_of_thumb(sd, iqr, n);
}

DensitySummary kde(std::span<const double> sample, std::size_t grid_size) {
    const double h = silverman_bandwidth(sample);
    const std::vector<double> masses(sample.size(), 1.0 / static_cast<double>(sample.size()));
    return tabulate(sample, masses, h, grid_size);
}

DensitySummary weighted_kde(std::span<const double> sample, std::span<const double> weights,
                            std::size_t grid_size) {
    if (sample.size() < 2 || weights.size() != sample.size()) {
        throw DomainError("weighted kde needs >= 2 points and one weight per point");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
        throw DomainError("weights must have positive total");
    }
    std::vector<double> w(weights.size());
    double mean = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (weights[i] < 0.0) {
            throw DomainError("weights must be nonnegative");
        }
        w[i] = weights[i] / total;
        mean += w[i] * sample[i];
        sum_sq += w[i] * w[i];
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        ss += w[i] * (sample[i] - mean) * (sample[i] - mean);
    }
    // Reliability-weight correction; equals the n-1 sample variance for equal weights.
    const double var = sum_sq < 1.0 ? ss / (1.0 - sum_sq) : 0.0;

    std::vector<std::size_t> order(sample.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sample[a] < sample[b]; });
    const double iqr = weighted_quantile(sample, w, order, 0.75) -
                       weighted_quantile(sample, w, order, 0.25);

    const double h = rule_of_thumb(std::sqrt(var), iqr, 1.0 / sum_sq);
    // Zero-weight points carry no mass and must not stretch the grid.
    std::vector<double> support;
    std::vector<double> masses;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) {
            support.push_back(sample[i]);
            masses.push_back(w[i]);
        }
    }
    return tabulate(support, masses, h, grid_size);
}

double hellinger(const DensitySummary& f, const DensitySummary& g, double cutoff) {
    const double cutoff_sq = cutoff * cutoff;
    const auto& fx = f.grid();
    const auto& fy = f.density();
    const auto& gx = g.grid();
    const auto& gy = g.density();

    // Piecewise-linear value of a tabulated density at y, where k is the
    // index of the first grid point >= y.
    auto value = [](const std::vector<double>& x, const std::vector<double>& y, std::size_t k,
                    double at) {
        if (k == x.size() || (k == 0 && at < x.front())) {
            return 0.0;
        }
        if (x[k] == at || k == 0) {
            return y[k];
        }
        const double t = (at - x[k - 1]) / (x[k] - x[k - 1]);
        return y[k - 1] + t * (y[k] - y[k - 1]);
    };

    std::size_t i = 0;
    std::size_t j = 0;
    double sum = 0.0;
    double prev_y = 0.0;
    double prev_v = 0.0;
    bool first = true;
    while (i < fx.size() || j < gx.size()) {
        double at = 0.0;
        if (j == gx.size() || (i < fx.size() && fx[i] <= gx[j])) {
            at = fx[i];
        } else {
            at = gx[j];
        }
        const double diff = std::sqrt(value(fx, fy, i, at)) - std::sqrt(value(gx, gy, j, at));
        const double v = diff * diff;
        if (!first) {
            sum += 0.5 * (at - prev_y) * (v + prev_v);
            if (sum > cutoff_sq) {
                return std::max(std::sqrt(sum), std::nextafter(cutoff, std::numeric_limits<double>::infinity()));
            }
        }
        first = false;
        prev_y = at;
        prev_v = v;
        if (i < fx.size() && fx[i] == at) {
            ++i;
        }
        if (j < gx.size() && gx[j] == at) {
            ++j;
        }
    }
    return std::sqrt(std::max(sum, 0.0));
}

double abc_distance(const ObservedDataset& obs, std::span<const double> sim, double cutoff) {
    if (sim.size() < 2) {
        throw DomainError("simulated sample needs at least two values");
    }
    return hellinger(obs.summary(), kde(sim, obs.grid_size()), cutoff);
}

}  // namespace abcmix
