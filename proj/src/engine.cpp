#include "abcmix/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "abcmix/error.hpp"
#include "abcmix/summary.hpp"

namespace abcmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t worker_count(const RunConfig& config, std::size_t work) {
    std::size_t n = config.threads;
    if (n == 0) {
        n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    return std::max<std::size_t>(1, std::min(n, work));
}

// Runs body(i) for i in [0, count) on `workers` threads. The first exception
// stops the remaining work and is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

std::size_t pick(std::span<const double> cumulative, Rng& rng) {
    const double u = uniform_open(rng) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

ParticleSystem relabeled(ParticleSystem system, const PriorSpec& prior, const RunConfig& config,
                         IterationTelemetry* telemetry) {
    if (system.components() < 2) {
        return system;
    }
    auto [out, report] = relabel(system, prior, config.relabel_key);
    if (telemetry != nullptr) {
        telemetry->relabel = report;
    }
    return std::move(out);
}

// Hellinger distance between two weighted marginals, with constant samples
// treated as point masses.
double marginal_distance(const std::vector<double>& a, const std::vector<double>& wa,
                         const std::vector<double>& b, const std::vector<double>& wb,
                         std::size_t grid_size) {
    const bool a_const = std::adjacent_find(a.begin(), a.end(), std::not_equal_to<>()) == a.end();
    const bool b_const = std::adjacent_find(b.begin(), b.end(), std::not_equal_to<>()) == b.end();
    if (a_const || b_const) {
        return (a_const && b_const && a.front() == b.front()) ? 0.0 : std::sqrt(2.0);
    }
    return hellinger(weighted_kde(a, wa, grid_size), weighted_kde(b, wb, grid_size));
}

}  // namespace

void RunConfig::validate() const {
    if (n_particles < 2) {
        throw ConfigError("n_particles must be at least 2");
    }
    if (effective_n_init() < n_particles) {
        throw ConfigError("n_init must be at least n_particles");
    }
    if (!(quantile > 0.0 && quantile <= 1.0)) {
        throw ConfigError("quantile must lie in (0, 1]");
    }
    if (!(retention >= 0.0 && retention <= 1.0)) {
        throw ConfigError("retention must lie in [0, 1]");
    }
    if (!(stop_threshold >= 0.0)) {
        throw ConfigError("stop_threshold must be nonnegative");
    }
    if (max_iterations < 1) {
        throw ConfigError("max_iterations must be at least 1");
    }
    if (max_attempts_per_particle < 1) {
        throw ConfigError("max_attempts_per_particle must be at least 1");
    }
    if (grid_size < 16) {
        throw ConfigError("grid_size must be at least 16");
    }
    if (!(target_tolerance >= 0.0)) {
        throw ConfigError("target_tolerance must be nonnegative");
    }
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
        case StopReason::stopping_rule:
            return "stopping_rule";
        case StopReason::max_iterations:
            return "max_iterations";
        case StopReason::tolerance_plateau:
            return "tolerance_plateau";
        case StopReason::target_tolerance:
            return "target_tolerance";
        case StopReason::simulation_budget:
            return "simulation_budget";
    }
    return "unknown";
}

std::vector<double> forward_simulate(const MixtureParams& params, const ObservedDataset& data,
                                     const RunConfig& config, Rng& rng) {
    if (config.use_measurement_errors) {
        return simulate_with_errors(params, data, rng);
    }
    return simulate(params, data.size(), rng);
}

ParticleSystem initialize(const PriorSpec& prior, const ObservedDataset& data,
                          const RunConfig& config, IterationTelemetry* telemetry) {
    const auto start = Clock::now();
    config.validate();
    prior.validate();
    const std::size_t n_init = config.effective_n_init();
    const std::size_t n = config.n_particles;

    std::vector<std::optional<MixtureParams>> proposals(n_init);
    std::vector<double> distances(n_init, kInf);
    std::vector<char> degenerate(n_init, 0);
    parallel_for(n_init, worker_count(config, n_init), [&](std::size_t j) {
        Rng rng = make_stream(config.seed, 1, j, 0);
        proposals[j] = sample_prior(prior, rng);
        const auto sim = forward_simulate(*proposals[j], data, config, rng);
        try {
            distances[j] = abc_distance(data, sim);
        } catch (const DegenerateSampleError&) {
            degenerate[j] = 1;
        }
    });

    const auto n_degenerate =
        static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
    if (2 * n_degenerate > n_init) {
        std::ostringstream msg;
        msg << n_degenerate << " of " << n_init
            << " prior simulations had zero spread; check the prior and the data";
        throw EngineAbort(msg.str());
    }

    std::vector<std::size_t> order(n_init);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
    const double tolerance = distances[order[n - 1]];
    if (!std::isfinite(tolerance)) {
        throw EngineAbort("fewer than n_particles prior simulations produced a finite distance");
    }

    ParticleSystem system;
    system.iteration = 1;
    system.tolerance = tolerance;
    system.particles.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        system.particles.push_back(
            Particle{*proposals[order[r]], 1.0 / static_cast<double>(n), distances[order[r]]});
    }

    IterationTelemetry local;
    system = relabeled(std::move(system), prior, config, &local);
    local.iteration = 1;
    local.tolerance = tolerance;
    local.attempts = n_init;
    local.acceptance_rate = static_cast<double>(n) / static_cast<double>(n_init);
    local.ess = effective_sample_size(system);
    local.degenerate_simulations = n_degenerate;
    local.seconds = seconds_since(start);
    if (telemetry != nullptr) {
        *telemetry = local;
    }
    return system;
}

double next_tolerance(const ParticleSystem& system, double q) {
    if (system.particles.empty()) {
        throw DomainError("cannot take a quantile of an empty population");
    }
    std::vector<double> d(system.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        d[j] = system.particles[j].distance;
    }
    const auto n = static_cast<double>(d.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, d.size());
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(rank - 1), d.end());
    return d[rank - 1];
}

ParticleSystem step_with_tolerance(const ParticleSystem& system, double tolerance,
                                   const PriorSpec& prior, const ObservedDataset& data,
                                   const RunConfig& config, IterationTelemetry* telemetry) {
    const auto start = Clock::now();
    config.validate();
    const std::size_t n = config.n_particles;
    const std::size_t k = system.components();
    const std::size_t iteration = system.iteration + 1;

    const KernelScales scales = compute_scales(system, prior, config.retention);
    std::vector<double> cumulative(system.size());
    {
        double acc = 0.0;
        for (std::size_t j = 0; j < system.size(); ++j) {
            acc += system.particles[j].importance_weight;
            cumulative[j] = acc;
        }
        if (!(acc > 0.0)) {
            throw EngineAbort("previous population has zero total importance weight");
        }
    }

    std::vector<std::optional<Particle>> accepted(n);
    std::vector<std::size_t> attempts(n, 0);
    std::vector<std::size_t> degenerate(n, 0);
    parallel_for(n, worker_count(config, n), [&](std::size_t slot) {
        Rng rng = make_stream(config.seed, iteration, slot);
        for (std::size_t a = 0; a < config.max_attempts_per_particle; ++a) {
            const auto& source = system.particles[pick(cumulative, rng)].params;
            const auto& weight_source = system.particles[pick(cumulative, rng)].params;

            std::vector<double> weights =
                prior.fixed_weights
                    ? *prior.fixed_weights
                    : resample_weights(weight_source.weights(), prior.dirichlet_concentration,
                                       config.retention, rng);
            std::vector<double> means(k);
            for (std::size_t i = 0; i < k; ++i) {
                means[i] = perturb_mean(source.means()[i], scales.mean_scale_sq[i], rng);
            }
            std::vector<double> variances;
            if (prior.fixed_variances) {
                variances = *prior.fixed_variances;
            } else {
                variances.resize(k);
                for (std::size_t i = 0; i < k; ++i) {
                    variances[i] =
                        perturb_variance(source.variances()[i], scales.variance_scale_sq[i], rng);
                }
            }
            MixtureParams candidate(std::move(weights), std::move(means), std::move(variances));
            const auto sim = forward_simulate(candidate, data, config, rng);
            double d = kInf;
            try {
                d = abc_distance(data, sim, tolerance);
            } catch (const DegenerateSampleError&) {
                ++degenerate[slot];
            }
            attempts[slot] = a + 1;
            if (d <= tolerance) {
                accepted[slot] = Particle{std::move(candidate), 0.0, d};
                return;
            }
        }
        std::ostringstream msg;
        msg << "slot " << slot << " exceeded " << config.max_attempts_per_particle
            << " attempts at iteration " << iteration << " (tolerance " << tolerance
            << "); acceptance rate below " << 1.0 / static_cast<double>(config.max_attempts_per_particle);
        throw EngineAbort(msg.str());
    });

    const ProposalDensity proposal(system, scales, prior,
                                   config.literal_kernel_density ? KernelDensityMode::literal
                                                                 : KernelDensityMode::truncated);
    std::vector<double> log_weights(n);
    std::vector<ImportanceDiagnostics> diagnostics(n);
    parallel_for(n, worker_count(config, n), [&](std::size_t slot) {
        log_weights[slot] =
            log_importance_weight(accepted[slot]->params, proposal, prior, &diagnostics[slot]);
    });

    ParticleSystem next;
    next.iteration = iteration;
    next.tolerance = tolerance;
    next.scales = scales;
    next.particles.reserve(n);
    std::vector<double> weights;
    try {
        weights = normalize_log_weights(log_weights);
    } catch (const DegenerateSystemError&) {
        throw EngineAbort("all importance weights are zero at iteration " +
                          std::to_string(iteration));
    }
    for (std::size_t slot = 0; slot < n; ++slot) {
        Particle p = std::move(*accepted[slot]);
        p.importance_weight = weights[slot];
        next.particles.push_back(std::move(p));
    }

    IterationTelemetry local;
    next = relabeled(std::move(next), prior, config, &local);
    local.iteration = iteration;
    local.tolerance = tolerance;
    local.attempts = std::accumulate(attempts.begin(), attempts.end(), std::size_t{0});
    local.acceptance_rate = static_cast<double>(n) / static_cast<double>(local.attempts);
    local.ess = effective_sample_size(next);
    local.degenerate_simulations =
        std::accumulate(degenerate.begin(), degenerate.end(), std::size_t{0});
    for (const auto& diag : diagnostics) {
        local.zero_weights += diag.underflows;
    }
    local.seconds = seconds_since(start);
    if (telemetry != nullptr) {
        *telemetry = local;
    }
    return next;
}

ParticleSystem step(const ParticleSystem& system, const PriorSpec& prior,
                    const ObservedDataset& data, const RunConfig& config,
                    IterationTelemetry* telemetry) {
    return step_with_tolerance(system, next_tolerance(system, config.quantile), prior, data,
                               config, telemetry);
}

double marginal_shift(const ParticleSystem& current, const ParticleSystem& previous,
                      const PriorSpec& prior, std::size_t grid_size) {
    const std::size_t k = current.components();
    if (k != previous.components()) {
        throw DomainError("populations have different component counts");
    }
    const auto wc = current.weights();
    const auto wp = previous.weights();
    double worst = 0.0;
    auto update = [&](const std::vector<double>& a, const std::vector<double>& b) {
        worst = std::max(worst, marginal_distance(a, wc, b, wp, grid_size));
    };
    for (std::size_t i = 0; i < k; ++i) {
        if (prior.weights_free()) {
            update(current.weight_values(i), previous.weight_values(i));
        }
        update(current.mean_values(i), previous.mean_values(i));
        if (prior.variances_free()) {
            update(current.variance_values(i), previous.variance_values(i));
        }
    }
    return worst;
}

bool should_stop(const ParticleSystem& current, const ParticleSystem& previous,
                 const PriorSpec& prior, double threshold, std::size_t grid_size) {
    return marginal_shift(current, previous, prior, grid_size) < threshold;
}

RunResult run(const PriorSpec& prior, const ObservedDataset& data, const RunConfig& config,
              const RunSink& sink) {
    RunResult result;
    IterationTelemetry telemetry;
    result.system = initialize(prior, data, config, &telemetry);
    result.telemetry.push_back(telemetry);
    if (sink) {
        sink(telemetry);
    }

    std::size_t simulations = telemetry.attempts;
    while (result.system.iteration < config.max_iterations) {
        if (config.target_tolerance > 0.0 && result.system.tolerance <= config.target_tolerance) {
            result.reason = StopReason::target_tolerance;
            return result;
        }
        if (config.max_simulations > 0 && result.telemetry.size() > 1) {
            const double rate = result.telemetry.back().acceptance_rate;
            const double projected = rate > 0.0 ? static_cast<double>(config.n_particles) / rate
                                                : std::numeric_limits<double>::infinity();
            if (static_cast<double>(simulations) + projected >
                static_cast<double>(config.max_simulations)) {
                result.reason = StopReason::simulation_budget;
                return result;
            }
        }
        const double tolerance = next_tolerance(result.system, config.quantile);
        if (tolerance >= result.system.tolerance) {
            result.reason = StopReason::tolerance_plateau;
            return result;
        }
        const auto start = Clock::now();
        telemetry = IterationTelemetry{};
        ParticleSystem next =
            step_with_tolerance(result.system, tolerance, prior, data, config, &telemetry);
        telemetry.marginal_shift = marginal_shift(next, result.system, prior, config.grid_size);
        telemetry.seconds = seconds_since(start);
        simulations += telemetry.attempts;
        result.telemetry.push_back(telemetry);
        if (sink) {
            sink(telemetry);
        }
        const bool stop = *telemetry.marginal_shift < config.stop_threshold;
        result.system = std::move(next);
        if (stop) {
            result.reason = StopReason::stopping_rule;
            return result;
        }
    }
    result.reason = StopReason::max_iterations;
    return result;
}

}  // namespace abcmix
