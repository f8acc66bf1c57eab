#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "abcmix/dataset.hpp"
#include "abcmix/kernels.hpp"
#include "abcmix/mixture.hpp"
#include "abcmix/particles.hpp"
#include "abcmix/relabel.hpp"

namespace abcmix {

struct RunConfig {
    std::size_t n_particles = 1000;
    /// Prior draws for the first population; 0 means 10 * n_particles.
    std::size_t n_init = 0;
    double quantile = 0.5;
    double retention = 0.5;
    double stop_threshold = 0.05;
    std::size_t max_iterations = 30;
    std::size_t max_attempts_per_particle = 100000;
    std::uint64_t seed = 0;
    std::size_t grid_size = kDefaultGridSize;
    bool literal_kernel_density = false;
    bool use_measurement_errors = false;
    /// Overrides the automatic relabeling key.
    std::optional<ParameterSet> relabel_key;
    /// Worker threads for the acceptance loops; 0 uses all hardware threads.
    /// Results do not depend on this value.
    std::size_t threads = 1;
    /// Stop once a population reaches this tolerance; 0 disables.
    double target_tolerance = 0.0;
    /// Stop before an iteration whose projected cost (N over the last
    /// acceptance rate) would push the total simulation count past this; 0
    /// disables.
    std::size_t max_simulations = 0;

    std::size_t effective_n_init() const noexcept {
        return n_init == 0 ? 10 * n_particles : n_init;
    }
    /// Throws ConfigError for out-of-range fields.
    void validate() const;
};

struct IterationTelemetry {
    std::size_t iteration = 0;
    double tolerance = 0.0;
    double acceptance_rate = 0.0;
    double ess = 0.0;
    std::size_t attempts = 0;
    /// Simulations whose KDE failed for lack of spread.
    std::size_t degenerate_simulations = 0;
    /// Candidates whose importance weight underflowed to zero.
    std::size_t zero_weights = 0;
    /// Largest Hellinger distance between consecutive weighted marginals;
    /// absent for the first population.
    std::optional<double> marginal_shift;
    std::optional<RelabelReport> relabel;
    double seconds = 0.0;
};

enum class StopReason {
    stopping_rule,
    max_iterations,
    tolerance_plateau,
    target_tolerance,
    simulation_budget,
};

std::string_view to_string(StopReason reason);

struct RunResult {
    ParticleSystem system;
    std::vector<IterationTelemetry> telemetry;
    StopReason reason = StopReason::max_iterations;
};

using RunSink = std::function<void(const IterationTelemetry&)>;

/// Forward model selected by the config: plain mixture draws, or with rank
/// matched measurement errors when `use_measurement_errors` is set.
std::vector<double> forward_simulate(const MixtureParams& params, const ObservedDataset& data,
                                     const RunConfig& config, Rng& rng);

/// First population: N_init prior draws, the N closest kept, tolerance set to
/// the N-th smallest distance, equal weights, relabeled.
ParticleSystem initialize(const PriorSpec& prior, const ObservedDataset& data,
                          const RunConfig& config, IterationTelemetry* telemetry = nullptr);

/// The ceil(qN)-th smallest distance of the population.
double next_tolerance(const ParticleSystem& system, double q);

/// One population move at an explicit tolerance.
ParticleSystem step_with_tolerance(const ParticleSystem& system, double tolerance,
                                   const PriorSpec& prior, const ObservedDataset& data,
                                   const RunConfig& config,
                                   IterationTelemetry* telemetry = nullptr);

/// One population move at next_tolerance(system, config.quantile).
ParticleSystem step(const ParticleSystem& system, const PriorSpec& prior,
                    const ObservedDataset& data, const RunConfig& config,
                    IterationTelemetry* telemetry = nullptr);

/// Largest Hellinger distance between the importance-weighted KDEs of
/// matching free marginals (each weight, mean and variance slot).
double marginal_shift(const ParticleSystem& current, const ParticleSystem& previous,
                      const PriorSpec& prior, std::size_t grid_size = kDefaultGridSize);

/// True iff every free marginal moved by less than `threshold`.
bool should_stop(const ParticleSystem& current, const ParticleSystem& previous,
                 const PriorSpec& prior, double threshold,
                 std::size_t grid_size = kDefaultGridSize);

/// Full sampler: initialize, then step until the stopping rule, a tolerance
/// plateau or max_iterations. Each population is reported to `sink`.
RunResult run(const PriorSpec& prior, const ObservedDataset& data, const RunConfig& config,
              const RunSink& sink = {});

}  // namespace abcmix
