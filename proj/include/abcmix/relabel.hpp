#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>

#include "abcmix/particles.hpp"

namespace abcmix {

enum class ParameterSet { weights = 0, means = 1, variances = 2 };

std::string_view to_string(ParameterSet set);
/// Accepts "weights", "means" or "variances"; ConfigError otherwise.
ParameterSet parse_parameter_set(std::string_view name);

struct RelabelReport {
    ParameterSet chosen_parameter = ParameterSet::means;
    /// Max entry of per_parameter_scores.
    double separation_score = 0.0;
    /// Indexed by ParameterSet; zero for sets that are fixed by the prior.
    std::array<double, 3> per_parameter_scores{};
};

/// Separation score of each parameter set: sort each particle's values,
/// standardize them through the normal CDF using the pooled mean and sample
/// sd of all N*K values, average the k-th standardized order statistic over
/// particles, and take the largest gap between those K representatives.
std::array<double, 3> separation_scores(const ParticleSystem& system, const PriorSpec& prior);

/// Resolves label switching: picks the free parameter set with the largest
/// separation score (ties: means, then variances, then weights) and permutes
/// every particle's components jointly so that set is ascending.
///
/// Components carrying different fixed values (for example distinct known
/// weights) are identifiable and never swapped; sorting happens among
/// components whose fixed values agree.
///
/// `forced_key` overrides the choice of sort key. Throws DegenerateSystemError
/// when no candidate set has any spread, and DomainError for K < 2.
std::pair<ParticleSystem, RelabelReport> relabel(
    const ParticleSystem& system, const PriorSpec& prior,
    std::optional<ParameterSet> forced_key = std::nullopt);

}  // namespace abcmix
