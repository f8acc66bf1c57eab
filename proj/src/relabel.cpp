#include "abcmix/relabel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "abcmix/error.hpp"

namespace abcmix {

namespace {

constexpr std::array<ParameterSet, 3> kPrecedence = {ParameterSet::means, ParameterSet::variances,
                                                     ParameterSet::weights};

const std::vector<double>& values_of(const MixtureParams& p, ParameterSet set) {
    switch (set) {
        case ParameterSet::weights:
            return p.weights();
        case ParameterSet::means:
            return p.means();
        case ParameterSet::variances:
            return p.variances();
    }
    return p.means();
}

bool is_candidate(ParameterSet set, const PriorSpec& prior) {
    switch (set) {
        case ParameterSet::weights:
            return prior.weights_free();
        case ParameterSet::variances:
            return prior.variances_free();
        case ParameterSet::means:
            return true;
    }
    return false;
}

struct SetScore {
    double score = 0.0;
    bool has_spread = false;
};

SetScore score_set(const ParticleSystem& system, ParameterSet set) {
    const std::size_t n = system.size();
    const std::size_t k = system.components();
    std::vector<double> ordered(n * k);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& v = values_of(system.particles[j].params, set);
        std::copy(v.begin(), v.end(), ordered.begin() + static_cast<std::ptrdiff_t>(j * k));
        std::sort(ordered.begin() + static_cast<std::ptrdiff_t>(j * k),
                  ordered.begin() + static_cast<std::ptrdiff_t>((j + 1) * k));
    }
    const auto total = static_cast<double>(n * k);
    const double mean = std::accumulate(ordered.begin(), ordered.end(), 0.0) / total;
    double ss = 0.0;
    for (double x : ordered) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = total > 1.0 ? std::sqrt(ss / (total - 1.0)) : 0.0;
    if (!(sd > 0.0)) {
        return {};
    }
    std::vector<double> representative(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            representative[i] += normal_cdf((ordered[j * k + i] - mean) / sd);
        }
    }
    const auto [lo, hi] = std::minmax_element(representative.begin(), representative.end());
    return {(*hi - *lo) / static_cast<double>(n), true};
}

// Components whose fixed values differ may not trade places. Returns, for
// each class of interchangeable components, their indices in ascending order.
std::vector<std::vector<std::size_t>> exchangeable_classes(const PriorSpec& prior,
                                                           std::size_t k) {
    std::map<std::pair<double, double>, std::vector<std::size_t>> by_key;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = prior.fixed_weights ? (*prior.fixed_weights)[i] : 0.0;
        const double v = prior.fixed_variances ? (*prior.fixed_variances)[i] : 0.0;
        by_key[{w, v}].push_back(i);
    }
    std::vector<std::vector<std::size_t>> classes;
    for (auto& [key, members] : by_key) {
        classes.push_back(std::move(members));
    }
    return classes;
}

}  // namespace

std::string_view to_string(ParameterSet set) {
    switch (set) {
        case ParameterSet::weights:
            return "weights";
        case ParameterSet::means:
            return "means";
        case ParameterSet::variances:
            return "variances";
    }
    return "unknown";
}

ParameterSet parse_parameter_set(std::string_view name) {
    for (auto set : kPrecedence) {
        if (to_string(set) == name) {
            return set;
        }
    }
    throw ConfigError("unknown parameter set '" + std::string(name) +
                      "' (expected weights, means or variances)");
}

std::array<double, 3> separation_scores(const ParticleSystem& system, const PriorSpec& prior) {
    std::array<double, 3> scores{};
    for (auto set : kPrecedence) {
        if (is_candidate(set, prior)) {
            scores[static_cast<std::size_t>(set)] = score_set(system, set).score;
        }
    }
    return scores;
}

std::pair<ParticleSystem, RelabelReport> relabel(const ParticleSystem& system,
                                                 const PriorSpec& prior,
                                                 std::optional<ParameterSet> forced_key) {
    if (system.particles.empty()) {
        throw DomainError("cannot relabel an empty particle system");
    }
    const std::size_t k = system.components();
    if (k < 2) {
        throw DomainError("relabeling needs at least two components");
    }

    RelabelReport report;
    bool any_spread = false;
    bool have_choice = false;
    for (auto set : kPrecedence) {
        if (!is_candidate(set, prior)) {
            continue;
        }
        const SetScore s = score_set(system, set);
        any_spread = any_spread || s.has_spread;
        report.per_parameter_scores[static_cast<std::size_t>(set)] = s.score;
        if (!have_choice || s.score > report.separation_score) {
            report.chosen_parameter = set;
            report.separation_score = s.score;
            have_choice = true;
        }
    }
    if (!any_spread && !forced_key) {
        throw DegenerateSystemError("no candidate parameter set has any spread across particles");
    }
    if (forced_key) {
        report.chosen_parameter = *forced_key;
    }

    const auto classes = exchangeable_classes(prior, k);
    ParticleSystem out = system;
    std::vector<std::size_t> order(k);
    std::vector<std::size_t> members;
    for (auto& particle : out.particles) {
        const auto& key = values_of(particle.params, report.chosen_parameter);
        for (const auto& positions : classes) {
            members = positions;
            std::stable_sort(members.begin(), members.end(),
                             [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
            for (std::size_t m = 0; m < positions.size(); ++m) {
                order[positions[m]] = members[m];
            }
        }
        bool identity = true;
        for (std::size_t i = 0; i < k; ++i) {
            identity = identity && order[i] == i;
        }
        if (!identity) {
            particle.params = particle.params.permuted(order);
        }
    }
    return {std::move(out), report};
}

}  // namespace abcmix
