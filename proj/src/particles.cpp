#include "abcmix/particles.hpp"

#include <cmath>

#include "abcmix/error.hpp"

namespace abcmix {

void KernelScales::validate() const {
    if (mean_scale_sq.size() != variance_scale_sq.size()) {
        throw DomainError("kernel scales need one entry per component");
    }
    for (std::size_t i = 0; i < mean_scale_sq.size(); ++i) {
        if (!(mean_scale_sq[i] > 0.0) || !(variance_scale_sq[i] > 0.0)) {
            throw DomainError("kernel scales must be positive");
        }
    }
    if (!(retention >= 0.0 && retention <= 1.0)) {
        throw DomainError("retention must lie in [0, 1]");
    }
}

std::size_t ParticleSystem::components() const {
    return particles.empty() ? 0 : particles.front().params.components();
}

std::vector<double> ParticleSystem::weights() const {
    std::vector<double> w(particles.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = particles[j].importance_weight;
    }
    return w;
}

std::vector<double> ParticleSystem::weight_values(std::size_t component) const {
    std::vector<double> v(particles.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = particles[j].params.weights().at(component);
    }
    return v;
}

std::vector<double> ParticleSystem::mean_values(std::size_t component) const {
    std::vector<double> v(particles.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = particles[j].params.means().at(component);
    }
    return v;
}

std::vector<double> ParticleSystem::variance_values(std::size_t component) const {
    std::vector<double> v(particles.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = particles[j].params.variances().at(component);
    }
    return v;
}

void normalize_weights(ParticleSystem& system) {
    double total = 0.0;
    for (const auto& p : system.particles) {
        total += p.importance_weight;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateSystemError("importance weights have zero or non-finite total");
    }
    for (auto& p : system.particles) {
        p.importance_weight /= total;
    }
}

double effective_sample_size(const ParticleSystem& system) {
    double total = 0.0;
    double sq = 0.0;
    for (const auto& p : system.particles) {
        total += p.importance_weight;
        sq += p.importance_weight * p.importance_weight;
    }
    return sq > 0.0 ? total * total / sq : 0.0;
}

}  // namespace abcmix
