#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "abcmix/dataset.hpp"
#include "abcmix/engine.hpp"
#include "abcmix/mixture.hpp"

namespace abcmix::io {

/// Shortest round-trip text for a double (17 significant digits).
std::string format_double(double v);

/// CSV with header `value` or `value,error`. ParseError carries the line
/// number of a malformed row; negative errors raise DomainError.
ObservedDataset read_dataset_csv(const std::filesystem::path& path,
                                 std::size_t grid_size = kDefaultGridSize);
ObservedDataset parse_dataset_csv(const std::string& text,
                                  std::size_t grid_size = kDefaultGridSize);
void write_dataset_csv(const std::filesystem::path& path, const ObservedDataset& data);
void write_values_csv(const std::filesystem::path& path, const std::vector<double>& values);

/// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return entries_.contains(key); }
    void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }
    std::optional<std::string> get(const std::string& key) const;

    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    /// Canonical text, one sorted `key = value` per line.
    std::string to_text() const;
    const std::map<std::string, std::pair<std::string, std::size_t>>& entries() const {
        return entries_;
    }

private:
    std::map<std::string, std::pair<std::string, std::size_t>> entries_;
};

struct RunSetup {
    RunConfig config;
    PriorSpec prior;
};

/// Builds the run configuration and prior. `components` and `seed` are
/// required; hyperparameters not given fall back to data_driven_prior().
RunSetup build_setup(const KeyValues& kv, const ObservedDataset& data);

/// A bundled experiment: configuration text plus the dataset it runs on.
struct Preset {
    std::string name;
    std::string description;
    std::string config_text;
};

const std::vector<Preset>& presets();
/// ConfigError for an unknown name.
const Preset& find_preset(const std::string& name);
/// Regenerates (seeded) or loads the preset's dataset.
ObservedDataset preset_dataset(const std::string& name, std::size_t grid_size = kDefaultGridSize);
std::filesystem::path data_directory();

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
};

/// Importance-weighted mean and sd of every parameter, in the order
/// weight_1..K, mean_1..K, var_1..K.
std::vector<ParameterSummary> posterior_summary(const ParticleSystem& system);

struct ParticleTable {
    std::size_t components = 0;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_particle_table(const std::filesystem::path& path, const ParticleSystem& system);
ParticleTable read_particle_table(const std::filesystem::path& path);
/// Weighted summary recomputed from a particle table.
std::vector<ParameterSummary> posterior_summary(const ParticleTable& table);

void write_telemetry(const std::filesystem::path& path,
                     const std::vector<IterationTelemetry>& telemetry);

/// Writes particles_final.csv, telemetry.csv, summary.json, config.txt and
/// marginals/<parameter>.csv into `dir`.
void write_run_artifact(const std::filesystem::path& dir, const RunResult& result,
                        const RunSetup& setup, const KeyValues& config_echo,
                        double wall_seconds);

/// Reads a run directory and recomputes the posterior summary from its
/// particle table. ParseError when files are missing.
std::vector<ParameterSummary> summarize_run(const std::filesystem::path& dir);
void print_summary(std::ostream& out, const std::vector<ParameterSummary>& summary);

void write_loglik_grid(const std::filesystem::path& path, const LogLikGrid& grid);

}  // namespace abcmix::io
