#include "abcmix/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "abcmix/error.hpp"
#include "abcmix/summary.hpp"

namespace abcmix::io {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(s);
    while (std::getline(in, field, sep)) {
        out.push_back(trim(field));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty()) {
        return std::nullopt;
    }
    return v;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    return out;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "components",           "seed",
        "data_seed",            "n_particles",
        "n_init",               "quantile",
        "retention",            "stop_threshold",
        "max_iterations",       "max_attempts_per_particle",
        "grid_size",            "literal_kernel_density",
        "use_measurement_errors", "relabel_key",
        "threads",              "dirichlet_concentration",
        "mean_prior_location",  "mean_prior_variance",
        "precision_shape",      "precision_rate",
        "fixed_weights",        "fixed_variances",
        "target_tolerance",     "max_simulations",
    };
    return keys;
}

std::vector<std::string> parameter_names(std::size_t k) {
    std::vector<std::string> names;
    for (const char* prefix : {"weight_", "mean_", "var_"}) {
        for (std::size_t i = 1; i <= k; ++i) {
            names.push_back(prefix + std::to_string(i));
        }
    }
    return names;
}

std::vector<ParameterSummary> weighted_summary(const std::vector<std::string>& names,
                                               const std::vector<std::vector<double>>& columns,
                                               const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    std::vector<ParameterSummary> out;
    for (std::size_t c = 0; c < names.size(); ++c) {
        double mean = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            mean += weights[j] * columns[c][j];
        }
        mean /= total;
        double ss = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            ss += weights[j] * (columns[c][j] - mean) * (columns[c][j] - mean);
        }
        out.push_back({names[c], mean, std::sqrt(ss / total)});
    }
    return out;
}

// Bundled experiment definitions. `data_seed` seeds the simulated datasets.
const char* const kTwoComponent = R"(# Two equal-size groups at -20 and 20 with known unit variances.
components = 2
data_seed = 162989
dirichlet_concentration = 1,1
mean_prior_location = 0
# Diffuse N(0, 100) prior on the means; set 0.01 for the concentrated reading.
mean_prior_variance = 100
fixed_variances = 1,1
n_particles = 1000
quantile = 0.5
retention = 0.5
stop_threshold = 0.05
max_iterations = 30
max_simulations = 20000000
seed = 20190611
)";

const char* const kThreeComponent = R"(# The two-group data plus five standard-normal points near zero.
components = 3
data_seed = 162989
dirichlet_concentration = 1,1,1
mean_prior_location = 0
mean_prior_variance = 100
fixed_variances = 1,1,1
n_particles = 1000
quantile = 0.5
retention = 0.5
stop_threshold = 0.05
max_iterations = 30
max_simulations = 20000000
seed = 20190611
)";

const char* const kMarin = R"(# 500 draws of 0.7 N(0, 1) + 0.3 N(2.5, 1). Component 1 carries the known
# weight 0.3, component 2 the weight 0.7; variances are known.
components = 2
data_seed = 8966
fixed_weights = 0.3,0.7
fixed_variances = 1,1
n_particles = 1000
quantile = 0.5
retention = 0.5
stop_threshold = 0.05
max_iterations = 30
max_simulations = 2000000
seed = 20190611
)";

const char* const kGalaxy = R"(# Recessional velocities of 82 galaxies (1000 km/s), three components.
components = 3
precision_shape = 2
precision_rate = 1
# N(mean, range^2) prior on the means; the sample variance is too tight to
# reach the cluster near 33.
mean_prior_variance = 630
relabel_key = means
n_particles = 500
max_attempts_per_particle = 1000000
quantile = 0.5
retention = 0.5
stop_threshold = 0.05
target_tolerance = 0.15
max_iterations = 40
max_simulations = 30000000
use_measurement_errors = false
seed = 20190611
)";

const char* const kGalaxyErrors = R"(# Galaxy velocities with per-point measurement errors in the forward model.
components = 3
precision_shape = 2
precision_rate = 1
# N(mean, range^2) prior on the means; the sample variance is too tight to
# reach the cluster near 33.
mean_prior_variance = 630
relabel_key = means
n_particles = 500
max_attempts_per_particle = 1000000
quantile = 0.5
retention = 0.5
stop_threshold = 0.05
target_tolerance = 0.15
max_iterations = 40
max_simulations = 30000000
use_measurement_errors = true
seed = 20190611
)";

std::vector<double> normal_block(Rng& rng, std::size_t n, double mean) {
    std::normal_distribution<double> normal(mean, 1.0);
    std::vector<double> out(n);
    for (double& v : out) {
        v = normal(rng);
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ObservedDataset parse_dataset_csv(const std::string& text, std::size_t grid_size) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split(trim(line), ',');
        }
    }
    if (header.empty()) {
        throw ParseError("dataset is empty");
    }
    const bool with_errors = header.size() == 2 && header[0] == "value" && header[1] == "error";
    if (!with_errors && !(header.size() == 1 && header[0] == "value")) {
        throw ParseError("header must be 'value' or 'value,error'", lineno);
    }
    std::vector<double> values;
    std::vector<double> errors;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(trim(line), ',');
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " field(s)", lineno);
        }
        const auto v = to_double(fields[0]);
        if (!v || !std::isfinite(*v)) {
            throw ParseError("malformed value '" + fields[0] + "'", lineno);
        }
        values.push_back(*v);
        if (with_errors) {
            const auto e = to_double(fields[1]);
            if (!e || !std::isfinite(*e)) {
                throw ParseError("malformed error '" + fields[1] + "'", lineno);
            }
            if (*e < 0.0) {
                throw DomainError("negative measurement error at line " + std::to_string(lineno));
            }
            errors.push_back(*e);
        }
    }
    if (values.empty()) {
        throw ParseError("dataset has no rows");
    }
    std::optional<std::vector<double>> errs;
    if (with_errors) {
        errs = std::move(errors);
    }
    return ObservedDataset(std::move(values), std::move(errs), grid_size);
}

ObservedDataset read_dataset_csv(const fs::path& path, std::size_t grid_size) {
    return parse_dataset_csv(read_file(path), grid_size);
}

void write_dataset_csv(const fs::path& path, const ObservedDataset& data) {
    auto out = open_out(path);
    out << (data.has_errors() ? "value,error\n" : "value\n");
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << format_double(data.values()[i]);
        if (data.has_errors()) {
            out << ',' << format_double((*data.measurement_errors())[i]);
        }
        out << '\n';
    }
}

void write_values_csv(const fs::path& path, const std::vector<double>& values) {
    auto out = open_out(path);
    out << "value\n";
    for (double v : values) {
        out << format_double(v) << '\n';
    }
}

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected 'key = value'", lineno);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ParseError("empty key or value", lineno);
        }
        if (!known_keys().contains(key)) {
            throw ParseError("unknown key '" + key + "'", lineno);
        }
        kv.entries_[key] = {value, lineno};
    }
    return kv;
}

KeyValues KeyValues::load(const fs::path& path) { return parse(read_file(path)); }

std::optional<std::string> KeyValues::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second.first;
}

double KeyValues::get_double(const std::string& key) const {
    const auto& [text, line] = entries_.at(key);
    const auto v = to_double(text);
    if (!v) {
        throw ParseError("'" + key + "' is not a number", line);
    }
    return *v;
}

std::size_t KeyValues::get_size(const std::string& key) const {
    const auto& [text, line] = entries_.at(key);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("'" + key + "' is not a nonnegative integer", line);
    }
    return v;
}

bool KeyValues::get_bool(const std::string& key) const {
    const auto& [text, line] = entries_.at(key);
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ParseError("'" + key + "' is not a boolean", line);
}

std::vector<double> KeyValues::get_doubles(const std::string& key) const {
    const auto& [text, line] = entries_.at(key);
    std::vector<double> out;
    for (const auto& field : split(text, ',')) {
        const auto v = to_double(field);
        if (!v) {
            throw ParseError("'" + key + "' must be a comma-separated list of numbers", line);
        }
        out.push_back(*v);
    }
    return out;
}

std::string KeyValues::to_text() const {
    std::ostringstream out;
    for (const auto& [key, value] : entries_) {
        out << key << " = " << value.first << '\n';
    }
    return out.str();
}

RunSetup build_setup(const KeyValues& kv, const ObservedDataset& data) {
    if (!kv.contains("components")) {
        throw ConfigError("config must set 'components'");
    }
    if (!kv.contains("seed")) {
        throw ConfigError("config must set 'seed'");
    }
    const std::size_t k = kv.get_size("components");
    if (k < 1) {
        throw ConfigError("components must be at least 1");
    }

    RunSetup setup;
    setup.prior = data_driven_prior(data, k);
    auto& prior = setup.prior;
    if (kv.contains("dirichlet_concentration")) {
        prior.dirichlet_concentration = kv.get_doubles("dirichlet_concentration");
    }
    if (kv.contains("mean_prior_location")) {
        prior.mean_prior_location = kv.get_double("mean_prior_location");
    }
    if (kv.contains("mean_prior_variance")) {
        prior.mean_prior_variance = kv.get_double("mean_prior_variance");
    }
    if (kv.contains("precision_shape")) {
        prior.precision_shape = kv.get_double("precision_shape");
    }
    if (kv.contains("precision_rate")) {
        prior.precision_rate = kv.get_double("precision_rate");
    }
    if (kv.contains("fixed_weights")) {
        prior.fixed_weights = kv.get_doubles("fixed_weights");
    }
    if (kv.contains("fixed_variances")) {
        prior.fixed_variances = kv.get_doubles("fixed_variances");
    }
    if (prior.dirichlet_concentration.size() != k) {
        throw ConfigError("dirichlet_concentration needs " + std::to_string(k) + " entries");
    }
    prior.validate();

    auto& c = setup.config;
    c.seed = kv.get_size("seed");
    if (kv.contains("n_particles")) c.n_particles = kv.get_size("n_particles");
    if (kv.contains("n_init")) c.n_init = kv.get_size("n_init");
    if (kv.contains("quantile")) c.quantile = kv.get_double("quantile");
    if (kv.contains("retention")) c.retention = kv.get_double("retention");
    if (kv.contains("stop_threshold")) c.stop_threshold = kv.get_double("stop_threshold");
    if (kv.contains("max_iterations")) c.max_iterations = kv.get_size("max_iterations");
    if (kv.contains("max_attempts_per_particle")) {
        c.max_attempts_per_particle = kv.get_size("max_attempts_per_particle");
    }
    if (kv.contains("grid_size")) c.grid_size = kv.get_size("grid_size");
    if (kv.contains("literal_kernel_density")) {
        c.literal_kernel_density = kv.get_bool("literal_kernel_density");
    }
    if (kv.contains("use_measurement_errors")) {
        c.use_measurement_errors = kv.get_bool("use_measurement_errors");
    }
    if (kv.contains("threads")) c.threads = kv.get_size("threads");
    if (kv.contains("target_tolerance")) c.target_tolerance = kv.get_double("target_tolerance");
    if (kv.contains("max_simulations")) c.max_simulations = kv.get_size("max_simulations");
    if (const auto key = kv.get("relabel_key"); key && *key != "auto") {
        c.relabel_key = parse_parameter_set(*key);
    }
    c.validate();
    if (c.use_measurement_errors && !data.has_errors()) {
        throw ConfigError("use_measurement_errors is set but the dataset has no error column");
    }
    return setup;
}

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = {
        {"two-component", "two equal groups at -20 and 20, 40 observations", kTwoComponent},
        {"three-component", "two-component data plus 5 points near 0, 45 observations",
         kThreeComponent},
        {"marin", "0.7 N(0,1) + 0.3 N(2.5,1), 500 observations, known weights", kMarin},
        {"galaxy", "82 galaxy velocities, three components, no measurement errors", kGalaxy},
        {"galaxy-errors", "82 galaxy velocities with measurement errors in the forward model",
         kGalaxyErrors},
    };
    return all;
}

const Preset& find_preset(const std::string& name) {
    for (const auto& p : presets()) {
        if (p.name == name) {
            return p;
        }
    }
    std::string names;
    for (const auto& p : presets()) {
        names += (names.empty() ? "" : ", ") + p.name;
    }
    throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
}

fs::path data_directory() {
    if (const char* env = std::getenv("ABCMIX_DATA_DIR")) {
        return env;
    }
    return ABCMIX_DATA_DIR;
}

ObservedDataset preset_dataset(const std::string& name, std::size_t grid_size) {
    const Preset& preset = find_preset(name);
    if (name == "galaxy" || name == "galaxy-errors") {
        return read_dataset_csv(data_directory() / "galaxy.csv", grid_size);
    }
    const auto kv = KeyValues::parse(preset.config_text);
    Rng rng = make_stream(kv.get_size("data_seed"));
    std::vector<double> values;
    if (name == "marin") {
        const MixtureParams truth({0.7, 0.3}, {0.0, 2.5}, {1.0, 1.0});
        values = simulate(truth, 500, rng);
    } else {
        values = normal_block(rng, 20, -20.0);
        const auto upper = normal_block(rng, 20, 20.0);
        values.insert(values.end(), upper.begin(), upper.end());
        if (name == "three-component") {
            const auto middle = normal_block(rng, 5, 0.0);
            values.insert(values.end(), middle.begin(), middle.end());
        }
    }
    return ObservedDataset(std::move(values), std::nullopt, grid_size);
}

std::vector<ParameterSummary> posterior_summary(const ParticleSystem& system) {
    const std::size_t k = system.components();
    std::vector<std::vector<double>> columns;
    for (std::size_t i = 0; i < k; ++i) columns.push_back(system.weight_values(i));
    for (std::size_t i = 0; i < k; ++i) columns.push_back(system.mean_values(i));
    for (std::size_t i = 0; i < k; ++i) columns.push_back(system.variance_values(i));
    return weighted_summary(parameter_names(k), columns, system.weights());
}

void write_particle_table(const fs::path& path, const ParticleSystem& system) {
    const std::size_t k = system.components();
    auto out = open_out(path);
    for (const auto& name : parameter_names(k)) {
        out << name << ',';
    }
    out << "importance_weight,distance\n";
    for (const auto& p : system.particles) {
        for (double v : p.params.weights()) out << format_double(v) << ',';
        for (double v : p.params.means()) out << format_double(v) << ',';
        for (double v : p.params.variances()) out << format_double(v) << ',';
        out << format_double(p.importance_weight) << ',' << format_double(p.distance) << '\n';
    }
}

ParticleTable read_particle_table(const fs::path& path) {
    if (!fs::exists(path)) {
        throw ParseError("missing particle table " + path.string());
    }
    std::istringstream in(read_file(path));
    std::string line;
    ParticleTable table;
    if (!std::getline(in, line)) {
        throw ParseError("particle table is empty");
    }
    table.columns = split(trim(line), ',');
    const std::size_t ncol = table.columns.size();
    if (ncol < 5 || (ncol - 2) % 3 != 0 || table.columns[ncol - 2] != "importance_weight" ||
        table.columns[ncol - 1] != "distance") {
        throw ParseError("unexpected particle table header", 1);
    }
    table.components = (ncol - 2) / 3;
    if (table.columns != [&] {
            auto expected = parameter_names(table.components);
            expected.push_back("importance_weight");
            expected.push_back("distance");
            return expected;
        }()) {
        throw ParseError("unexpected particle table header", 1);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(trim(line), ',');
        if (fields.size() != ncol) {
            throw ParseError("expected " + std::to_string(ncol) + " fields", lineno);
        }
        std::vector<double> row;
        for (const auto& f : fields) {
            const auto v = to_double(f);
            if (!v) {
                throw ParseError("malformed number '" + f + "'", lineno);
            }
            row.push_back(*v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) {
        throw ParseError("particle table has no rows");
    }
    return table;
}

std::vector<ParameterSummary> posterior_summary(const ParticleTable& table) {
    const std::size_t k = table.components;
    std::vector<std::vector<double>> columns(3 * k);
    std::vector<double> weights;
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < 3 * k; ++c) {
            columns[c].push_back(row[c]);
        }
        weights.push_back(row[3 * k]);
    }
    return weighted_summary(parameter_names(k), columns, weights);
}

void write_telemetry(const fs::path& path, const std::vector<IterationTelemetry>& telemetry) {
    auto out = open_out(path);
    out << "iteration,tolerance,acceptance_rate,ess,chosen_relabel_key,separation_score,"
           "attempts,marginal_shift,zero_weights,degenerate_simulations,seconds\n";
    for (const auto& t : telemetry) {
        out << t.iteration << ',' << format_double(t.tolerance) << ','
            << format_double(t.acceptance_rate) << ',' << format_double(t.ess) << ','
            << (t.relabel ? std::string(to_string(t.relabel->chosen_parameter)) : "none") << ','
            << (t.relabel ? format_double(t.relabel->separation_score) : "") << ','
            << t.attempts << ','
            << (t.marginal_shift ? format_double(*t.marginal_shift) : "") << ','
            << t.zero_weights << ',' << t.degenerate_simulations << ','
            << format_double(t.seconds) << '\n';
    }
}

void write_run_artifact(const fs::path& dir, const RunResult& result, const RunSetup& setup,
                        const KeyValues& config_echo, double wall_seconds) {
    fs::create_directories(dir / "marginals");
    write_particle_table(dir / "particles_final.csv", result.system);
    write_telemetry(dir / "telemetry.csv", result.telemetry);
    {
        auto out = open_out(dir / "config.txt");
        out << config_echo.to_text();
    }

    const auto& system = result.system;
    const std::size_t k = system.components();
    const auto weights = system.weights();
    const auto names = parameter_names(k);
    for (std::size_t c = 0; c < names.size(); ++c) {
        const std::size_t i = c % k;
        const auto values = c < k       ? system.weight_values(i)
                            : c < 2 * k ? system.mean_values(i)
                                        : system.variance_values(i);
        if (std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) ==
            values.end()) {
            continue;  // fixed slot
        }
        const auto density = weighted_kde(values, weights, setup.config.grid_size);
        auto out = open_out(dir / "marginals" / (names[c] + ".csv"));
        out << "value,density\n";
        for (std::size_t g = 0; g < density.grid().size(); ++g) {
            out << format_double(density.grid()[g]) << ',' << format_double(density.density()[g])
                << '\n';
        }
    }

    nlohmann::ordered_json summary;
    summary["seed"] = setup.config.seed;
    summary["components"] = k;
    summary["n_particles"] = system.size();
    summary["iterations"] = system.iteration;
    summary["stop_reason"] = std::string(to_string(result.reason));
    summary["final_tolerance"] = system.tolerance;
    summary["wall_seconds"] = wall_seconds;
    auto& params = summary["parameters"] = nlohmann::ordered_json::array();
    for (const auto& p : posterior_summary(system)) {
        params.push_back({{"name", p.name}, {"mean", p.mean}, {"sd", p.sd}});
    }
    auto& per_iteration = summary["iteration_seconds"] = nlohmann::ordered_json::array();
    for (const auto& t : result.telemetry) {
        per_iteration.push_back(t.seconds);
    }
    auto& config = summary["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config_echo.entries()) {
        config[key] = value.first;
    }
    auto out = open_out(dir / "summary.json");
    out << std::setw(2) << summary << '\n';
}

std::vector<ParameterSummary> summarize_run(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw ParseError("run directory " + dir.string() + " does not exist");
    }
    return posterior_summary(read_particle_table(dir / "particles_final.csv"));
}

void print_summary(std::ostream& out, const std::vector<ParameterSummary>& summary) {
    out << std::left << std::setw(12) << "parameter" << std::right << std::setw(14) << "mean"
        << std::setw(14) << "(sd)" << '\n';
    for (const auto& p : summary) {
        std::ostringstream sd;
        sd << '(' << std::fixed << std::setprecision(4) << p.sd << ')';
        out << std::left << std::setw(12) << p.name << std::right << std::setw(14) << std::fixed
            << std::setprecision(4) << p.mean << std::setw(14) << sd.str() << '\n';
    }
}

void write_loglik_grid(const fs::path& path, const LogLikGrid& grid) {
    auto out = open_out(path);
    out << "mu1,mu2,loglik\n";
    for (std::size_t i = 0; i < grid.axis1.size(); ++i) {
        for (std::size_t j = 0; j < grid.axis2.size(); ++j) {
            out << format_double(grid.axis1[i]) << ',' << format_double(grid.axis2[j]) << ','
                << format_double(grid.at(i, j)) << '\n';
        }
    }
}

}  // namespace abcmix::io
