// abcmix: fit, summarize and simulate Gaussian mixtures with ABC-PMC.
//
//   abcmix fit --preset two-component --out runs/two
//   abcmix fit --config my.cfg --data obs.csv --out runs/mine --seed 7
//   abcmix summarize runs/two
//   abcmix simulate --weights 0.5,0.5 --means -20,20 --variances 1,1 --n 40 --seed 3 --out x.csv
//   abcmix loglik-grid --preset marin --out surface.csv

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "abcmix/error.hpp"
#include "abcmix/io.hpp"

namespace fs = std::filesystem;
using namespace abcmix;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kAbort = 2 };

struct Source {
    std::string preset;
    std::string config;
    std::string data;
    std::optional<std::uint64_t> seed;
};

void add_source_options(CLI::App* cmd, Source& src) {
    cmd->add_option("--preset", src.preset, "bundled experiment (see `abcmix presets`)");
    cmd->add_option("--config", src.config, "key = value configuration file");
    cmd->add_option("--data", src.data, "CSV with header `value` or `value,error`");
    cmd->add_option("--seed", src.seed, "overrides the configured seed");
}

struct Loaded {
    io::KeyValues kv;
    std::optional<ObservedDataset> data;
};

Loaded load(const Source& src) {
    if (src.preset.empty() == src.config.empty()) {
        throw ConfigError("give exactly one of --preset or --config");
    }
    Loaded out;
    if (!src.preset.empty()) {
        out.kv = io::KeyValues::parse(io::find_preset(src.preset).config_text);
    } else {
        out.kv = io::KeyValues::load(src.config);
    }
    if (src.seed) {
        out.kv.set("seed", std::to_string(*src.seed));
    }
    const std::size_t grid =
        out.kv.contains("grid_size") ? out.kv.get_size("grid_size") : kDefaultGridSize;
    if (!src.data.empty()) {
        out.data = io::read_dataset_csv(src.data, grid);
    } else if (!src.preset.empty()) {
        out.data = io::preset_dataset(src.preset, grid);
    }
    return out;
}

int cmd_fit(const Source& src, const std::string& out_dir, bool with_grid, bool quiet) {
    auto loaded = load(src);
    if (!loaded.data) {
        throw ConfigError("fit needs --data when --config is used");
    }
    const auto setup = io::build_setup(loaded.kv, *loaded.data);
    fs::create_directories(out_dir);
    fs::remove(fs::path(out_dir) / "error.txt");

    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    try {
        result = run(setup.prior, *loaded.data, setup.config, [&](const IterationTelemetry& t) {
            if (quiet) {
                return;
            }
            std::cerr << "iteration " << t.iteration << "  tolerance " << t.tolerance
                      << "  acceptance " << t.acceptance_rate << "  ess " << t.ess;
            if (t.marginal_shift) {
                std::cerr << "  shift " << *t.marginal_shift;
            }
            std::cerr << '\n';
        });
    } catch (const std::exception& e) {
        std::ofstream diag(fs::path(out_dir) / "error.txt");
        diag << "run aborted: " << e.what() << '\n' << "config:\n" << loaded.kv.to_text();
        std::cerr << "abcmix: run aborted: " << e.what() << '\n';
        return kAbort;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    io::write_run_artifact(out_dir, result, setup, loaded.kv, wall);
    if (with_grid) {
        auto axis = [](double lo, double hi) {
            std::vector<double> a(151);
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = lo + (hi - lo) * static_cast<double>(i) / 150.0;
            }
            return a;
        };
        io::write_loglik_grid(fs::path(out_dir) / "loglik_grid.csv",
                              loglik_grid(*loaded.data, setup.prior, axis(-2, 4), axis(-2, 4)));
    }
    if (!quiet) {
        std::cerr << "stopped: " << to_string(result.reason) << " after "
                  << result.system.iteration << " iterations (" << wall << " s)\n";
    }
    io::print_summary(std::cout, io::posterior_summary(result.system));
    return kOk;
}

int cmd_simulate(const Source& src, const std::vector<double>& weights,
                 const std::vector<double>& means, const std::vector<double>& variances,
                 std::size_t n, const std::string& out) {
    std::uint64_t seed = src.seed.value_or(0);
    std::optional<MixtureParams> params;
    if (!weights.empty() || !means.empty() || !variances.empty()) {
        if (!src.seed) {
            throw ConfigError("simulate needs --seed");
        }
        params.emplace(weights, means, variances);
    } else {
        auto loaded = load(src);
        if (!loaded.data) {
            throw ConfigError("simulate needs --data when --config is used");
        }
        const auto setup = io::build_setup(loaded.kv, *loaded.data);
        seed = setup.config.seed;
        Rng prior_rng = make_stream(seed, 0, 0, 1);
        params = sample_prior(setup.prior, prior_rng);
        if (n == 0) {
            n = loaded.data->size();
        }
    }
    if (n == 0) {
        throw ConfigError("simulate needs --n");
    }
    Rng rng = make_stream(seed, 0, 0, 2);
    io::write_values_csv(out, simulate(*params, n, rng));
    return kOk;
}

int cmd_loglik(const Source& src, const std::string& out, double lo, double hi,
               std::size_t points) {
    auto loaded = load(src);
    if (!loaded.data) {
        throw ConfigError("loglik-grid needs --data when --config is used");
    }
    if (!loaded.kv.contains("seed")) {
        loaded.kv.set("seed", "0");
    }
    const auto setup = io::build_setup(loaded.kv, *loaded.data);
    if (points < 2 || !(hi > lo)) {
        throw ConfigError("grid needs at least 2 points and hi > lo");
    }
    std::vector<double> axis(points);
    for (std::size_t i = 0; i < points; ++i) {
        axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    io::write_loglik_grid(out, loglik_grid(*loaded.data, setup.prior, axis, axis));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ABC-PMC for finite Gaussian mixtures"};
    app.require_subcommand(1);

    Source src;
    std::string out;
    bool with_grid = false;
    bool quiet = false;

    auto* fit = app.add_subcommand("fit", "run the sampler and write a run directory");
    add_source_options(fit, src);
    fit->add_option("--out", out, "run directory")->required();
    fit->add_flag("--loglik-grid", with_grid, "also write loglik_grid.csv (two components)");
    fit->add_flag("-q,--quiet", quiet, "no per-iteration progress");

    std::string run_dir;
    auto* summarize = app.add_subcommand("summarize", "print the posterior table of a run");
    summarize->add_option("run_dir", run_dir, "run directory written by fit")->required();

    std::vector<double> weights, means, variances;
    std::size_t n = 0;
    auto* sim = app.add_subcommand("simulate", "draw a dataset from the forward model");
    add_source_options(sim, src);
    sim->add_option("--weights", weights)->delimiter(',');
    sim->add_option("--means", means)->delimiter(',');
    sim->add_option("--variances", variances)->delimiter(',');
    sim->add_option("--n", n, "number of observations");
    sim->add_option("--out", out, "output CSV")->required();

    double lo = -2.0, hi = 4.0;
    std::size_t points = 151;
    auto* grid = app.add_subcommand("loglik-grid", "two-component log-likelihood surface");
    add_source_options(grid, src);
    grid->add_option("--out", out, "output CSV")->required();
    grid->add_option("--lo", lo, "axis lower bound");
    grid->add_option("--hi", hi, "axis upper bound");
    grid->add_option("--points", points, "points per axis");

    auto* list = app.add_subcommand("presets", "list bundled experiments");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) {
            return cmd_fit(src, out, with_grid, quiet);
        }
        if (summarize->parsed()) {
            io::print_summary(std::cout, io::summarize_run(run_dir));
            return kOk;
        }
        if (sim->parsed()) {
            return cmd_simulate(src, weights, means, variances, n, out);
        }
        if (grid->parsed()) {
            return cmd_loglik(src, out, lo, hi, points);
        }
        if (list->parsed()) {
            for (const auto& p : io::presets()) {
                std::cout << p.name << "\t" << p.description << '\n';
            }
            return kOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "abcmix: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
