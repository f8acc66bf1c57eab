#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "abcmix/error.hpp"
#include "abcmix/io.hpp"
#include "support.hpp"

using namespace abcmix;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() /
                (std::string("abcmix_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::size_t error_line(const std::string& text) {
    try {
        io::parse_dataset_csv(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(DatasetCsv, ValueColumnOnly) {
    std::string text = "value\n";
    for (int i = 0; i < 40; ++i) text += std::to_string(i * 0.5) + "\n";
    const auto d = io::parse_dataset_csv(text);
    EXPECT_EQ(d.size(), 40u);
    EXPECT_FALSE(d.has_errors());
}

TEST(DatasetCsv, BundledGalaxyData) {
    const auto d = io::read_dataset_csv(io::data_directory() / "galaxy.csv");
    EXPECT_EQ(d.size(), 82u);
    ASSERT_TRUE(d.has_errors());
    EXPECT_EQ(d.measurement_errors()->size(), 82u);
    const auto& v = d.values();
    EXPECT_NEAR(*std::min_element(v.begin(), v.end()), 9.172, 1e-12);
    EXPECT_NEAR(*std::max_element(v.begin(), v.end()), 34.279, 1e-12);
}

TEST(DatasetCsv, Errors) {
    EXPECT_THROW(io::parse_dataset_csv(""), ParseError);
    EXPECT_THROW(io::parse_dataset_csv("value\n"), ParseError);
    EXPECT_EQ(error_line("velocity\n1\n2\n"), 1u);
    EXPECT_EQ(error_line("value\n1\n2\nabc\n"), 4u);
    EXPECT_EQ(error_line("value,error\n1,0.1\n2\n"), 3u);
    EXPECT_THROW(io::parse_dataset_csv("value,error\n1,0.1\n2,-0.2\n"), DomainError);
    EXPECT_THROW(io::read_dataset_csv("/nonexistent/abcmix.csv"), ParseError);
}

TEST(DatasetCsv, RoundTripIsExact) {
    TempDir tmp;
    Rng rng = make_stream(3);
    std::normal_distribution<double> z(0, 1e3);
    std::vector<double> v(200), e(200);
    for (auto& x : v) x = z(rng);
    for (auto& x : e) x = std::abs(z(rng)) * 1e-7;
    const ObservedDataset d(v, e);
    io::write_dataset_csv(tmp.path() / "d.csv", d);
    const auto back = io::read_dataset_csv(tmp.path() / "d.csv");
    EXPECT_EQ(back.values(), d.values());
    EXPECT_EQ(*back.measurement_errors(), *d.measurement_errors());

    const ObservedDataset plain(v);
    io::write_dataset_csv(tmp.path() / "p.csv", plain);
    EXPECT_EQ(io::read_dataset_csv(tmp.path() / "p.csv").values(), v);
}

TEST(KeyValues, ParseOverrideAndErrors) {
    const auto kv = io::KeyValues::parse("# comment\ncomponents = 2\nseed=5 # trailing\nseed = 6\n");
    EXPECT_EQ(kv.get_size("components"), 2u);
    EXPECT_EQ(kv.get_size("seed"), 6u);
    EXPECT_FALSE(kv.contains("quantile"));
    EXPECT_THROW(io::KeyValues::parse("components 2\n"), ParseError);
    try {
        io::KeyValues::parse("seed = 1\n\nbogus = 3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(io::KeyValues::parse("seed = x\n").get_size("seed"), ParseError);
    EXPECT_THROW(io::KeyValues::parse("seed = -1\n").get_size("seed"), ParseError);
    EXPECT_EQ(io::KeyValues::parse("fixed_weights = 0.3, 0.7\n").get_doubles("fixed_weights"),
              (std::vector<double>{0.3, 0.7}));
}

TEST(BuildSetup, DefaultsOverridesAndMissingKeys) {
    const auto data = abcmix::testing::two_group_data(1);
    EXPECT_THROW(io::build_setup(io::KeyValues::parse("seed = 1\n"), data), ConfigError);
    EXPECT_THROW(io::build_setup(io::KeyValues::parse("components = 2\n"), data), ConfigError);
    const auto setup = io::build_setup(
        io::KeyValues::parse("components = 2\nseed = 9\nquantile = 0.25\nrelabel_key = weights\n"
                             "fixed_variances = 1, 1\n"),
        data);
    EXPECT_EQ(setup.config.seed, 9u);
    EXPECT_EQ(setup.config.quantile, 0.25);
    EXPECT_EQ(setup.config.relabel_key, ParameterSet::weights);
    EXPECT_NEAR(setup.prior.mean_prior_location, data.mean(), 1e-12);
    EXPECT_NEAR(setup.prior.mean_prior_variance, data.variance(), 1e-12);
    EXPECT_FALSE(setup.prior.variances_free());
    EXPECT_THROW(io::build_setup(io::KeyValues::parse("components = 2\nseed = 1\n"
                                                      "use_measurement_errors = true\n"),
                                 data),
                 ConfigError);
}

TEST(Presets, EveryPresetBuilds) {
    for (const auto& p : io::presets()) {
        const auto kv = io::KeyValues::parse(p.config_text);
        const auto data = io::preset_dataset(p.name);
        const auto setup = io::build_setup(kv, data);
        EXPECT_EQ(setup.prior.components(), kv.get_size("components")) << p.name;
    }
    EXPECT_THROW(io::find_preset("nope"), ConfigError);
}

TEST(Presets, TwoGroupDataFollowsTheLaw) {
    const auto d = io::preset_dataset("two-component");
    ASSERT_EQ(d.size(), 40u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_LT(std::abs(d.values()[i] + 20.0), 5.0);
        EXPECT_LT(std::abs(d.values()[20 + i] - 20.0), 5.0);
    }
    EXPECT_EQ(io::preset_dataset("three-component").size(), 45u);
    EXPECT_EQ(io::preset_dataset("marin").size(), 500u);
}

class RunArtifact : public ::testing::Test {
protected:
    void SetUp() override {
        data = std::make_unique<ObservedDataset>(abcmix::testing::two_group_data(2));
        kv = io::KeyValues::parse(
            "components = 2\nseed = 3\nn_particles = 50\nmax_iterations = 3\n"
            "mean_prior_location = 0\nmean_prior_variance = 100\nfixed_variances = 1, 1\n");
        setup = io::build_setup(kv, *data);
        result = run(setup.prior, *data, setup.config);
    }
    std::unique_ptr<ObservedDataset> data;
    io::KeyValues kv;
    io::RunSetup setup;
    RunResult result;
};

TEST_F(RunArtifact, FilesAndSummaryConsistency) {
    TempDir tmp;
    io::write_run_artifact(tmp.path(), result, setup, kv, 1.5);
    for (const char* f : {"particles_final.csv", "telemetry.csv", "summary.json", "config.txt",
                          "marginals/weight_1.csv", "marginals/mean_2.csv"}) {
        EXPECT_TRUE(fs::exists(tmp.path() / f)) << f;
    }
    EXPECT_FALSE(fs::exists(tmp.path() / "marginals/var_1.csv"));

    const auto table = io::read_particle_table(tmp.path() / "particles_final.csv");
    EXPECT_EQ(table.components, 2u);
    EXPECT_EQ(table.rows.size(), 50u);
    EXPECT_EQ(table.columns.back(), "distance");

    const auto direct = io::posterior_summary(result.system);
    const auto recomputed = io::summarize_run(tmp.path());
    ASSERT_EQ(direct.size(), recomputed.size());
    const auto json = nlohmann::json::parse(slurp(tmp.path() / "summary.json"));
    for (std::size_t i = 0; i < direct.size(); ++i) {
        EXPECT_EQ(direct[i].name, recomputed[i].name);
        EXPECT_NEAR(direct[i].mean, recomputed[i].mean, 1e-12);
        EXPECT_NEAR(direct[i].sd, recomputed[i].sd, 1e-12);
        EXPECT_EQ(json["parameters"][i]["name"], direct[i].name);
        EXPECT_NEAR(json["parameters"][i]["mean"].get<double>(), direct[i].mean, 1e-12);
    }
    EXPECT_EQ(json["seed"], 3);
    EXPECT_EQ(json["iterations"], result.system.iteration);
    EXPECT_EQ(json["iteration_seconds"].size(), result.telemetry.size());

    const auto telemetry = slurp(tmp.path() / "telemetry.csv");
    EXPECT_EQ(telemetry.substr(0, telemetry.find(',')), "iteration");
    EXPECT_EQ(std::count(telemetry.begin(), telemetry.end(), '\n'),
              static_cast<long>(result.telemetry.size() + 1));
}

TEST_F(RunArtifact, SameSeedGivesByteIdenticalParticles) {
    TempDir tmp;
    io::write_run_artifact(tmp.path() / "a", result, setup, kv, 0.0);
    io::write_run_artifact(tmp.path() / "b", run(setup.prior, *data, setup.config), setup, kv, 0.0);
    EXPECT_EQ(slurp(tmp.path() / "a/particles_final.csv"),
              slurp(tmp.path() / "b/particles_final.csv"));
}

TEST(SummarizeRun, MissingOrEmptyDirectory) {
    TempDir tmp;
    EXPECT_THROW(io::summarize_run(tmp.path()), ParseError);
    EXPECT_THROW(io::summarize_run(tmp.path() / "absent"), ParseError);
    write(tmp.path() / "particles_final.csv", "weight_1,mean_1\n0.5,1\n");
    EXPECT_THROW(io::summarize_run(tmp.path()), ParseError);
}

TEST(LogLikGridFile, Layout) {
    TempDir tmp;
    const std::vector<double> y = {0.0, 1.0};
    io::write_loglik_grid(tmp.path() / "g.csv", loglik_grid(y, 0.7, 1, 1, {0.0, 1.0}, {2.0, 3.0, 4.0}));
    const auto text = slurp(tmp.path() / "g.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "mu1,mu2,loglik");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}
