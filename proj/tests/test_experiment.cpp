#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gwp/experiment.hpp"
#include "gwp/metrics.hpp"
#include "helpers.hpp"

using namespace gwp;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig tiny_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.name = "tiny";
    cfg.dataset.periodic.n_points = 40;
    cfg.n_train = 30;
    cfg.n_forecast = 6;
    cfg.timing = TimingMode::Zero;
    cfg.seed = 5;
    cfg.output_dir = out_dir;

    ModelConfig gwp_model;
    gwp_model.name = "gwp";
    gwp_model.sampler.n_iterations = 40;
    gwp_model.sampler.n_burnin = 20;
    gwp_model.sampler.thinning = 5;
    gwp_model.forecast.chains = 2;
    gwp_model.forecast.refresh_iterations = 3;
    cfg.models.push_back(gwp_model);

    ModelConfig bekk_model;
    bekk_model.name = "bekk";
    bekk_model.type = ModelType::Bekk;
    bekk_model.bekk.restarts = 2;
    bekk_model.bekk.max_iterations = 300;
    cfg.models.push_back(bekk_model);
    return cfg;
}

}  // namespace

TEST_CASE("config parser reads every section") {
    const std::string text = R"(
# comment line
[experiment]
name = demo
seed = 42
output_dir = /tmp/demo-out
n_train = 50
n_forecast = 10
dense_grid = 2
latent = mean
timing = zero
metrics = mse_historical, mse_forecast

[dataset]
kind = periodic2d
n = 80
t_start = 2.0
dt = 0.5
t1 = 30
t2 = 20
t3 = 45
amp1 = 0.4
amp2 = 0.3
angle_amp = 0.5

[model slow-gwp]
type = gwp
kernel = periodic-std
period = 12.5
iterations = 500
burnin = 100
thinning = 5
dof = 4
theta_prior_sd_log = 0.9
per_dimension_theta = true
chains = 4
refresh_iterations = 7
quantiles = false

[model baseline]
type = bekk
restarts = 2
max_iterations = 900
sigma0 = unconditional
)";
    const ExperimentConfig cfg = parse_experiment_config_text(text);
    CHECK(cfg.name == "demo");
    CHECK(cfg.seed == 42);
    CHECK(cfg.output_dir == "/tmp/demo-out");
    CHECK(cfg.n_train == 50);
    CHECK(cfg.n_forecast == 10);
    CHECK(cfg.dense_grid == 2);
    CHECK(cfg.latent == LatentEstimate::Mean);
    CHECK(cfg.timing == TimingMode::Zero);
    REQUIRE(cfg.metrics.size() == 2);
    CHECK(cfg.metrics[1] == "mse_forecast");

    CHECK(cfg.dataset.kind == DatasetKind::Periodic2d);
    CHECK(cfg.dataset.periodic.n_points == 80);
    CHECK(cfg.dataset.periodic.t_start == 2.0);
    CHECK(cfg.dataset.periodic.dt == 0.5);
    CHECK(cfg.dataset.periodic.t1 == 30.0);
    CHECK(cfg.dataset.periodic.amp2 == 0.3);
    CHECK(cfg.dataset.periodic.angle_amp == 0.5);

    REQUIRE(cfg.models.size() == 2);
    const ModelConfig& m0 = cfg.models[0];
    CHECK(m0.name == "slow-gwp");
    CHECK(m0.type == ModelType::Gwp);
    CHECK(m0.kernel.family == KernelFamily::PeriodicStandard);
    CHECK(m0.kernel.period == 12.5);
    CHECK(m0.sampler.n_iterations == 500);
    CHECK(m0.sampler.n_burnin == 100);
    CHECK(m0.sampler.thinning == 5);
    CHECK(m0.sampler.dof == 4);
    CHECK(m0.sampler.theta_prior_sd_log == 0.9);
    CHECK(m0.sampler.per_dimension_theta);
    CHECK(m0.forecast.chains == 4);
    CHECK(m0.forecast.refresh_iterations == 7);
    CHECK_FALSE(m0.quantiles);

    const ModelConfig& m1 = cfg.models[1];
    CHECK(m1.type == ModelType::Bekk);
    CHECK(m1.bekk.restarts == 2);
    CHECK(m1.bekk.max_iterations == 900);
    CHECK(m1.bekk.sigma0_mode == Sigma0Mode::Unconditional);
}

TEST_CASE("config parser defaults") {
    const ExperimentConfig cfg = parse_experiment_config_text("[model m]\n");
    CHECK(cfg.n_train == 200);
    CHECK(cfg.n_forecast == 91);
    CHECK(cfg.dataset.kind == DatasetKind::Periodic2d);
    CHECK(cfg.dataset.periodic.n_points == 291);
    CHECK(cfg.metrics.size() == 3);
    CHECK(cfg.timing == TimingMode::Wall);
    REQUIRE(cfg.models.size() == 1);
    CHECK(cfg.models[0].type == ModelType::Gwp);
    CHECK(cfg.models[0].kernel.family == KernelFamily::SquaredExponential);
}

TEST_CASE("config parser rejects malformed input with line numbers") {
    auto parse = [](const std::string& text) { return parse_experiment_config_text(text); };

    CHECK_THROWS_WITH_AS(parse("[experiment]\nmystery = 1\n[model m]\n"),
                         doctest::Contains("unknown experiment key"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment\nname = x\n"),
                         doctest::Contains(":1:"), ParseError);
    CHECK_THROWS_WITH_AS(parse("name = x\n[model m]\n"),
                         doctest::Contains("outside a section"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment]\nname x\n"),
                         doctest::Contains("expected key = value"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment]\nseed = -4\n[model m]\n"),
                         doctest::Contains("bad seed"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment]\nn_train = 5.5\n[model m]\n"),
                         doctest::Contains("bad integer"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment]\nlatent = mode\n[model m]\n"),
                         doctest::Contains("latent must be"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment]\ntiming = cpu\n[model m]\n"),
                         doctest::Contains("timing must be"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[dataset]\nkind = cube\n[model m]\n"),
                         doctest::Contains("kind must be"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[dataset]\ndelimiter = ;;\n[model m]\n"),
                         doctest::Contains("one character"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[model m]\ntype = arma\n"),
                         doctest::Contains("type must be"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[model m]\nkernel = sinusoid\n"),
                         doctest::Contains("kernel"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[model m]\nsigma0 = fixed\n"),
                         doctest::Contains("sigma0 must be"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[model]\ntype = gwp\n"),
                         doctest::Contains("model section needs a name"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[planets]\n"),
                         doctest::Contains("unknown section"), ParseError);
    CHECK_THROWS_WITH_AS(parse("[experiment]\nname = x\n"),
                         doctest::Contains("no [model"), ParseError);
    CHECK_THROWS_AS(parse_experiment_config("/nonexistent/gwp.cfg"), ParseError);
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg = tiny_config("/tmp/unused");
    CHECK_NOTHROW(cfg.validate());

    ExperimentConfig bad = cfg;
    bad.n_train = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.models.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.models[1].name = "gwp";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.models[0].name = "up/down";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.metrics = {"sharpe"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.n_forecast = 0;  // forecast metrics still configured
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.dataset.kind = DatasetKind::Csv;
    bad.dataset.csv_path = "";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.dense_grid = 1;
    bad.dataset.kind = DatasetKind::Csv;
    bad.dataset.csv_path = "x.csv";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("experiment run produces metrics, artifacts and deterministic outputs") {
    const std::string base =
        (std::filesystem::temp_directory_path() / "gwp-test-exp").string();
    std::filesystem::remove_all(base + "-a");
    std::filesystem::remove_all(base + "-b");

    ExperimentConfig cfg = tiny_config(base + "-a");
    cfg.dense_grid = 1;
    const ResultTable table = run_experiment(cfg);

    REQUIRE(table.rows.size() == 2);
    for (const ResultRow& row : table.rows) {
        INFO(row.model, ": ", row.status);
        CHECK(row.status == "ok");
        CHECK(row.dataset == "periodic2d");
        CHECK(row.seconds == 0.0);
        REQUIRE(row.mse_historical.has_value());
        REQUIRE(row.mse_forecast.has_value());
        REQUIRE(row.loglik_forecast.has_value());
        CHECK(*row.mse_historical > 0.0);
        CHECK(std::isfinite(*row.loglik_forecast));
    }

    const std::string dir = base + "-a/";
    for (const std::string& f :
         {std::string("result_table.csv"), std::string("returns.csv"), std::string("truth.csv"),
          std::string("gwp_historical.csv"), std::string("gwp_forecast.csv"),
          std::string("gwp_historical_lower.csv"), std::string("gwp_historical_median.csv"),
          std::string("gwp_historical_upper.csv"), std::string("gwp_dense.csv"),
          std::string("truth_dense.csv"), std::string("mse_dense.csv"),
          std::string("bekk_params.csv"), std::string("bekk_params_train.csv"),
          std::string("bekk_historical.csv"), std::string("bekk_forecast.csv"),
          std::string("plot_historical.csv"), std::string("plot_forecast.csv")})
        CHECK_MESSAGE(std::filesystem::exists(dir + f), f);

    // forecast artifacts align with the holdout window
    const CovariancePath fore = load_path_csv(dir + "gwp_forecast.csv");
    CHECK(fore.size() == 6);
    const CovariancePath truth = load_path_csv(dir + "truth.csv");
    CHECK(truth.size() == 40);

    // the recorded metric matches what the artifacts imply
    const CovariancePath hist = load_path_csv(dir + "gwp_historical.csv");
    const double recomputed = path_mse(hist, truth.segment(0, 36));
    CHECK(*table.rows[0].mse_historical == doctest::Approx(recomputed).epsilon(1e-9));

    ExperimentConfig cfg_b = cfg;
    cfg_b.output_dir = base + "-b";
    run_experiment(cfg_b);
    CHECK(slurp(dir + "result_table.csv") == slurp(base + "-b/result_table.csv"));
    CHECK(slurp(dir + "gwp_historical.csv") == slurp(base + "-b/gwp_historical.csv"));
    CHECK(slurp(dir + "gwp_forecast.csv") == slurp(base + "-b/gwp_forecast.csv"));
    CHECK(slurp(dir + "bekk_forecast.csv") == slurp(base + "-b/bekk_forecast.csv"));
    CHECK(slurp(dir + "returns.csv") == slurp(base + "-b/returns.csv"));

    std::filesystem::remove_all(base + "-a");
    std::filesystem::remove_all(base + "-b");
}

TEST_CASE("experiment isolates per-model failures") {
    const std::string out =
        (std::filesystem::temp_directory_path() / "gwp-test-exp-fail").string();
    std::filesystem::remove_all(out);

    ExperimentConfig cfg = tiny_config(out);
    cfg.n_forecast = 0;
    cfg.metrics = {"mse_historical"};
    ModelConfig broken;
    broken.name = "broken";
    broken.sampler.dof = 2;  // below dim + 1 for the 2-d dataset
    broken.sampler.n_iterations = 10;
    broken.sampler.n_burnin = 5;
    cfg.models.push_back(broken);

    const ResultTable table = run_experiment(cfg);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].status == "ok");
    CHECK(table.rows[1].status == "ok");
    CHECK(table.rows[2].status.rfind("failed:", 0) == 0);
    CHECK_FALSE(table.rows[2].mse_historical.has_value());

    // the table records the failure without commas that would break the csv
    CHECK(table.to_csv().find("failed:") != std::string::npos);
    std::filesystem::remove_all(out);
}

TEST_CASE("experiment rejects a dataset shorter than the evaluation window") {
    const std::string out =
        (std::filesystem::temp_directory_path() / "gwp-test-exp-short").string();
    ExperimentConfig cfg = tiny_config(out);
    cfg.dataset.periodic.n_points = 20;
    CHECK_THROWS_AS(run_experiment(cfg), InsufficientDataError);
    std::filesystem::remove_all(out);
}

TEST_CASE("result table formatting") {
    ResultTable table;
    ResultRow row;
    row.dataset = "ds";
    row.model = "m";
    row.mse_historical = 0.25;
    row.seconds = 1.23456;
    row.status = "failed: bad, news\nline";
    table.rows.push_back(row);
    const std::string csv = table.to_csv();
    CHECK(csv.find("dataset,model,mse_historical,mse_forecast,loglik_forecast,seconds,status") ==
          0);
    CHECK(csv.find("ds,m,0.25,,,1.235,failed: bad; news;line") != std::string::npos);
}
