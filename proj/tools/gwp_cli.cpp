#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>

#include "gwp/experiment.hpp"
#include "gwp/metrics.hpp"
#include "gwp/reference.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    bool verbose = false;
};

void add_globals(CLI::App* cmd, GlobalOpts& g) {
    cmd->add_option("--seed", g.seed, "random seed");
    cmd->add_option("--output-dir,-o", g.output_dir, "directory for outputs");
    cmd->add_flag("--verbose", g.verbose, "progress to stderr");
}

gwp::KernelSpec make_kernel(const std::string& family, double period) {
    gwp::KernelSpec spec;
    spec.family = gwp::kernel_family_from_string(family);
    spec.period = period;
    return spec;
}

int run(int argc, char** argv) {
    CLI::App app{"time-varying covariance modelling: Wishart-process inference and a "
                 "BEKK baseline"};
    app.require_subcommand(1);
    GlobalOpts g;

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic covariance path and returns");
    add_globals(sim, g);
    std::string sim_kind = "periodic2d";
    int sim_n = 291, sim_window = 100;
    double sim_t1 = 40, sim_t2 = 25, sim_t3 = 60;
    std::string sim_input;
    sim->add_option("--kind", sim_kind, "periodic2d or from-empirical")
        ->check(CLI::IsMember({"periodic2d", "from-empirical"}));
    sim->add_option("--n", sim_n, "number of points (periodic2d)");
    sim->add_option("--t1", sim_t1, "first eigenvalue period");
    sim->add_option("--t2", sim_t2, "second eigenvalue period");
    sim->add_option("--t3", sim_t3, "rotation period");
    sim->add_option("--input", sim_input, "returns CSV (from-empirical)");
    sim->add_option("--window", sim_window, "rolling window (from-empirical)");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a model to returns");
    add_globals(fit, g);
    std::string fit_model = "gwp", fit_input, fit_kernel = "se";
    double fit_period = 1.0;
    int fit_iterations = 2000, fit_burnin = -1, fit_thinning = 10, fit_dof = 0;
    int fit_restarts = 5, fit_max_iterations = 2000;
    bool fit_per_dim_theta = false;
    fit->add_option("--model", fit_model, "gwp or bekk")
        ->check(CLI::IsMember({"gwp", "bekk"}));
    fit->add_option("--input", fit_input, "returns CSV")->required();
    fit->add_option("--kernel", fit_kernel, "se, ou, periodic-paper or periodic-std");
    fit->add_option("--period", fit_period, "period for periodic-std");
    fit->add_option("--iterations", fit_iterations, "Gibbs iterations");
    fit->add_option("--burnin", fit_burnin, "burn-in iterations (-1: half)");
    fit->add_option("--thinning", fit_thinning, "keep every k-th state");
    fit->add_option("--dof", fit_dof, "degrees of freedom (0: dim + 1)");
    fit->add_flag("--per-dimension-theta", fit_per_dim_theta,
                  "separate lengthscale per dimension");
    fit->add_option("--restarts", fit_restarts, "optimiser restarts (bekk)");
    fit->add_option("--max-iterations", fit_max_iterations, "optimiser iterations (bekk)");

    // predict
    auto* pred = app.add_subcommand("predict", "predict covariances from a fitted model");
    add_globals(pred, g);
    std::string pred_model = "gwp", pred_fit, pred_inputs_csv, pred_returns, pred_latent = "mean";
    bool pred_quantiles = false;
    pred->add_option("--model", pred_model, "gwp or bekk")
        ->check(CLI::IsMember({"gwp", "bekk"}));
    pred->add_option("--fit", pred_fit, "posterior directory (gwp) or params CSV (bekk)")
        ->required();
    pred->add_option("--at", pred_inputs_csv,
                     "CSV with a t column of prediction inputs (gwp; default: training inputs)");
    pred->add_option("--input", pred_returns, "returns CSV to filter over (bekk)");
    pred->add_option("--latent", pred_latent, "mean or draw (gwp)")
        ->check(CLI::IsMember({"mean", "draw"}));
    pred->add_flag("--quantiles", pred_quantiles, "write per-state quantile bands (gwp)");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "score a predicted path");
    add_globals(eval, g);
    std::string eval_pred, eval_ref, eval_obs;
    eval->add_option("--pred", eval_pred, "predicted path CSV")->required();
    eval->add_option("--ref", eval_ref, "reference path CSV (or use --proxy-of)");
    eval->add_option("--proxy-of", eval_obs, "returns CSV; reference becomes x x^T, and "
                                             "log likelihood is reported");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a configured model comparison");
    add_globals(exp, g);
    std::string exp_config;
    bool exp_seed_set = false, exp_out_set = false;
    exp->add_option("--config", exp_config, "experiment config file")->required();
    exp->callback([&] {
        exp_seed_set = exp->count("--seed") > 0;
        exp_out_set = exp->count("--output-dir") > 0;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e);  // --help and friends
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (sim->parsed()) {
        fs::create_directories(g.output_dir);
        gwp::CovariancePath truth;
        if (sim_kind == "periodic2d") {
            gwp::PeriodicPathParams params;
            params.n_points = sim_n;
            params.t1 = sim_t1;
            params.t2 = sim_t2;
            params.t3 = sim_t3;
            truth = gwp::generate_periodic_path(params);
        } else {
            if (sim_input.empty())
                throw CLI::ValidationError("simulate", "--input required for from-empirical");
            truth = gwp::rolling_moment_path(gwp::load_returns_csv(sim_input), sim_window);
        }
        const gwp::ObservationSet obs = gwp::simulate_returns(truth, g.seed);
        gwp::save_path_csv(g.output_dir + "/truth.csv", truth);
        gwp::save_returns_csv(g.output_dir + "/returns.csv", obs);
        std::printf("wrote %s/truth.csv and %s/returns.csv (%d points, dim %d)\n",
                    g.output_dir.c_str(), g.output_dir.c_str(), truth.size(), truth.dim());
        return 0;
    }

    if (fit->parsed()) {
        fs::create_directories(g.output_dir);
        const gwp::ObservationSet obs = gwp::load_returns_csv(fit_input);
        if (fit_model == "gwp") {
            gwp::SamplerConfig cfg;
            cfg.n_iterations = fit_iterations;
            cfg.n_burnin = fit_burnin;
            cfg.thinning = fit_thinning;
            cfg.dof = fit_dof;
            cfg.per_dimension_theta = fit_per_dim_theta;
            cfg.seed = g.seed;
            cfg.verbose = g.verbose;
            const gwp::PosteriorSamples samples =
                gwp::run_gibbs(obs, make_kernel(fit_kernel, fit_period), cfg);
            gwp::save_posterior(g.output_dir + "/posterior", samples);
            std::printf("posterior: %zu states, scale acceptance %.3f, final loglik %.4f\n",
                        samples.states.size(), samples.scale_acceptance,
                        samples.log_lik_trace[samples.log_lik_trace.size() - 1]);
            std::printf("wrote %s/posterior\n", g.output_dir.c_str());
        } else {
            gwp::BekkFitConfig cfg;
            cfg.restarts = fit_restarts;
            cfg.max_iterations = fit_max_iterations;
            cfg.seed = g.seed;
            cfg.verbose = g.verbose;
            const auto [params, report] = gwp::fit_bekk(obs, cfg);
            gwp::save_bekk_params(g.output_dir + "/bekk_params.csv", params);
            std::printf("bekk: loglik %.4f, stationarity radius %.4f, restart %d of %d\n",
                        report.log_lik, report.stationarity_radius, report.best_restart,
                        static_cast<int>(report.restart_log_liks.size()));
            std::printf("wrote %s/bekk_params.csv\n", g.output_dir.c_str());
        }
        return 0;
    }

    if (pred->parsed()) {
        fs::create_directories(g.output_dir);
        if (pred_model == "gwp") {
            const gwp::PosteriorSamples samples = gwp::load_posterior(pred_fit);
            std::vector<gwp::Input> at = samples.states.front().inputs;
            if (!pred_inputs_csv.empty()) {
                const gwp::ObservationSet grid = gwp::load_returns_csv(pred_inputs_csv);
                at = grid.inputs;
            }
            const gwp::LatentEstimate latent = pred_latent == "draw"
                                                   ? gwp::LatentEstimate::Draw
                                                   : gwp::LatentEstimate::Mean;
            const gwp::PredictionResult result =
                gwp::predict_covariance(samples, at, latent, g.seed);
            gwp::save_path_csv(g.output_dir + "/predicted.csv", result.mean_path);
            if (pred_quantiles) {
                const gwp::PathQuantiles q = gwp::path_quantiles(result.state_paths);
                gwp::save_path_csv(g.output_dir + "/predicted_lower.csv", q.lower);
                gwp::save_path_csv(g.output_dir + "/predicted_upper.csv", q.upper);
            }
            std::printf("wrote %s/predicted.csv (%d points)\n", g.output_dir.c_str(),
                        result.mean_path.size());
        } else {
            if (pred_returns.empty())
                throw CLI::ValidationError("predict", "--input required for bekk");
            const gwp::BekkParams params = gwp::load_bekk_params(pred_fit);
            const gwp::ObservationSet obs = gwp::load_returns_csv(pred_returns);
            const gwp::CovariancePath path = gwp::bekk_filter(params, obs);
            gwp::save_path_csv(g.output_dir + "/predicted.csv", path);
            std::printf("wrote %s/predicted.csv (%d points)\n", g.output_dir.c_str(),
                        path.size());
        }
        return 0;
    }

    if (eval->parsed()) {
        const gwp::CovariancePath pred_path = gwp::load_path_csv(eval_pred);
        if (eval_ref.empty() && eval_obs.empty())
            throw CLI::ValidationError("evaluate", "need --ref or --proxy-of");
        if (!eval_ref.empty()) {
            const gwp::CovariancePath ref = gwp::load_path_csv(eval_ref);
            std::printf("mse %.10g\n", gwp::path_mse(pred_path, ref));
        }
        if (!eval_obs.empty()) {
            const gwp::ObservationSet obs = gwp::load_returns_csv(eval_obs);
            std::printf("mse_proxy %.10g\n",
                        gwp::path_mse(pred_path, gwp::realized_proxy(obs)));
            std::printf("loglik %.10g\n", gwp::forecast_log_likelihood(pred_path, obs));
        }
        return 0;
    }

    if (exp->parsed()) {
        gwp::ExperimentConfig cfg = gwp::parse_experiment_config(exp_config);
        if (exp_seed_set) cfg.seed = g.seed;
        if (exp_out_set) cfg.output_dir = g.output_dir;
        if (g.verbose) cfg.verbose = true;
        const gwp::ResultTable table = gwp::run_experiment(cfg);
        std::printf("%s", table.to_csv().c_str());
        for (const gwp::ResultRow& row : table.rows)
            if (row.status != "ok") return 2;
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError&) {
        // CLI11's exit() already printed help or the error; re-run classification
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
