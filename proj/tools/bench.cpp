// Compares the OpenMP code paths against their serial reference twins: same
// arithmetic, different scheduling. Differences should be exactly zero.
#include <chrono>
#include <cstdio>

#include "gwp/data.hpp"
#include "gwp/reference.hpp"

using Clock = std::chrono::steady_clock;

namespace {

template <typename Fn>
double best_ms(Fn&& fn, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, double max_diff) {
    std::printf("%-28s %10.2f %10.2f %8.2fx %12.3g\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main() {
    std::printf("%-28s %10s %10s %9s %12s\n", "kernel", "serial ms", "omp ms", "speedup",
                "max |diff|");

    {
        const auto inputs = gwp::regular_grid(0.0, 1.0, 500);
        gwp::KernelSpec spec;
        spec.lengthscale = 25.0;
        Eigen::MatrixXd serial_values, serial_factor;
        gwp::GramMatrix gram;
        const double ts = best_ms([&] {
            serial_values = gwp::reference::serial_gram(spec, inputs, 1e-8);
            Eigen::MatrixXd k = serial_values;
            k.diagonal().array() += 1e-8;
            serial_factor = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
        });
        const double tp = best_ms([&] { gram = gwp::build_gram(spec, inputs, 1e-8); });
        const double diff =
            std::max((gram.values - serial_values).cwiseAbs().maxCoeff(),
                     (gram.factor() - serial_factor).cwiseAbs().maxCoeff());
        report("gram build+factor N=500", ts, tp, diff);
    }

    {
        const int n = 1200, d = 5, dof = 6;
        gwp::GWPState state;
        state.inputs = gwp::regular_grid(0.0, 1.0, n);
        state.dof = dof;
        gwp::Rng rng = gwp::make_rng(7);
        Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < i; ++j) lower(i, j) = 0.2 * gwp::rand_normal(rng);
            lower(i, i) = 1.0 + 0.1 * i;
        }
        state.scale = gwp::ScaleFactor(lower);
        state.lengthscales = Eigen::VectorXd::Constant(1, 10.0);
        state.latents = gwp::normal_vector(rng, n * d * dof);
        gwp::ObservationSet obs;
        obs.inputs = state.inputs;
        obs.x.resize(n, d);
        for (int t = 0; t < n; ++t)
            obs.x.row(t) = gwp::normal_vector(rng, d).transpose();

        double ll_serial = 0, ll_parallel = 0;
        const double ts =
            best_ms([&] { ll_serial = gwp::reference::serial_log_likelihood(state, obs); });
        const double tp = best_ms([&] { ll_parallel = gwp::log_likelihood(state, obs); });
        report("likelihood N=1200 D=5", ts, tp, std::abs(ll_serial - ll_parallel));
    }

    {
        gwp::PeriodicPathParams params;
        params.n_points = 60;
        const gwp::CovariancePath truth = gwp::generate_periodic_path(params);
        const gwp::ObservationSet obs = gwp::simulate_returns(truth, 11);
        gwp::SamplerConfig cfg;
        cfg.n_iterations = 120;
        cfg.n_burnin = 60;
        cfg.thinning = 2;
        cfg.seed = 3;
        gwp::KernelSpec spec;
        spec.lengthscale = 10.0;
        const gwp::PosteriorSamples samples = gwp::run_gibbs(obs, spec, cfg);
        const auto grid = gwp::regular_grid(0.5, 1.0, 80);

        gwp::PredictionResult serial_result, parallel_result;
        const double ts = best_ms([&] {
            serial_result = gwp::reference::serial_predict_covariance(
                samples, grid, gwp::LatentEstimate::Draw, 5);
        });
        const double tp = best_ms([&] {
            parallel_result =
                gwp::predict_covariance(samples, grid, gwp::LatentEstimate::Draw, 5);
        });
        double diff = 0.0;
        for (int t = 0; t < 80; ++t)
            diff = std::max(diff, (serial_result.mean_path.matrices[t] -
                                   parallel_result.mean_path.matrices[t])
                                      .cwiseAbs()
                                      .maxCoeff());
        report("predict 30 states x 80 pts", ts, tp, diff);
    }

    return 0;
}
