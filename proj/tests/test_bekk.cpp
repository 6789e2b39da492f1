#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gwp/bekk.hpp"
#include "gwp/data.hpp"
#include "gwp/reference.hpp"
#include "helpers.hpp"

using namespace gwp;

namespace {

BekkParams scalar_params(double c, double a, double b, double sigma0) {
    BekkParams p;
    p.c = Eigen::MatrixXd::Constant(1, 1, c);
    p.a = Eigen::MatrixXd::Constant(1, 1, a);
    p.b = Eigen::MatrixXd::Constant(1, 1, b);
    p.sigma0 = Eigen::MatrixXd::Constant(1, 1, sigma0);
    return p;
}

ObservationSet scalar_obs(const std::vector<double>& xs) {
    ObservationSet obs;
    obs.inputs = regular_grid(0.0, 1.0, static_cast<int>(xs.size()));
    obs.x.resize(static_cast<int>(xs.size()), 1);
    for (size_t t = 0; t < xs.size(); ++t) obs.x(static_cast<int>(t), 0) = xs[t];
    return obs;
}

// scalar GARCH(1,1) simulator: sigma2_t = omega + alpha x_{t-1}^2 + beta sigma2_{t-1}
ObservationSet simulate_garch(double omega, double alpha, double beta, int n,
                              std::uint64_t seed) {
    Rng rng = make_rng(seed);
    ObservationSet obs;
    obs.inputs = regular_grid(0.0, 1.0, n);
    obs.x.resize(n, 1);
    double s2 = omega / (1.0 - alpha - beta);
    for (int t = 0; t < n; ++t) {
        obs.x(t, 0) = std::sqrt(s2) * rand_normal(rng);
        s2 = omega + alpha * obs.x(t, 0) * obs.x(t, 0) + beta * s2;
    }
    return obs;
}

}  // namespace

TEST_CASE("filter reproduces the scalar garch recursion by hand") {
    // c=0.3, a=0.4, b=0.5, sigma0=0.7 with x = [1, -2, 0.5, 0]:
    //   m0 = 0.7
    //   m1 = 0.09 + 0.16*1    + 0.25*0.7      = 0.425
    //   m2 = 0.09 + 0.16*4    + 0.25*0.425    = 0.83625
    //   m3 = 0.09 + 0.16*0.25 + 0.25*0.83625  = 0.3390625
    const BekkParams p = scalar_params(0.3, 0.4, 0.5, 0.7);
    const ObservationSet obs = scalar_obs({1.0, -2.0, 0.5, 0.0});
    const CovariancePath path = bekk_filter(p, obs);
    REQUIRE(path.size() == 4);
    const double expected[] = {0.7, 0.425, 0.83625, 0.3390625};
    for (int t = 0; t < 4; ++t)
        CHECK(path.matrices[t](0, 0) == doctest::Approx(expected[t]).epsilon(1e-12));
    CHECK(same_inputs(path.inputs, obs.inputs, 0.0));
}

TEST_CASE("filter seeds with sigma0 and rejects mismatched shapes") {
    BekkParams p = scalar_params(0.2, 0.3, 0.4, 1.3);
    const ObservationSet obs = scalar_obs({0.5, -0.5});
    CHECK(bekk_filter(p, obs).matrices[0](0, 0) == 1.3);

    ObservationSet wide = obs;
    wide.x.resize(2, 2);
    wide.x.setZero();
    CHECK_THROWS_AS(bekk_filter(p, wide), ShapeError);
}

TEST_CASE("log likelihood agrees with the dense path oracle") {
    Rng rng = make_rng(60);
    BekkParams p;
    p.c = Eigen::MatrixXd::Zero(2, 2);
    p.c << 0.4, 0.0, 0.1, 0.3;
    p.a = Eigen::MatrixXd::Zero(2, 2);
    p.a << 0.35, 0.05, -0.02, 0.3;
    p.b = Eigen::MatrixXd::Zero(2, 2);
    p.b << 0.7, 0.0, 0.03, 0.65;
    p.sigma0 = Eigen::MatrixXd::Identity(2, 2);
    p.validate();

    ObservationSet obs;
    obs.inputs = regular_grid(0.0, 1.0, 40);
    obs.x.resize(40, 2);
    for (int t = 0; t < 40; ++t) obs.x.row(t) = normal_vector(rng, 2).transpose();

    const CovariancePath path = bekk_filter(p, obs);
    CHECK(bekk_log_likelihood(p, obs) ==
          doctest::Approx(reference::dense_path_log_likelihood(path, obs)).epsilon(1e-10));
}

TEST_CASE("unconditional covariance solves the fixed point") {
    BekkParams p;
    p.c = Eigen::MatrixXd::Zero(2, 2);
    p.c << 0.5, 0.0, 0.2, 0.4;
    p.a = Eigen::MatrixXd::Zero(2, 2);
    p.a << 0.3, 0.1, 0.0, 0.25;
    p.b = Eigen::MatrixXd::Zero(2, 2);
    p.b << 0.8, 0.0, 0.05, 0.75;
    p.sigma0 = Eigen::MatrixXd::Identity(2, 2);
    CHECK(p.stationarity_radius() < 1.0);

    const Eigen::MatrixXd s = p.unconditional_covariance();
    const Eigen::MatrixXd rhs = p.c * p.c.transpose() + p.a.transpose() * s * p.a +
                                p.b.transpose() * s * p.b;
    CHECK((s - rhs).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    // scalar closed form: c^2 / (1 - a^2 - b^2)
    const BekkParams q = scalar_params(0.3, 0.4, 0.5, 1.0);
    CHECK(q.stationarity_radius() == doctest::Approx(0.16 + 0.25).epsilon(1e-12));
    CHECK(q.unconditional_covariance()(0, 0) ==
          doctest::Approx(0.09 / (1.0 - 0.41)).epsilon(1e-12));

    const BekkParams unstable = scalar_params(0.3, 0.9, 0.9, 1.0);
    CHECK(unstable.stationarity_radius() > 1.0);
    CHECK_THROWS_AS(unstable.unconditional_covariance(), ConvergenceError);
}

TEST_CASE("parameter validation") {
    BekkParams p = scalar_params(0.3, 0.4, 0.5, 1.0);
    CHECK_NOTHROW(p.validate());

    BekkParams bad = p;
    bad.c(0, 0) = -0.3;
    CHECK_THROWS_AS(bad.validate(), NotPositiveDefiniteError);
    bad = p;
    bad.a = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(bad.validate(), ShapeError);
    bad = p;
    bad.sigma0(0, 0) = -1.0;
    CHECK_THROWS_AS(bad.validate(), NotPositiveDefiniteError);

    BekkParams upper;
    upper.c = Eigen::MatrixXd::Zero(2, 2);
    upper.c << 0.4, 0.2, 0.0, 0.3;  // entry above the diagonal
    upper.a = 0.3 * Eigen::MatrixXd::Identity(2, 2);
    upper.b = 0.7 * Eigen::MatrixXd::Identity(2, 2);
    upper.sigma0 = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(upper.validate(), ShapeError);
}

TEST_CASE("fit recovers scalar garch parameters") {
    // omega=0.1, alpha=0.3, beta=0.6 maps to c=sqrt(0.1), a=sqrt(0.3), b=sqrt(0.6)
    const ObservationSet obs = simulate_garch(0.1, 0.3, 0.6, 3000, 61);
    BekkFitConfig cfg;
    cfg.restarts = 3;
    cfg.max_iterations = 1200;
    cfg.seed = 1;
    const auto [fitted, report] = fit_bekk(obs, cfg);

    const double alpha_hat = fitted.a(0, 0) * fitted.a(0, 0);
    const double beta_hat = fitted.b(0, 0) * fitted.b(0, 0);
    CHECK(std::abs(alpha_hat - 0.3) < 0.12);
    CHECK(std::abs(beta_hat - 0.6) < 0.15);
    CHECK(report.stationarity_radius < 1.0);
    CHECK(report.best_restart >= 0);
    CHECK(report.n_evaluations > 0);

    // the optimiser should not do worse than the truth on its own objective
    BekkParams truth = scalar_params(std::sqrt(0.1), std::sqrt(0.3), std::sqrt(0.6), 1.0);
    truth.sigma0 = fitted.sigma0;  // same empirical seeding
    CHECK(report.log_lik >= bekk_log_likelihood(truth, obs) - 0.2);
    CHECK(report.log_lik == doctest::Approx(bekk_log_likelihood(fitted, obs)).epsilon(1e-12));
}

TEST_CASE("fit is deterministic for a fixed seed") {
    const ObservationSet obs = simulate_garch(0.2, 0.2, 0.5, 400, 62);
    BekkFitConfig cfg;
    cfg.restarts = 2;
    cfg.max_iterations = 400;
    cfg.seed = 9;
    const auto [p1, r1] = fit_bekk(obs, cfg);
    const auto [p2, r2] = fit_bekk(obs, cfg);
    CHECK((p1.c - p2.c).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p1.a - p2.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p1.b - p2.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r1.log_lik == r2.log_lik);
}

TEST_CASE("fit handles two dimensional series") {
    // diagonal BEKK truth; check the optimiser finds something at least as good
    BekkParams truth;
    truth.c = Eigen::MatrixXd::Zero(2, 2);
    truth.c << 0.3, 0.0, 0.1, 0.25;
    truth.a = 0.45 * Eigen::MatrixXd::Identity(2, 2);
    truth.b = 0.85 * Eigen::MatrixXd::Identity(2, 2);
    truth.sigma0 = truth.unconditional_covariance();

    Rng rng = make_rng(63);
    const int n = 500;
    ObservationSet obs;
    obs.inputs = regular_grid(0.0, 1.0, n);
    obs.x.resize(n, 2);
    Eigen::MatrixXd sigma = truth.sigma0;
    for (int t = 0; t < n; ++t) {
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        obs.x.row(t) = (Eigen::MatrixXd(llt.matrixL()) * normal_vector(rng, 2)).transpose();
        sigma = truth.c * truth.c.transpose() +
                truth.a.transpose() * obs.x.row(t).transpose() * obs.x.row(t) * truth.a +
                truth.b.transpose() * sigma * truth.b;
    }

    BekkFitConfig cfg;
    cfg.restarts = 2;
    cfg.max_iterations = 2000;
    cfg.seed = 3;
    const auto [fitted, report] = fit_bekk(obs, cfg);
    CHECK(fitted.dim() == 2);
    CHECK(report.stationarity_radius < 1.0);

    BekkParams seeded = truth;
    seeded.sigma0 = fitted.sigma0;
    CHECK(report.log_lik >= bekk_log_likelihood(seeded, obs) - 3.0);
}

TEST_CASE("fit validates its configuration and data") {
    const ObservationSet obs = simulate_garch(0.1, 0.2, 0.6, 50, 64);
    BekkFitConfig cfg;
    cfg.restarts = 0;
    CHECK_THROWS_AS(fit_bekk(obs, cfg), std::invalid_argument);

    cfg.restarts = 1;
    const ObservationSet tiny = scalar_obs({0.1, -0.2, 0.3});
    CHECK_THROWS_AS(fit_bekk(tiny, cfg), InsufficientDataError);
}

TEST_CASE("parameter files round trip exactly") {
    BekkParams p;
    p.c = Eigen::MatrixXd::Zero(2, 2);
    p.c << 0.312345678901234567, 0.0, -0.05, 0.27;
    p.a = Eigen::MatrixXd::Zero(2, 2);
    p.a << 0.31, 0.02, -0.01, 0.29;
    p.b = Eigen::MatrixXd::Zero(2, 2);
    p.b << 0.81, 0.0, 1e-17, 0.79;
    p.sigma0 = Eigen::MatrixXd::Identity(2, 2);

    const std::string path =
        (std::filesystem::temp_directory_path() / "gwp-test-bekk.csv").string();
    save_bekk_params(path, p);
    const BekkParams loaded = load_bekk_params(path);
    CHECK((loaded.c - p.c).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.a - p.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.b - p.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.sigma0 - p.sigma0).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_bekk_params(path), ParseError);
}
