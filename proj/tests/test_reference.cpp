#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

#include "gwp/reference.hpp"
#include "gwp/rng.hpp"

using namespace gwp;

namespace {
Eigen::MatrixXd random_spd(Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) a.col(i) = normal_vector(rng, n);
    return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}
}  // namespace

TEST_CASE("dense inverse agrees with Eigen on random SPD matrices") {
    Rng rng = make_rng(5);
    for (int n : {1, 2, 5, 9}) {
        const Eigen::MatrixXd m = random_spd(rng, n);
        const Eigen::MatrixXd inv = reference::dense_inverse(m);
        CHECK((m * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((inv - m.inverse()).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK_THROWS_AS(reference::dense_inverse(Eigen::MatrixXd::Zero(3, 3)), FactorisationError);
}

TEST_CASE("dense log det agrees with Eigen") {
    Rng rng = make_rng(6);
    for (int n : {1, 3, 7}) {
        const Eigen::MatrixXd m = random_spd(rng, n);
        const double expected = std::log(m.determinant());
        CHECK(reference::dense_log_det(m) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("dense cholesky agrees with Eigen LLT") {
    Rng rng = make_rng(7);
    for (int n : {1, 4, 6}) {
        const Eigen::MatrixXd m = random_spd(rng, n);
        const Eigen::MatrixXd l = reference::dense_cholesky(m);
        CHECK((l - Eigen::MatrixXd(m.llt().matrixL())).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((l * l.transpose() - m).cwiseAbs().maxCoeff() < 1e-10);
    }
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS(reference::dense_cholesky(bad), NotPositiveDefiniteError);
}

TEST_CASE("dense gaussian log density matches the closed form in one dimension") {
    Eigen::VectorXd x(1);
    x << 0.7;
    Eigen::MatrixXd s(1, 1);
    s << 2.0;
    const double expected = -0.5 * std::log(2.0 * M_PI * 2.0) - 0.5 * 0.49 / 2.0;
    CHECK(reference::dense_gaussian_log_density(x, s) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("naive covariance builder is symmetric PSD by construction") {
    Rng rng = make_rng(8);
    const int d = 3, dof = 4;
    const Eigen::VectorXd slice = normal_vector(rng, d * dof);
    Eigen::MatrixXd lower = Eigen::MatrixXd::Identity(d, d);
    lower(1, 0) = 0.3;
    lower(2, 1) = -0.2;
    const Eigen::MatrixXd sigma = reference::naive_build_covariance(slice, lower);
    CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
}
