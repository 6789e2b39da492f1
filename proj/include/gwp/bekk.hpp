#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gwp/types.hpp"

namespace gwp {

/// BEKK(1,1) multivariate GARCH:
///   Sigma_t = C C^T + A^T x_{t-1} x_{t-1}^T A + B^T Sigma_{t-1} B
/// C lower triangular with positive diagonal; A(0,0) >= 0 and B(0,0) >= 0 pin the
/// sign indeterminacy. sigma0 seeds the recursion.
struct BekkParams {
    Eigen::MatrixXd c;
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd sigma0;

    int dim() const { return static_cast<int>(c.rows()); }
    void validate() const;
    // spectral radius of A (x) A + B (x) B; < 1 means covariance stationary
    double stationarity_radius() const;
    // solves the fixed point Sigma = CC^T + A^T Sigma A + B^T Sigma B
    Eigen::MatrixXd unconditional_covariance() const;
};

/// Runs the variance recursion over the observations. matrices[t] is the conditional
/// covariance of x_t given x_0..x_{t-1}; matrices[0] = sigma0.
CovariancePath bekk_filter(const BekkParams& params, const ObservationSet& obs);

/// Gaussian log likelihood of the observations under the filtered covariances.
double bekk_log_likelihood(const BekkParams& params, const ObservationSet& obs);

enum class Sigma0Mode { Empirical, Unconditional };

struct BekkFitConfig {
    int restarts = 5;
    int max_iterations = 2000;     // Nelder-Mead iterations per restart
    double tol = 1e-8;             // simplex spread termination
    double stationarity_limit = 0.999;
    double penalty_weight = 1e6;
    Sigma0Mode sigma0_mode = Sigma0Mode::Empirical;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct BekkFitReport {
    double log_lik = 0.0;
    int best_restart = -1;
    std::vector<double> restart_log_liks;
    double stationarity_radius = 0.0;
    long n_evaluations = 0;
};

/// Constrained maximum likelihood via multi-start Nelder-Mead. Restart 0 starts from
/// a data-driven point (scaled empirical covariance), the rest from seeded
/// perturbations; restarts run independently and the best final value wins
/// deterministically. Throws ConvergenceError if no restart beats the constant
/// covariance baseline.
std::pair<BekkParams, BekkFitReport> fit_bekk(const ObservationSet& obs,
                                              const BekkFitConfig& config = {});

// CSV round trip: dim on the first row, then C, A, B, sigma0 row-major.
void save_bekk_params(const std::string& path, const BekkParams& params);
BekkParams load_bekk_params(const std::string& path);

}  // namespace gwp
