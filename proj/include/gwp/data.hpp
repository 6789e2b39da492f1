#pragma once

#include <cstdint>
#include <string>

#include "gwp/types.hpp"

namespace gwp {

/// Two-dimensional rotating-ellipse covariance: eigenvalues breathe on periods t1 and
/// t2 while the principal axis swings with period t3. Exactly periodic with period
/// lcm(t1, t2, t3) when the periods are integers.
struct PeriodicPathParams {
    int n_points = 291;
    double t_start = 1.0;
    double dt = 1.0;
    double t1 = 40.0, t2 = 25.0, t3 = 60.0;
    double amp1 = 0.5, amp2 = 0.5;
    double angle_amp = 0.78539816339744831;  // pi/4
};

Eigen::MatrixXd periodic_covariance_at(const PeriodicPathParams& params, double t);
CovariancePath generate_periodic_path(const PeriodicPathParams& params);

/// Rolling second-moment path from observed returns: matrix n is the average of
/// x x^T over the `window` rows ending at n. Needs at least `window` rows.
CovariancePath rolling_moment_path(const ObservationSet& returns, int window);

/// x_n ~ N(0, path.matrices[n]), independent across n.
ObservationSet simulate_returns(const CovariancePath& path, std::uint64_t seed);

/// Rank-one realized covariance proxy x(t) x(t)^T per observation.
CovariancePath realized_proxy(const ObservationSet& obs);

struct CsvOptions {
    std::string time_column = "auto";  // "auto", "none", or a header name
    bool prices_to_log_returns = false;
    bool demean = false;
    char delimiter = ',';
};

ObservationSet load_returns_csv(const std::string& path, const CsvOptions& options = {});
void save_returns_csv(const std::string& path, const ObservationSet& obs);

// Covariance paths as CSV: column t, then the lower triangle in vech order with
// headers like c21 for entry (row 2, col 1), 1-based.
void save_path_csv(const std::string& path, const CovariancePath& cov_path);
CovariancePath load_path_csv(const std::string& path);

}  // namespace gwp
