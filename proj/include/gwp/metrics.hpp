#pragma once

#include "gwp/types.hpp"

namespace gwp {

/// Mean squared error between aligned covariance paths, averaged over time and over
/// the d^2 matrix entries. Throws ShapeError on length, dimension or input mismatch.
double path_mse(const CovariancePath& predicted, const CovariancePath& reference);

/// Sum over points of log N(x_n; 0, predicted.matrices[n]).
double forecast_log_likelihood(const CovariancePath& predicted, const ObservationSet& obs);

}  // namespace gwp
