#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwp {

// Inputs are low-dimensional real vectors; time series use 1-d inputs but nothing
// below assumes scalar indexing.
using Input = Eigen::VectorXd;

struct FactorisationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotPositiveDefiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SamplerStallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<Input> scalar_inputs(const std::vector<double>& times);
std::vector<Input> regular_grid(double start, double step, int n);

/// Multivariate observations: row n of `x` is the D-vector observed at inputs[n].
struct ObservationSet {
    std::vector<Input> inputs;
    Eigen::MatrixXd x;

    int dim() const { return static_cast<int>(x.cols()); }
    int size() const { return static_cast<int>(x.rows()); }
    void validate() const;
    ObservationSet head(int n) const;
    ObservationSet segment(int start, int n) const;
};

/// A covariance matrix per input point. Storage order follows `inputs`.
struct CovariancePath {
    std::vector<Input> inputs;
    std::vector<Eigen::MatrixXd> matrices;

    int dim() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
    int size() const { return static_cast<int>(matrices.size()); }
    // symmetry within sym_tol, eigenvalues above eig_floor
    void validate(double sym_tol = 1e-8, double eig_floor = -1e-10) const;
    CovariancePath segment(int start, int n) const;
};

// Half-vectorisation: stack columns of the lower triangle, so for D=3 the order is
// (0,0),(1,0),(2,0),(1,1),(2,1),(2,2).
int vech_size(int dim);
std::vector<std::pair<int, int>> vech_index_pairs(int dim);
Eigen::VectorXd vech(const Eigen::MatrixXd& m);
Eigen::MatrixXd unvech(const Eigen::VectorXd& v);

// True when two input lists match pointwise within tol.
bool same_inputs(const std::vector<Input>& a, const std::vector<Input>& b, double tol = 1e-9);

}  // namespace gwp
