#pragma once

#include "gwp/inference.hpp"
#include "gwp/kernels.hpp"
#include "gwp/prediction.hpp"
#include "gwp/wishart.hpp"

// Serial and naive twins of the library's hot paths. The serial_* functions mirror the
// OpenMP implementations with plain loops (same arithmetic order, so results match
// bitwise); the dense_* / naive_* functions use independent algorithms (Gauss-Jordan
// inverses, explicit determinants, full joint conditioning) and exist to cross-check
// the optimised code, not to be fast.
namespace gwp::reference {

Eigen::MatrixXd serial_gram(const KernelSpec& spec, const std::vector<Input>& inputs,
                            double jitter);
double serial_log_likelihood(const GWPState& state, const ObservationSet& obs,
                             double likelihood_jitter = 1e-10);
PredictionResult serial_predict_covariance(const PosteriorSamples& samples,
                                           const std::vector<Input>& test_inputs,
                                           LatentEstimate latent, std::uint64_t seed);

// row-reduction inverse with partial pivoting; throws FactorisationError when singular
Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& m);
// log |m| for symmetric positive definite m via LU pivots
double dense_log_det(const Eigen::MatrixXd& m);
// unblocked Cholesky; throws NotPositiveDefiniteError on a non-positive pivot
Eigen::MatrixXd dense_cholesky(const Eigen::MatrixXd& m);

double dense_gaussian_log_density(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma);
double dense_path_log_likelihood(const CovariancePath& path, const ObservationSet& obs);

// triple-loop covariance assembly from one latent slice
Eigen::MatrixXd naive_build_covariance(const Eigen::VectorXd& latent_slice,
                                       const Eigen::MatrixXd& scale_lower);

// latent conditioning through the full joint Gaussian over (train, test) inputs
struct DenseConditional {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};
DenseConditional dense_condition_latents(const GWPState& state, const KernelSpec& base,
                                         const Input& t_star, double jitter);

double naive_path_mse(const CovariancePath& a, const CovariancePath& b);

}  // namespace gwp::reference
