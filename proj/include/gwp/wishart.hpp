#pragma once

#include "gwp/kernels.hpp"
#include "gwp/types.hpp"

namespace gwp {

/// Lower-triangular factor of the scale matrix V = lower * lower^T.
/// Positive diagonal is enforced so the factorisation is unique.
struct ScaleFactor {
    Eigen::MatrixXd lower;

    ScaleFactor() = default;
    explicit ScaleFactor(Eigen::MatrixXd l);
    static ScaleFactor from_covariance(const Eigen::MatrixXd& v);

    int dim() const { return static_cast<int>(lower.rows()); }
    Eigen::MatrixXd scale_matrix() const { return lower * lower.transpose(); }
    void validate() const;
};

/// Wishart log density of `m` under scale matrix `scale` with `dof` degrees of freedom.
/// Requires dof > dim - 1; both matrices must be symmetric positive definite.
double wishart_log_density(const Eigen::MatrixXd& m, const Eigen::MatrixXd& scale, double dof);

double log_multivariate_gamma(int dim, double a);

/// Sum of dof outer products: Sigma = sum_i (L u_i)(L u_i)^T where u_i is the i-th
/// D-subvector of latent_slice. latent_slice is ordered dimension-fastest:
/// latent_slice[i * D + d] is latent function (dof i, dimension d) at one input.
Eigen::MatrixXd build_covariance(const Eigen::Ref<const Eigen::VectorXd>& latent_slice,
                                 const ScaleFactor& scale);

/// Full sampler state. `latents` follows the LatentPrior layout (time fastest, then
/// dimension, then dof); `lengthscales` has 1 entry (shared) or dim() entries.
struct GWPState {
    Eigen::VectorXd latents;
    Eigen::VectorXd lengthscales;
    ScaleFactor scale;
    int dof = 0;
    std::vector<Input> inputs;

    int dim() const { return scale.dim(); }
    int n_points() const { return static_cast<int>(inputs.size()); }
    // Gathers the dof*dim latent values at input index n, ordered dimension-fastest.
    Eigen::VectorXd latent_slice_at(int n) const;
    // Kernel specs for each dimension given a base spec carrying family and period.
    std::vector<KernelSpec> kernel_specs(const KernelSpec& base) const;
};

/// Covariance at every input of the state.
CovariancePath covariance_path(const GWPState& state);

/// Draws latent functions from the Gram prior and assembles the implied covariance
/// path. With dof >= dim + 1 every matrix is positive definite almost surely.
CovariancePath sample_prior_path(const KernelSpec& spec, const std::vector<Input>& inputs,
                                 const ScaleFactor& scale, int dof, std::uint64_t seed,
                                 double jitter = kDefaultJitter);

/// Pointwise inverse of a covariance path (inverse-Wishart-process view).
CovariancePath invert_path(const CovariancePath& path);

}  // namespace gwp
