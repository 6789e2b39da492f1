#pragma once

#include <string>
#include <vector>

#include "gwp/rng.hpp"
#include "gwp/types.hpp"

namespace gwp {

inline constexpr double kDefaultJitter = 1e-8;

// All kernels are stationary in the Euclidean distance r = |z - z'| and satisfy
// k(z, z) = 1, which pins the scale of the latent functions (the scale of the
// process lives entirely in the lower-triangular factor).
enum class KernelFamily {
    SquaredExponential,   // exp(-r^2 / (2 l^2))
    OrnsteinUhlenbeck,    // exp(-r / l), rough paths
    PeriodicPaper,        // exp(-2 sin(r)^2 / l^2), fixed angular frequency 1
    PeriodicStandard,     // exp(-2 sin(pi r / p)^2 / l^2), explicit period p
};

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double lengthscale = 1.0;
    double period = 1.0;  // PeriodicStandard only; fixed, not sampled

    void validate() const;
    KernelSpec with_lengthscale(double l) const;
};

double evaluate_kernel(const KernelSpec& spec, const Input& a, const Input& b);

/// Gram matrix over a fixed input list together with its Cholesky factor.
/// `values` holds the raw kernel evaluations; the factor is of values + jitter*I.
struct GramMatrix {
    std::vector<Input> inputs;
    Eigen::MatrixXd values;
    double jitter = 0.0;

    int size() const { return static_cast<int>(values.rows()); }
    const Eigen::MatrixXd& factor() const { return factor_; }
    double log_det() const;                                     // of values + jitter*I
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;      // (values + jitter*I)^{-1} b
    Eigen::VectorXd forward_solve(const Eigen::VectorXd& b) const;  // factor^{-1} b
    Eigen::VectorXd sample(Rng& rng) const;                     // draw from N(0, values + jitter*I)
    double log_density(const Eigen::Ref<const Eigen::VectorXd>& u) const;

    friend GramMatrix build_gram(const KernelSpec&, const std::vector<Input>&, double);

  private:
    Eigen::MatrixXd factor_;
    void factorise();
};

/// Evaluates the kernel over all input pairs and factorises once.
/// Throws FactorisationError if the jittered matrix is not numerically SPD.
GramMatrix build_gram(const KernelSpec& spec, const std::vector<Input>& inputs,
                      double jitter = kDefaultJitter);

/// Cross-covariance vector k(t*, inputs).
Eigen::VectorXd cross_covariance(const KernelSpec& spec, const std::vector<Input>& inputs,
                                 const Input& t_star);

/// Factorises each block of a block-diagonal matrix independently.
std::vector<Eigen::MatrixXd> block_cholesky(const std::vector<Eigen::MatrixXd>& blocks);

/// Zero-mean Gaussian prior over the stacked latent values u with block-diagonal
/// covariance: one N x N Gram block per (dof, dimension) pair. Blocks that share a
/// lengthscale share one factorisation, so the shared-lengthscale configuration costs a
/// single O(N^3) factorisation regardless of dof * dim.
///
/// Layout of u: index(i, d, n) = (i * dim + d) * n_points + n, i.e. time runs fastest,
/// then dimension, then dof. Every public consumer of u relies on this layout.
class LatentPrior {
  public:
    // specs has 1 entry (shared across dimensions) or `dim` entries (one per dimension).
    LatentPrior(std::vector<KernelSpec> specs, std::vector<Input> inputs, int dim, int dof,
                double jitter = kDefaultJitter);

    int n_points() const { return n_; }
    int dim() const { return dim_; }
    int dof() const { return dof_; }
    int size() const { return n_ * dim_ * dof_; }
    bool shared_lengthscale() const { return distinct_.size() == 1; }
    const std::vector<Input>& inputs() const { return inputs_; }

    int n_distinct() const { return static_cast<int>(distinct_.size()); }
    const GramMatrix& distinct_block(int k) const { return distinct_[k]; }
    // Gram block backing latent function (dof i, dimension d).
    const GramMatrix& block(int dof_i, int dim_d) const;

    static int flat_index(int dof_i, int dim_d, int n, int n_points, int dim) {
        return (dof_i * dim + dim_d) * n_points + n;
    }
    Eigen::Ref<const Eigen::VectorXd> block_of(const Eigen::VectorXd& u, int dof_i,
                                               int dim_d) const;

    double log_density(const Eigen::VectorXd& u) const;
    Eigen::VectorXd sample(Rng& rng) const;

  private:
    std::vector<Input> inputs_;
    int n_ = 0, dim_ = 0, dof_ = 0;
    std::vector<GramMatrix> distinct_;
};

}  // namespace gwp
