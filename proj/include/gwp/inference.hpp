#pragma once

#include <functional>
#include <optional>

#include "gwp/kernels.hpp"
#include "gwp/wishart.hpp"

namespace gwp {

struct SamplerConfig {
    int n_iterations = 2000;
    int n_burnin = -1;    // -1: n_iterations / 2
    int thinning = 10;
    int dof = 0;          // 0: dim + 1
    double jitter = kDefaultJitter;
    double likelihood_jitter = 1e-10;

    // lognormal prior on each lengthscale; nan mean_log = auto (se/ou: median spacing
    // scaled to a quarter of the span; periodic families: 0)
    double theta_prior_mean_log = std::numeric_limits<double>::quiet_NaN();
    double theta_prior_sd_log = 1.5;
    bool per_dimension_theta = false;
    double slice_width = 1.0;

    // random-walk proposal for the scale factor; diagonal moves in log space
    double scale_proposal_sd = 0.05;
    double scale_prior_sd = 1.0;
    bool adapt_scale_proposal = true;  // tune during burn-in only, then freeze

    std::uint64_t seed = 0;
    bool verbose = false;

    void validate(int dim) const;
    int burnin() const { return n_burnin < 0 ? n_iterations / 2 : n_burnin; }
    int effective_dof(int dim) const { return dof == 0 ? dim + 1 : dof; }
};

/// Gaussian observation likelihood: each row x_n ~ N(0, Sigma(t_n)) with Sigma built
/// from the state's latents and scale. OpenMP over time steps with a fixed-order sum.
double log_likelihood(const GWPState& state, const ObservationSet& obs,
                      double likelihood_jitter = 1e-10);

/// Same likelihood evaluated directly on a latent vector (LatentPrior layout over
/// obs.size() points); the form the samplers and the forecaster call in inner loops.
double log_likelihood_flat(const Eigen::VectorXd& u, const ScaleFactor& scale, int dof,
                           const ObservationSet& obs, double likelihood_jitter = 1e-10);

/// log N(x; 0, sigma). Retries once with jitter * tr(sigma)/dim on the diagonal before
/// throwing NotPositiveDefiniteError.
double gaussian_log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::MatrixXd& sigma, double jitter = 0.0);

struct EllipticalSliceResult {
    Eigen::VectorXd u;
    double log_lik;     // likelihood at the accepted point
    int n_proposals;
};

/// One elliptical slice update of the whole latent vector under `prior` and an
/// arbitrary log likelihood. Always moves to an accepted point (which may be within
/// numerical distance of the start). Throws SamplerStallError after max_proposals.
EllipticalSliceResult elliptical_slice_update(
    const Eigen::VectorXd& u, double current_log_lik, const LatentPrior& prior,
    const std::function<double(const Eigen::VectorXd&)>& log_lik, Rng& rng,
    int max_proposals = 100000);

struct LengthscalePrior {
    double mean_log = 0.0;
    double sd_log = 1.5;
    double log_density(double log_theta) const;
};

/// Axis-aligned slice sampling (step-out and shrink) on each log lengthscale. The
/// target combines the latent prior density at the current u with the lognormal
/// hyperprior. `prior_builder` maps a lengthscale vector to the corresponding
/// LatentPrior. An empty u means prior-only sampling. Throws SamplerStallError if a
/// bracket fails to shrink within max_evals evaluations.
Eigen::VectorXd slice_update_lengthscales(
    const Eigen::VectorXd& lengthscales, const Eigen::VectorXd& u,
    const LengthscalePrior& prior,
    const std::function<LatentPrior(const Eigen::VectorXd&)>& prior_builder, Rng& rng,
    double width = 1.0, int max_evals = 10000);

struct ScaleUpdateResult {
    ScaleFactor scale;
    bool accepted = false;
    double log_lik = 0.0;  // likelihood at the returned scale
};

/// Random-walk Metropolis on the free entries of the scale factor: additive moves on
/// the strict lower triangle, multiplicative (log-space, with Jacobian) moves on the
/// diagonal. Gaussian prior with sd `prior_sd` on all free entries.
ScaleUpdateResult metropolis_update_scale(const ScaleFactor& scale, const Eigen::VectorXd& u,
                                          const ObservationSet& obs, int dof,
                                          double current_log_lik, double proposal_sd,
                                          double prior_sd, Rng& rng,
                                          double likelihood_jitter = 1e-10);

struct PosteriorSamples {
    std::vector<GWPState> states;     // post burn-in, thinned
    KernelSpec base_kernel;           // family and period; lengthscales live in states
    int dof = 0;
    double jitter = kDefaultJitter;

    Eigen::VectorXd log_lik_trace;    // one entry per iteration
    Eigen::MatrixXd theta_trace;      // n_iterations x n_lengthscales
    double scale_acceptance = 0.0;    // post burn-in acceptance rate
    std::uint64_t seed = 0;

    void validate() const;
};

/// Gibbs cycle: elliptical slice update of u, slice update of the lengthscales,
/// Metropolis update of the scale factor. Degrees of freedom stay fixed. Errors from
/// inner updates are rethrown with the iteration index prepended.
PosteriorSamples run_gibbs(const ObservationSet& obs, const KernelSpec& kernel,
                           const SamplerConfig& config);

double auto_prior_mean_log(const KernelSpec& kernel, const std::vector<Input>& inputs);

void save_posterior(const std::string& dir, const PosteriorSamples& samples);
PosteriorSamples load_posterior(const std::string& dir);

}  // namespace gwp
