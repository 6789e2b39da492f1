#pragma once

#include "gwp/inference.hpp"

namespace gwp {

/// Posterior of the latent values at one new input given one state's latents:
/// independent per latent function, so mean and variance are vectors of length
/// dof * dim ordered dimension-fastest (matching build_covariance slices).
struct LatentConditional {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // in [0, 1 + 10 * jitter]; tiny negatives clamped to 0
};

LatentConditional condition_latents(const GWPState& state, const KernelSpec& base,
                                    const Input& t_star, double jitter = kDefaultJitter);

enum class LatentEstimate {
    Mean,  // plug in the conditional mean; understates far-horizon uncertainty
    Draw,  // integrate the conditional spread: adds dof * var * V to the expectation
};

struct PredictionResult {
    CovariancePath mean_path;                  // averaged over posterior states
    std::vector<CovariancePath> state_paths;   // one path per posterior state
};

/// Posterior predictive covariance at arbitrary inputs. At an input matching a
/// training point this reduces to the stored latents. OpenMP over states.
PredictionResult predict_covariance(const PosteriorSamples& samples,
                                    const std::vector<Input>& test_inputs,
                                    LatentEstimate latent = LatentEstimate::Mean,
                                    std::uint64_t seed = 0);

/// Pointwise empirical quantiles of a bundle of aligned paths.
struct PathQuantiles {
    CovariancePath lower, median, upper;
};
PathQuantiles path_quantiles(const std::vector<CovariancePath>& paths, double lo = 0.025,
                             double hi = 0.975);

struct ForecastConfig {
    int chains = 10;               // posterior draws carried forward as live chains
    int refresh_iterations = 25;   // elliptical slice refreshes per chain per step
    int refit_every = 0;           // 0: single fit on the training window
    LatentEstimate latent = LatentEstimate::Draw;
    std::uint64_t seed = 0;
};

/// Rolling one-step-ahead forecasts: fit on obs.head(n_train), then for each of
/// `horizon` steps predict at the next input before revealing its observation.
/// Hyperparameters freeze at posterior summaries (geometric-mean lengthscales, mean
/// scale factor); a bundle of chains warm-started from posterior draws absorbs each
/// revealed observation via a conditional draw plus short elliptical slice refreshes.
CovariancePath one_step_forecast(const ObservationSet& obs, int n_train, int horizon,
                                 const KernelSpec& kernel, const SamplerConfig& sampler,
                                 const ForecastConfig& config = {});

}  // namespace gwp
