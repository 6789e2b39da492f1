#include "gwp/prediction.hpp"

#include <algorithm>
#include <cmath>

namespace gwp {

namespace {

// per-state factorisations reused across test inputs
struct Conditioner {
    const GWPState* state;
    std::vector<KernelSpec> specs;       // one per distinct lengthscale
    std::vector<GramMatrix> grams;       // aligned with specs
    Eigen::MatrixXd alphas;              // K^{-1} u_block, column (i * dim + d)
    double jitter;

    Conditioner(const GWPState& s, const KernelSpec& base, double jit) : state(&s), jitter(jit) {
        const int d = s.dim();
        const bool shared = s.lengthscales.size() == 1;
        const int n_distinct = shared ? 1 : d;
        for (int k = 0; k < n_distinct; ++k)
            specs.push_back(base.with_lengthscale(s.lengthscales[k]));
        for (int k = 0; k < n_distinct; ++k)
            grams.push_back(build_gram(specs[k], s.inputs, jitter));
        const int n = s.n_points();
        alphas.resize(n, s.dof * d);
        for (int i = 0; i < s.dof; ++i)
            for (int dd = 0; dd < d; ++dd) {
                const Eigen::VectorXd block =
                    s.latents.segment(LatentPrior::flat_index(i, dd, 0, n, d), n);
                alphas.col(i * d + dd) = grams[shared ? 0 : dd].solve(block);
            }
    }

    LatentConditional condition(const Input& t_star) const {
        const int d = state->dim();
        const int dof = state->dof;
        const bool shared = grams.size() == 1;
        std::vector<Eigen::VectorXd> kstars(grams.size());
        Eigen::VectorXd block_var(grams.size());
        for (size_t k = 0; k < grams.size(); ++k) {
            kstars[k] = cross_covariance(specs[k], state->inputs, t_star);
            const Eigen::VectorXd w = grams[k].forward_solve(kstars[k]);
            double v = 1.0 - w.squaredNorm();
            if (v < 0.0) {
                if (v < -1e-10)
                    throw NotPositiveDefiniteError(
                        "latent conditional variance " + std::to_string(v) + " below floor");
                v = 0.0;
            }
            block_var[k] = v;
        }
        LatentConditional out;
        out.mean.resize(dof * d);
        out.variance.resize(dof * d);
        for (int i = 0; i < dof; ++i)
            for (int dd = 0; dd < d; ++dd) {
                const size_t k = shared ? 0 : dd;
                out.mean[i * d + dd] = kstars[k].dot(alphas.col(i * d + dd));
                out.variance[i * d + dd] = block_var[k];
            }
        return out;
    }
};

// E[Sigma | conditional] = sum_i L (m_i m_i^T + diag(v)) L^T
Eigen::MatrixXd expected_covariance(const LatentConditional& lc, const ScaleFactor& scale,
                                    int dof) {
    const int d = scale.dim();
    Eigen::MatrixXd sigma = build_covariance(lc.mean, scale);
    Eigen::VectorXd total_var = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < dof; ++i)
        for (int dd = 0; dd < d; ++dd) total_var[dd] += lc.variance[i * d + dd];
    sigma.noalias() += scale.lower * total_var.asDiagonal() * scale.lower.transpose();
    return 0.5 * (sigma + sigma.transpose()).eval();
}

Eigen::MatrixXd drawn_covariance(const LatentConditional& lc, const ScaleFactor& scale,
                                 int dof, Rng& rng) {
    Eigen::VectorXd draw(lc.mean.size());
    for (Eigen::Index j = 0; j < draw.size(); ++j)
        draw[j] = lc.mean[j] + std::sqrt(lc.variance[j]) * rand_normal(rng);
    (void)dof;
    return build_covariance(draw, scale);
}

}  // namespace

LatentConditional condition_latents(const GWPState& state, const KernelSpec& base,
                                    const Input& t_star, double jitter) {
    return Conditioner(state, base, jitter).condition(t_star);
}

PredictionResult predict_covariance(const PosteriorSamples& samples,
                                    const std::vector<Input>& test_inputs,
                                    LatentEstimate latent, std::uint64_t seed) {
    const int n_states = static_cast<int>(samples.states.size());
    const int n_test = static_cast<int>(test_inputs.size());
    if (n_states == 0) throw ShapeError("predict: no posterior states");
    const int d = samples.states.front().dim();

    PredictionResult out;
    out.state_paths.assign(n_states, CovariancePath{});
    std::vector<std::vector<Eigen::MatrixXd>> expected(n_states);

    int bad = n_states;
    std::string bad_what;
#pragma omp parallel for schedule(dynamic) reduction(min : bad)
    for (int s = 0; s < n_states; ++s) {
        try {
            const GWPState& state = samples.states[s];
            Conditioner cond(state, samples.base_kernel, samples.jitter);
            CovariancePath path;
            path.inputs = test_inputs;
            path.matrices.resize(n_test);
            expected[s].resize(n_test);
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
            for (int t = 0; t < n_test; ++t) {
                const LatentConditional lc = cond.condition(test_inputs[t]);
                expected[s][t] = expected_covariance(lc, state.scale, state.dof);
                path.matrices[t] = latent == LatentEstimate::Mean
                                       ? build_covariance(lc.mean, state.scale)
                                       : drawn_covariance(lc, state.scale, state.dof, rng);
            }
            out.state_paths[s] = std::move(path);
        } catch (const std::exception& e) {
            bad = s;
#pragma omp critical
            bad_what = e.what();
        }
    }
    if (bad < n_states)
        throw NotPositiveDefiniteError("predict: state " + std::to_string(bad) + ": " + bad_what);

    out.mean_path.inputs = test_inputs;
    out.mean_path.matrices.resize(n_test);
    for (int t = 0; t < n_test; ++t) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
        if (latent == LatentEstimate::Mean) {
            for (int s = 0; s < n_states; ++s) acc += out.state_paths[s].matrices[t];
        } else {
            // average the closed-form conditional expectations, not the draws
            for (int s = 0; s < n_states; ++s) acc += expected[s][t];
        }
        out.mean_path.matrices[t] = acc / n_states;
    }
    return out;
}

PathQuantiles path_quantiles(const std::vector<CovariancePath>& paths, double lo, double hi) {
    if (paths.empty()) throw ShapeError("quantiles: no paths");
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
        throw std::invalid_argument("quantiles: need 0 <= lo <= hi <= 1");
    const int n = paths.front().size();
    const int d = paths.front().dim();
    for (const CovariancePath& p : paths)
        if (p.size() != n || p.dim() != d) throw ShapeError("quantiles: paths misaligned");

    auto pick = [&](std::vector<double>& v, double q) {
        const double pos = q * (v.size() - 1);
        const size_t k = static_cast<size_t>(pos);
        std::nth_element(v.begin(), v.begin() + k, v.end());
        double a = v[k];
        if (k + 1 < v.size() && pos > k) {
            std::nth_element(v.begin(), v.begin() + k + 1, v.end());
            a += (pos - k) * (v[k + 1] - a);
        }
        return a;
    };

    PathQuantiles out;
    for (CovariancePath* p : {&out.lower, &out.median, &out.upper}) {
        p->inputs = paths.front().inputs;
        p->matrices.assign(n, Eigen::MatrixXd::Zero(d, d));
    }
    std::vector<double> vals(paths.size());
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                for (size_t s = 0; s < paths.size(); ++s) vals[s] = paths[s].matrices[t](i, j);
                out.lower.matrices[t](i, j) = pick(vals, lo);
                out.median.matrices[t](i, j) = pick(vals, 0.5);
                out.upper.matrices[t](i, j) = pick(vals, hi);
            }
    return out;
}

CovariancePath one_step_forecast(const ObservationSet& obs, int n_train, int horizon,
                                 const KernelSpec& kernel, const SamplerConfig& sampler,
                                 const ForecastConfig& config) {
    obs.validate();
    if (n_train < 2) throw InsufficientDataError("forecast: n_train must be at least 2");
    if (obs.size() < n_train + horizon)
        throw InsufficientDataError("forecast: series has " + std::to_string(obs.size()) +
                                    " points, needs " + std::to_string(n_train + horizon));
    const int d = obs.dim();

    CovariancePath forecast;
    forecast.inputs.assign(obs.inputs.begin() + n_train, obs.inputs.begin() + n_train + horizon);
    forecast.matrices.reserve(horizon);
    if (horizon == 0) return forecast;

    PosteriorSamples fit = run_gibbs(obs.head(n_train), kernel, sampler);

    // freeze hyperparameters at posterior summaries
    const int n_states = static_cast<int>(fit.states.size());
    const int n_chains = std::min(config.chains, n_states);
    Eigen::VectorXd log_theta =
        Eigen::VectorXd::Zero(fit.states.front().lengthscales.size());
    Eigen::MatrixXd scale_acc = Eigen::MatrixXd::Zero(d, d);
    for (const GWPState& s : fit.states) {
        log_theta += s.lengthscales.array().log().matrix();
        scale_acc += s.scale.lower;
    }
    Eigen::VectorXd theta_hat = (log_theta / n_states).array().exp();
    ScaleFactor scale_hat{Eigen::MatrixXd(scale_acc / n_states)};
    const int dof = fit.dof;

    std::vector<KernelSpec> frozen_specs;
    for (Eigen::Index k = 0; k < theta_hat.size(); ++k)
        frozen_specs.push_back(kernel.with_lengthscale(theta_hat[k]));
    const bool shared = frozen_specs.size() == 1;

    // chains start from evenly spaced posterior draws
    std::vector<Eigen::VectorXd> chains(n_chains);
    for (int c = 0; c < n_chains; ++c)
        chains[c] = fit.states[(c * n_states) / n_chains].latents;

    for (int h = 0; h < horizon; ++h) {
        const int window = n_train + h;  // observations available before this step
        std::vector<Input> win_inputs(obs.inputs.begin(), obs.inputs.begin() + window);

        if (config.refit_every > 0 && h > 0 && h % config.refit_every == 0) {
            PosteriorSamples refit = run_gibbs(obs.head(window), kernel, sampler);
            log_theta.setZero();
            scale_acc.setZero();
            for (const GWPState& s : refit.states) {
                log_theta += s.lengthscales.array().log().matrix();
                scale_acc += s.scale.lower;
            }
            theta_hat = (log_theta / static_cast<int>(refit.states.size())).array().exp();
            scale_hat = ScaleFactor{Eigen::MatrixXd(scale_acc / static_cast<int>(refit.states.size()))};
            frozen_specs.clear();
            for (Eigen::Index k = 0; k < theta_hat.size(); ++k)
                frozen_specs.push_back(kernel.with_lengthscale(theta_hat[k]));
            for (int c = 0; c < n_chains; ++c)
                chains[c] = refit.states[(c * static_cast<int>(refit.states.size())) / n_chains]
                                .latents;
        }

        LatentPrior win_prior(frozen_specs, win_inputs, d, dof, sampler.jitter);

        if (h > 0 && (config.refit_every == 0 || h % config.refit_every != 0)) {
            // absorb the observation revealed at index window - 1: extend each chain by a
            // conditional draw at the new input, then refresh on the grown window
            const int prev = window - 1;
            const Input& t_new = obs.inputs[prev];
            std::vector<Eigen::VectorXd> z(frozen_specs.size());
            Eigen::VectorXd new_var(frozen_specs.size());
            for (size_t k = 0; k < frozen_specs.size(); ++k) {
                GramMatrix prev_gram = build_gram(
                    frozen_specs[k], {obs.inputs.begin(), obs.inputs.begin() + prev},
                    sampler.jitter);
                const Eigen::VectorXd kstar =
                    cross_covariance(frozen_specs[k], prev_gram.inputs, t_new);
                z[k] = prev_gram.solve(kstar);
                new_var[k] = std::max(0.0, 1.0 - kstar.dot(z[k]));
            }
            for (int c = 0; c < n_chains; ++c) {
                Rng rng = make_rng(config.seed,
                                   (static_cast<std::uint64_t>(h) << 20) | (2 * c));
                Eigen::VectorXd grown(static_cast<Eigen::Index>(window) * d * dof);
                for (int i = 0; i < dof; ++i)
                    for (int dd = 0; dd < d; ++dd) {
                        const auto src =
                            chains[c].segment(LatentPrior::flat_index(i, dd, 0, prev, d), prev);
                        grown.segment(LatentPrior::flat_index(i, dd, 0, window, d), prev) = src;
                        const size_t k = shared ? 0 : dd;
                        grown[LatentPrior::flat_index(i, dd, prev, window, d)] =
                            z[k].dot(src) + std::sqrt(new_var[k]) * rand_normal(rng);
                    }
                chains[c] = std::move(grown);
            }
        }

        const ObservationSet win_obs = obs.head(window);
        int stalled = n_chains;
        std::string stall_what;
#pragma omp parallel for schedule(dynamic) reduction(min : stalled)
        for (int c = 0; c < n_chains; ++c) {
            try {
                Rng rng = make_rng(config.seed,
                                   (static_cast<std::uint64_t>(h) << 20) | (2 * c + 1));
                double ll = log_likelihood_flat(chains[c], scale_hat, dof, win_obs,
                                                sampler.likelihood_jitter);
                for (int r = 0; r < config.refresh_iterations; ++r) {
                    auto step = elliptical_slice_update(
                        chains[c], ll, win_prior,
                        [&](const Eigen::VectorXd& cand) {
                            return log_likelihood_flat(cand, scale_hat, dof, win_obs,
                                                       sampler.likelihood_jitter);
                        },
                        rng);
                    chains[c] = std::move(step.u);
                    ll = step.log_lik;
                }
            } catch (const std::exception& e) {
                stalled = c;
#pragma omp critical
                stall_what = e.what();
            }
        }
        if (stalled < n_chains)
            throw SamplerStallError("forecast step " + std::to_string(h) + " chain " +
                                    std::to_string(stalled) + ": " + stall_what);

        // predict at the next input, reusing the refresh prior's factorisations
        const Input& t_star = obs.inputs[window];
        std::vector<Eigen::VectorXd> z(frozen_specs.size());
        Eigen::VectorXd star_var(frozen_specs.size());
        for (size_t k = 0; k < frozen_specs.size(); ++k) {
            const Eigen::VectorXd kstar = cross_covariance(frozen_specs[k], win_inputs, t_star);
            z[k] = win_prior.distinct_block(static_cast<int>(k)).solve(kstar);
            star_var[k] = std::max(0.0, 1.0 - kstar.dot(z[k]));
        }

        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
        for (int c = 0; c < n_chains; ++c) {
            LatentConditional lc;
            lc.mean.resize(dof * d);
            lc.variance.resize(dof * d);
            for (int i = 0; i < dof; ++i)
                for (int dd = 0; dd < d; ++dd) {
                    const size_t k = shared ? 0 : dd;
                    lc.mean[i * d + dd] = z[k].dot(
                        chains[c].segment(LatentPrior::flat_index(i, dd, 0, window, d), window));
                    lc.variance[i * d + dd] = star_var[k];
                }
            acc += config.latent == LatentEstimate::Mean
                       ? build_covariance(lc.mean, scale_hat)
                       : expected_covariance(lc, scale_hat, dof);
        }
        forecast.matrices.push_back(acc / n_chains);
    }
    return forecast;
}

}  // namespace gwp
