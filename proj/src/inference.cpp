#include "gwp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace gwp {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

// fast path shared by the public op and the samplers: latents and scale passed
// directly so proposals don't need a full state object
double likelihood_impl(const Eigen::VectorXd& u, const ScaleFactor& scale, int dof,
                       const ObservationSet& obs, double jitter) {
    const int n = obs.size();
    const int d = obs.dim();
    Eigen::VectorXd terms(n);
    int bad = n;
#pragma omp parallel for schedule(static) reduction(min : bad)
    for (int t = 0; t < n; ++t) {
        Eigen::VectorXd slice(dof * d);
        for (int i = 0; i < dof; ++i)
            for (int dd = 0; dd < d; ++dd)
                slice[i * d + dd] = u[LatentPrior::flat_index(i, dd, t, n, d)];
        Eigen::MatrixXd sigma = build_covariance(slice, scale);
        try {
            terms[t] = gaussian_log_density(obs.x.row(t).transpose(), sigma, jitter);
        } catch (const NotPositiveDefiniteError&) {
            bad = t;
        }
    }
    if (bad < n)
        throw NotPositiveDefiniteError("likelihood: covariance at step " + std::to_string(bad) +
                                       " not positive definite");
    // fixed-order sum, bitwise identical to the serial loop
    double total = 0.0;
    for (int t = 0; t < n; ++t) total += terms[t];
    return total;
}

template <typename Fn>
auto rethrow_with_iteration(int iteration, Fn&& fn) {
    try {
        return fn();
    } catch (const SamplerStallError& e) {
        throw SamplerStallError("iteration " + std::to_string(iteration) + ": " + e.what());
    } catch (const NotPositiveDefiniteError& e) {
        throw NotPositiveDefiniteError("iteration " + std::to_string(iteration) + ": " +
                                       e.what());
    } catch (const FactorisationError& e) {
        throw FactorisationError("iteration " + std::to_string(iteration) + ": " + e.what());
    }
}

void write_matrix_csv(std::ofstream& out, const Eigen::MatrixXd& m) {
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            try {
                row.push_back(std::stod(line.substr(pos, comma - pos)));
            } catch (const std::exception&) {
                throw ParseError(path + ": bad number '" + line.substr(pos, comma - pos) + "'");
            }
            pos = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace

void SamplerConfig::validate(int dim) const {
    if (n_iterations <= 0) throw std::invalid_argument("n_iterations must be positive");
    if (burnin() >= n_iterations)
        throw std::invalid_argument("burn-in must leave at least one retained iteration");
    if (thinning <= 0) throw std::invalid_argument("thinning must be positive");
    if (dof != 0 && dof < dim + 1)
        throw std::invalid_argument("dof must be 0 (auto) or at least dim + 1");
    if (!(jitter >= 0) || !(likelihood_jitter >= 0))
        throw std::invalid_argument("jitters must be non-negative");
    if (!(theta_prior_sd_log > 0)) throw std::invalid_argument("lengthscale prior sd must be positive");
    if (!(scale_proposal_sd > 0) || !(scale_prior_sd > 0))
        throw std::invalid_argument("scale proposal and prior sds must be positive");
    if (!(slice_width > 0)) throw std::invalid_argument("slice width must be positive");
}

double gaussian_log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::MatrixXd& sigma, double jitter) {
    const int d = static_cast<int>(x.size());
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        if (jitter > 0.0) {
            Eigen::MatrixXd bumped = sigma;
            const double scale = std::max(1.0, sigma.diagonal().cwiseAbs().maxCoeff());
            bumped.diagonal().array() += jitter * scale;
            llt.compute(bumped);
        }
        if (llt.info() != Eigen::Success)
            throw NotPositiveDefiniteError("gaussian density: covariance not positive definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const Eigen::VectorXd w = l.triangularView<Eigen::Lower>().solve(x);
    return -0.5 * (d * kLog2Pi + log_det + w.squaredNorm());
}

double log_likelihood(const GWPState& state, const ObservationSet& obs,
                      double likelihood_jitter) {
    obs.validate();
    if (state.n_points() != obs.size() || state.dim() != obs.dim())
        throw ShapeError("log_likelihood: state and observations misaligned");
    return likelihood_impl(state.latents, state.scale, state.dof, obs, likelihood_jitter);
}

double log_likelihood_flat(const Eigen::VectorXd& u, const ScaleFactor& scale, int dof,
                           const ObservationSet& obs, double likelihood_jitter) {
    if (u.size() != static_cast<Eigen::Index>(dof) * obs.dim() * obs.size())
        throw ShapeError("log_likelihood_flat: latent vector length mismatch");
    return likelihood_impl(u, scale, dof, obs, likelihood_jitter);
}

EllipticalSliceResult elliptical_slice_update(
    const Eigen::VectorXd& u, double current_log_lik, const LatentPrior& prior,
    const std::function<double(const Eigen::VectorXd&)>& log_lik, Rng& rng,
    int max_proposals) {
    const Eigen::VectorXd v = prior.sample(rng);
    const double log_y = current_log_lik + std::log(rand_uniform(rng));
    double angle = rand_uniform(rng) * 2.0 * M_PI;
    double lo = angle - 2.0 * M_PI;
    double hi = angle;

    for (int k = 1; k <= max_proposals; ++k) {
        Eigen::VectorXd proposal = u * std::cos(angle) + v * std::sin(angle);
        const double ll = log_lik(proposal);
        if (ll > log_y) return {std::move(proposal), ll, k};
        // shrink the bracket toward the current point and retry
        if (angle < 0.0)
            lo = angle;
        else
            hi = angle;
        angle = lo + rand_uniform(rng) * (hi - lo);
    }
    throw SamplerStallError("elliptical slice: no acceptance after " +
                            std::to_string(max_proposals) + " proposals");
}

double LengthscalePrior::log_density(double log_theta) const {
    const double z = (log_theta - mean_log) / sd_log;
    return -0.5 * z * z - std::log(sd_log) - 0.5 * kLog2Pi;
}

Eigen::VectorXd slice_update_lengthscales(
    const Eigen::VectorXd& lengthscales, const Eigen::VectorXd& u,
    const LengthscalePrior& prior,
    const std::function<LatentPrior(const Eigen::VectorXd&)>& prior_builder, Rng& rng,
    double width, int max_evals) {
    Eigen::VectorXd theta = lengthscales;
    const bool with_latents = u.size() > 0;

    for (Eigen::Index axis = 0; axis < theta.size(); ++axis) {
        auto target = [&](double log_l) -> double {
            double value = prior.log_density(log_l);
            if (with_latents) {
                Eigen::VectorXd candidate = theta;
                candidate[axis] = std::exp(log_l);
                try {
                    value += prior_builder(candidate).log_density(u);
                } catch (const FactorisationError&) {
                    return -std::numeric_limits<double>::infinity();
                }
            }
            return value;
        };

        int evals = 0;
        auto eval = [&](double x) {
            if (++evals > max_evals)
                throw SamplerStallError("lengthscale slice: evaluation budget exhausted on axis " +
                                        std::to_string(axis));
            return target(x);
        };

        const double x0 = std::log(theta[axis]);
        const double log_y = eval(x0) + std::log(rand_uniform(rng));
        // step out
        double left = x0 - width * rand_uniform(rng);
        double right = left + width;
        while (eval(left) > log_y) left -= width;
        while (eval(right) > log_y) right += width;
        // shrink
        for (;;) {
            const double x1 = left + rand_uniform(rng) * (right - left);
            if (eval(x1) > log_y) {
                theta[axis] = std::exp(x1);
                break;
            }
            if (x1 < x0)
                left = x1;
            else
                right = x1;
            if (right - left < 1e-13) {
                theta[axis] = std::exp(x0);  // degenerate bracket collapses onto the start
                break;
            }
        }
    }
    return theta;
}

ScaleUpdateResult metropolis_update_scale(const ScaleFactor& scale, const Eigen::VectorXd& u,
                                          const ObservationSet& obs, int dof,
                                          double current_log_lik, double proposal_sd,
                                          double prior_sd, Rng& rng,
                                          double likelihood_jitter) {
    const int d = scale.dim();
    Eigen::MatrixXd proposal = scale.lower;
    double log_jacobian = 0.0;  // log-space diagonal moves need d(l') / d(log l') terms
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            if (i == j) {
                const double next = scale.lower(i, i) * std::exp(proposal_sd * rand_normal(rng));
                log_jacobian += std::log(next / scale.lower(i, i));
                proposal(i, i) = next;
            } else {
                proposal(i, j) += proposal_sd * rand_normal(rng);
            }
        }

    auto log_prior = [prior_sd](const Eigen::MatrixXd& l) {
        double q = 0.0;
        for (int i = 0; i < l.rows(); ++i)
            for (int j = 0; j <= i; ++j) q += l(i, j) * l(i, j);
        return -0.5 * q / (prior_sd * prior_sd);
    };

    double proposal_log_lik;
    try {
        proposal_log_lik = likelihood_impl(u, ScaleFactor(proposal), dof, obs, likelihood_jitter);
    } catch (const NotPositiveDefiniteError&) {
        return {scale, false, current_log_lik};
    }

    const double log_accept = proposal_log_lik - current_log_lik + log_prior(proposal) -
                              log_prior(scale.lower) + log_jacobian;
    if (std::log(rand_uniform(rng)) < log_accept)
        return {ScaleFactor(proposal), true, proposal_log_lik};
    return {scale, false, current_log_lik};
}

double auto_prior_mean_log(const KernelSpec& kernel, const std::vector<Input>& inputs) {
    if (kernel.family == KernelFamily::PeriodicPaper ||
        kernel.family == KernelFamily::PeriodicStandard)
        return 0.0;  // decay parameter inside sin^2 is dimensionless
    std::vector<double> gaps;
    for (size_t i = 1; i < inputs.size(); ++i)
        gaps.push_back((inputs[i] - inputs[i - 1]).norm());
    if (gaps.empty()) return 0.0;
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double median = gaps[gaps.size() / 2];
    return std::log(std::max(median * inputs.size() / 4.0, 1e-12));
}

PosteriorSamples run_gibbs(const ObservationSet& obs, const KernelSpec& kernel,
                           const SamplerConfig& config) {
    obs.validate();
    kernel.validate();
    const int d = obs.dim();
    const int n = obs.size();
    config.validate(d);
    if (n < 2) throw InsufficientDataError("gibbs: need at least 2 observations");
    const int dof = config.effective_dof(d);
    const int n_theta = config.per_dimension_theta ? d : 1;

    LengthscalePrior theta_prior;
    theta_prior.mean_log = std::isnan(config.theta_prior_mean_log)
                               ? auto_prior_mean_log(kernel, obs.inputs)
                               : config.theta_prior_mean_log;
    theta_prior.sd_log = config.theta_prior_sd_log;

    auto prior_builder = [&](const Eigen::VectorXd& theta) {
        std::vector<KernelSpec> specs;
        for (Eigen::Index k = 0; k < theta.size(); ++k)
            specs.push_back(kernel.with_lengthscale(theta[k]));
        return LatentPrior(specs, obs.inputs, d, dof, config.jitter);
    };

    Rng rng = make_rng(config.seed);

    // init: lengthscales at the prior median, scale factor from the sample moment so
    // the implied mean dof * V matches the data scale
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(n_theta, std::exp(theta_prior.mean_log));
    Eigen::MatrixXd moment = (obs.x.transpose() * obs.x) / static_cast<double>(n);
    moment.diagonal().array() += 1e-8 * std::max(1.0, moment.diagonal().maxCoeff());
    ScaleFactor scale = ScaleFactor::from_covariance(moment / static_cast<double>(dof));

    LatentPrior prior = prior_builder(theta);
    Eigen::VectorXd u = prior.sample(rng);
    double log_lik = likelihood_impl(u, scale, dof, obs, config.likelihood_jitter);

    PosteriorSamples out;
    out.base_kernel = kernel;
    out.dof = dof;
    out.jitter = config.jitter;
    out.seed = config.seed;
    out.log_lik_trace.resize(config.n_iterations);
    out.theta_trace.resize(config.n_iterations, n_theta);

    double proposal_sd = config.scale_proposal_sd;
    const int burnin = config.burnin();
    int accepted_window = 0, window_size = 0;
    int accepted_post = 0, post_iterations = 0;

    for (int it = 0; it < config.n_iterations; ++it) {
        auto step = rethrow_with_iteration(it, [&] {
            return elliptical_slice_update(
                u, log_lik, prior,
                [&](const Eigen::VectorXd& cand) {
                    return likelihood_impl(cand, scale, dof, obs, config.likelihood_jitter);
                },
                rng);
        });
        u = std::move(step.u);
        log_lik = step.log_lik;

        Eigen::VectorXd theta_next = rethrow_with_iteration(it, [&] {
            return slice_update_lengthscales(theta, u, theta_prior, prior_builder, rng,
                                             config.slice_width);
        });
        if ((theta_next - theta).cwiseAbs().maxCoeff() > 0.0) {
            theta = theta_next;
            prior = prior_builder(theta);
        }

        auto scale_step = rethrow_with_iteration(it, [&] {
            return metropolis_update_scale(scale, u, obs, dof, log_lik, proposal_sd,
                                           config.scale_prior_sd, rng,
                                           config.likelihood_jitter);
        });
        scale = scale_step.scale;
        log_lik = scale_step.log_lik;

        if (it < burnin) {
            accepted_window += scale_step.accepted ? 1 : 0;
            if (++window_size == 50 && config.adapt_scale_proposal) {
                const double rate = accepted_window / 50.0;
                if (rate < 0.20) proposal_sd = std::max(proposal_sd * 0.8, 1e-4);
                if (rate > 0.40) proposal_sd = std::min(proposal_sd * 1.25, 10.0);
                accepted_window = 0;
                window_size = 0;
            }
        } else {
            ++post_iterations;
            accepted_post += scale_step.accepted ? 1 : 0;
        }

        out.log_lik_trace[it] = log_lik;
        out.theta_trace.row(it) = theta.transpose();

        if (it >= burnin && (it - burnin) % config.thinning == 0) {
            GWPState state;
            state.latents = u;
            state.lengthscales = theta;
            state.scale = scale;
            state.dof = dof;
            state.inputs = obs.inputs;
            out.states.push_back(std::move(state));
        }
        if (config.verbose && (it + 1) % 100 == 0)
            std::fprintf(stderr, "gibbs %d/%d loglik %.3f\n", it + 1, config.n_iterations,
                         log_lik);
    }

    out.scale_acceptance =
        post_iterations > 0 ? static_cast<double>(accepted_post) / post_iterations : 0.0;
    out.validate();
    return out;
}

void PosteriorSamples::validate() const {
    if (states.empty()) throw ShapeError("posterior: no retained states");
    if (!(scale_acceptance >= 0.0 && scale_acceptance <= 1.0))
        throw ShapeError("posterior: acceptance rate outside [0, 1]");
    const int d = states.front().dim();
    for (const GWPState& s : states)
        if (s.dim() != d || s.dof != dof)
            throw ShapeError("posterior: states disagree on dim or dof");
}

void save_posterior(const std::string& dir, const PosteriorSamples& samples) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char buf[64];

    const GWPState& first = samples.states.front();
    {
        std::ofstream meta(dir + "/meta.csv");
        meta << "key,value\n";
        meta << "family," << to_string(samples.base_kernel.family) << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", samples.base_kernel.period);
        meta << "period," << buf << "\n";
        meta << "dof," << samples.dof << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", samples.jitter);
        meta << "jitter," << buf << "\n";
        meta << "n_points," << first.n_points() << "\n";
        meta << "dim," << first.dim() << "\n";
        meta << "n_theta," << first.lengthscales.size() << "\n";
        meta << "n_states," << samples.states.size() << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", samples.scale_acceptance);
        meta << "scale_acceptance," << buf << "\n";
        meta << "seed," << samples.seed << "\n";
    }
    {
        std::ofstream inputs(dir + "/inputs.csv");
        Eigen::MatrixXd m(first.inputs.size(), first.inputs.front().size());
        for (size_t i = 0; i < first.inputs.size(); ++i) m.row(i) = first.inputs[i].transpose();
        write_matrix_csv(inputs, m);
    }
    {
        std::ofstream f(dir + "/latent_states.csv");  // one state per row
        Eigen::MatrixXd m(samples.states.size(), first.latents.size());
        for (size_t s = 0; s < samples.states.size(); ++s)
            m.row(s) = samples.states[s].latents.transpose();
        write_matrix_csv(f, m);
    }
    {
        std::ofstream f(dir + "/scale_states.csv");  // vech of the factor per row
        Eigen::MatrixXd m(samples.states.size(), vech_size(first.dim()));
        for (size_t s = 0; s < samples.states.size(); ++s)
            m.row(s) = vech(samples.states[s].scale.lower).transpose();
        write_matrix_csv(f, m);
    }
    {
        std::ofstream f(dir + "/lengthscale_states.csv");
        Eigen::MatrixXd m(samples.states.size(), first.lengthscales.size());
        for (size_t s = 0; s < samples.states.size(); ++s)
            m.row(s) = samples.states[s].lengthscales.transpose();
        write_matrix_csv(f, m);
    }
    {
        std::ofstream f(dir + "/loglik_trace.csv");
        write_matrix_csv(f, samples.log_lik_trace);
    }
    {
        std::ofstream f(dir + "/lengthscale_trace.csv");
        write_matrix_csv(f, samples.theta_trace);
    }
}

PosteriorSamples load_posterior(const std::string& dir) {
    PosteriorSamples out;
    std::map<std::string, std::string> meta;
    {
        std::ifstream in(dir + "/meta.csv");
        if (!in) throw ParseError("cannot open " + dir + "/meta.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const size_t comma = line.find(',');
            if (comma == std::string::npos) throw ParseError(dir + "/meta.csv: bad line " + line);
            meta[line.substr(0, comma)] = line.substr(comma + 1);
        }
    }
    auto need = [&](const std::string& key) {
        auto it = meta.find(key);
        if (it == meta.end()) throw ParseError(dir + "/meta.csv: missing key " + key);
        return it->second;
    };
    out.base_kernel.family = kernel_family_from_string(need("family"));
    out.base_kernel.period = std::stod(need("period"));
    out.dof = std::stoi(need("dof"));
    out.jitter = std::stod(need("jitter"));
    out.scale_acceptance = std::stod(need("scale_acceptance"));
    out.seed = std::stoull(need("seed"));
    const int n_points = std::stoi(need("n_points"));
    const int dim = std::stoi(need("dim"));

    const Eigen::MatrixXd input_rows = read_matrix_csv(dir + "/inputs.csv");
    if (input_rows.rows() != n_points) throw ParseError(dir + ": inputs.csv row count mismatch");
    std::vector<Input> inputs;
    for (Eigen::Index i = 0; i < input_rows.rows(); ++i)
        inputs.push_back(input_rows.row(i).transpose());

    const Eigen::MatrixXd latents = read_matrix_csv(dir + "/latent_states.csv");
    const Eigen::MatrixXd scales = read_matrix_csv(dir + "/scale_states.csv");
    const Eigen::MatrixXd thetas = read_matrix_csv(dir + "/lengthscale_states.csv");
    if (latents.rows() != scales.rows() || latents.rows() != thetas.rows())
        throw ParseError(dir + ": state files disagree on state count");

    for (Eigen::Index s = 0; s < latents.rows(); ++s) {
        GWPState st;
        st.latents = latents.row(s).transpose();
        st.lengthscales = thetas.row(s).transpose();
        Eigen::MatrixXd lower = unvech(scales.row(s).transpose());
        lower.triangularView<Eigen::StrictlyUpper>().setZero();
        st.scale = ScaleFactor(lower);
        st.dof = out.dof;
        st.inputs = inputs;
        if (st.dim() != dim) throw ParseError(dir + ": scale dimension mismatch");
        out.states.push_back(std::move(st));
    }
    out.log_lik_trace = read_matrix_csv(dir + "/loglik_trace.csv");
    out.theta_trace = read_matrix_csv(dir + "/lengthscale_trace.csv");
    out.validate();
    return out;
}

}  // namespace gwp
