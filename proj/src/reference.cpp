#include "gwp/reference.hpp"

#include <cmath>

namespace gwp::reference {

Eigen::MatrixXd serial_gram(const KernelSpec& spec, const std::vector<Input>& inputs,
                            double jitter) {
    (void)jitter;
    const int n = static_cast<int>(inputs.size());
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = evaluate_kernel(spec, inputs[i], inputs[j]);
    return k;
}

double serial_log_likelihood(const GWPState& state, const ObservationSet& obs,
                             double likelihood_jitter) {
    const int n = obs.size();
    double total = 0.0;
    for (int t = 0; t < n; ++t) {
        const Eigen::MatrixXd sigma = build_covariance(state.latent_slice_at(t), state.scale);
        total += gaussian_log_density(obs.x.row(t).transpose(), sigma, likelihood_jitter);
    }
    return total;
}

PredictionResult serial_predict_covariance(const PosteriorSamples& samples,
                                           const std::vector<Input>& test_inputs,
                                           LatentEstimate latent, std::uint64_t seed) {
    const int n_states = static_cast<int>(samples.states.size());
    const int n_test = static_cast<int>(test_inputs.size());
    if (n_states == 0) throw ShapeError("predict: no posterior states");
    const int d = samples.states.front().dim();

    PredictionResult out;
    out.state_paths.assign(n_states, CovariancePath{});
    std::vector<std::vector<Eigen::MatrixXd>> expected(n_states);

    for (int s = 0; s < n_states; ++s) {
        const GWPState& state = samples.states[s];
        CovariancePath path;
        path.inputs = test_inputs;
        path.matrices.resize(n_test);
        expected[s].resize(n_test);
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
        for (int t = 0; t < n_test; ++t) {
            const LatentConditional lc =
                condition_latents(state, samples.base_kernel, test_inputs[t], samples.jitter);
            Eigen::MatrixXd mean_sigma = build_covariance(lc.mean, state.scale);
            Eigen::VectorXd total_var = Eigen::VectorXd::Zero(d);
            for (int i = 0; i < state.dof; ++i)
                for (int dd = 0; dd < d; ++dd) total_var[dd] += lc.variance[i * d + dd];
            Eigen::MatrixXd exp_sigma = mean_sigma;
            exp_sigma.noalias() +=
                state.scale.lower * total_var.asDiagonal() * state.scale.lower.transpose();
            expected[s][t] = 0.5 * (exp_sigma + exp_sigma.transpose()).eval();
            if (latent == LatentEstimate::Mean) {
                path.matrices[t] = mean_sigma;
            } else {
                Eigen::VectorXd draw(lc.mean.size());
                for (Eigen::Index j = 0; j < draw.size(); ++j)
                    draw[j] = lc.mean[j] + std::sqrt(lc.variance[j]) * rand_normal(rng);
                path.matrices[t] = build_covariance(draw, state.scale);
            }
        }
        out.state_paths[s] = std::move(path);
    }

    out.mean_path.inputs = test_inputs;
    out.mean_path.matrices.resize(n_test);
    for (int t = 0; t < n_test; ++t) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
        if (latent == LatentEstimate::Mean)
            for (int s = 0; s < n_states; ++s) acc += out.state_paths[s].matrices[t];
        else
            for (int s = 0; s < n_states; ++s) acc += expected[s][t];
        out.mean_path.matrices[t] = acc / n_states;
    }
    return out;
}

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (m.cols() != n) throw ShapeError("dense_inverse: matrix not square");
    Eigen::MatrixXd a = m;
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) < 1e-300)
            throw FactorisationError("dense_inverse: singular at column " + std::to_string(col));
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            inv.row(pivot).swap(inv.row(col));
        }
        const double p = a(col, col);
        a.row(col) /= p;
        inv.row(col) /= p;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a(r, col);
            if (factor != 0.0) {
                a.row(r) -= factor * a.row(col);
                inv.row(r) -= factor * inv.row(col);
            }
        }
    }
    return inv;
}

double dense_log_det(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    Eigen::MatrixXd a = m;
    double log_det = 0.0;
    int sign = 1;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) < 1e-300)
            throw FactorisationError("dense_log_det: singular matrix");
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            sign = -sign;
        }
        log_det += std::log(std::abs(a(col, col)));
        if (a(col, col) < 0.0) sign = -sign;
        for (int r = col + 1; r < n; ++r) {
            const double factor = a(r, col) / a(col, col);
            a.row(r) -= factor * a.row(col);
        }
    }
    if (sign < 0) throw NotPositiveDefiniteError("dense_log_det: negative determinant");
    return log_det;
}

Eigen::MatrixXd dense_cholesky(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (m.cols() != n) throw ShapeError("dense_cholesky: matrix not square");
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = m(j, j);
        for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0))
            throw NotPositiveDefiniteError("dense_cholesky: pivot " + std::to_string(j) +
                                           " is " + std::to_string(diag));
        l(j, j) = std::sqrt(diag);
        for (int i = j + 1; i < n; ++i) {
            double v = m(i, j);
            for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

double dense_gaussian_log_density(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma) {
    const int d = static_cast<int>(x.size());
    const Eigen::MatrixXd inv = dense_inverse(sigma);
    const double log_det = dense_log_det(sigma);
    constexpr double log2pi = 1.8378770664093455;
    return -0.5 * (d * log2pi + log_det + x.dot(inv * x));
}

double dense_path_log_likelihood(const CovariancePath& path, const ObservationSet& obs) {
    if (path.size() != obs.size()) throw ShapeError("dense likelihood: length mismatch");
    double total = 0.0;
    for (int t = 0; t < obs.size(); ++t)
        total += dense_gaussian_log_density(obs.x.row(t).transpose(), path.matrices[t]);
    return total;
}

Eigen::MatrixXd naive_build_covariance(const Eigen::VectorXd& latent_slice,
                                       const Eigen::MatrixXd& scale_lower) {
    const int d = static_cast<int>(scale_lower.rows());
    const int dof = static_cast<int>(latent_slice.size()) / d;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < dof; ++i) {
        // y = L u_i, one entry at a time
        std::vector<double> y(d, 0.0);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) y[r] += scale_lower(r, c) * latent_slice[i * d + c];
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) sigma(r, c) += y[r] * y[c];
    }
    return sigma;
}

DenseConditional dense_condition_latents(const GWPState& state, const KernelSpec& base,
                                         const Input& t_star, double jitter) {
    const int n = state.n_points();
    const int d = state.dim();
    const std::vector<KernelSpec> specs = state.kernel_specs(base);
    DenseConditional out;
    out.mean.resize(state.dof * d);
    out.variance.resize(state.dof * d);
    for (int dd = 0; dd < d; ++dd) {
        const KernelSpec& spec = specs[state.lengthscales.size() == 1 ? 0 : dd];
        Eigen::MatrixXd k(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                k(i, j) = evaluate_kernel(spec, state.inputs[i], state.inputs[j]);
        k.diagonal().array() += jitter;
        const Eigen::MatrixXd k_inv = dense_inverse(k);
        Eigen::VectorXd kstar(n);
        for (int i = 0; i < n; ++i) kstar[i] = evaluate_kernel(spec, state.inputs[i], t_star);
        const Eigen::VectorXd w = k_inv * kstar;
        const double var = 1.0 - kstar.dot(w);
        for (int i = 0; i < state.dof; ++i) {
            const auto block =
                state.latents.segment(LatentPrior::flat_index(i, dd, 0, n, d), n);
            out.mean[i * d + dd] = w.dot(block);
            out.variance[i * d + dd] = var;
        }
    }
    return out;
}

double naive_path_mse(const CovariancePath& a, const CovariancePath& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) throw ShapeError("naive mse: misaligned");
    const int d = a.dim();
    double total = 0.0;
    for (int n = 0; n < a.size(); ++n)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double diff = a.matrices[n](i, j) - b.matrices[n](i, j);
                total += diff * diff;
            }
    return total / (static_cast<double>(a.size()) * d * d);
}

}  // namespace gwp::reference
