#include "gwp/wishart.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace gwp {

ScaleFactor::ScaleFactor(Eigen::MatrixXd l) : lower(std::move(l)) { validate(); }

ScaleFactor ScaleFactor::from_covariance(const Eigen::MatrixXd& v) {
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("scale matrix not positive definite");
    return ScaleFactor(Eigen::MatrixXd(llt.matrixL()));
}

void ScaleFactor::validate() const {
    if (lower.rows() != lower.cols()) throw ShapeError("scale factor not square");
    for (int j = 0; j < lower.cols(); ++j) {
        if (!(lower(j, j) > 0.0))
            throw NotPositiveDefiniteError("scale factor diagonal entry " + std::to_string(j) +
                                           " is " + std::to_string(lower(j, j)));
        for (int i = 0; i < j; ++i)
            if (lower(i, j) != 0.0) throw ShapeError("scale factor not lower triangular");
    }
}

double log_multivariate_gamma(int dim, double a) {
    double out = 0.25 * dim * (dim - 1) * std::log(M_PI);
    for (int j = 1; j <= dim; ++j) out += std::lgamma(a + 0.5 * (1 - j));
    return out;
}

double wishart_log_density(const Eigen::MatrixXd& m, const Eigen::MatrixXd& scale, double dof) {
    const int d = static_cast<int>(m.rows());
    if (m.cols() != d || scale.rows() != d || scale.cols() != d)
        throw ShapeError("wishart density: dimension mismatch");
    if (!(dof > d - 1))
        throw std::invalid_argument("wishart density needs dof > dim - 1");
    Eigen::LLT<Eigen::MatrixXd> llt_m(m);
    if (llt_m.info() != Eigen::Success)
        throw NotPositiveDefiniteError("wishart density: argument not positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt_v(scale);
    if (llt_v.info() != Eigen::Success)
        throw NotPositiveDefiniteError("wishart density: scale not positive definite");

    const Eigen::MatrixXd lm = llt_m.matrixL();
    const Eigen::MatrixXd lv = llt_v.matrixL();
    const double log_det_m = 2.0 * lm.diagonal().array().log().sum();
    const double log_det_v = 2.0 * lv.diagonal().array().log().sum();
    // tr(V^{-1} M) = |Lv^{-1} Lm|_F^2
    const Eigen::MatrixXd w = lv.triangularView<Eigen::Lower>().solve(lm);
    const double trace = w.squaredNorm();

    return 0.5 * (dof - d - 1) * log_det_m - 0.5 * dof * d * std::log(2.0) -
           0.5 * dof * log_det_v - log_multivariate_gamma(d, 0.5 * dof) - 0.5 * trace;
}

Eigen::MatrixXd build_covariance(const Eigen::Ref<const Eigen::VectorXd>& latent_slice,
                                 const ScaleFactor& scale) {
    const int d = scale.dim();
    if (latent_slice.size() % d != 0)
        throw ShapeError("latent slice length not a multiple of dim");
    const int dof = static_cast<int>(latent_slice.size()) / d;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < dof; ++i) {
        Eigen::VectorXd y = scale.lower * latent_slice.segment(i * d, d);
        sigma.noalias() += y * y.transpose();
    }
    // exact symmetry regardless of accumulation order
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    return sigma;
}

Eigen::VectorXd GWPState::latent_slice_at(int n) const {
    const int d = dim();
    const int np = n_points();
    Eigen::VectorXd slice(dof * d);
    for (int i = 0; i < dof; ++i)
        for (int dd = 0; dd < d; ++dd)
            slice[i * d + dd] = latents[LatentPrior::flat_index(i, dd, n, np, d)];
    return slice;
}

std::vector<KernelSpec> GWPState::kernel_specs(const KernelSpec& base) const {
    std::vector<KernelSpec> specs;
    if (lengthscales.size() == 1) {
        specs.push_back(base.with_lengthscale(lengthscales[0]));
    } else {
        if (lengthscales.size() != dim())
            throw ShapeError("state lengthscales: expected 1 or dim entries");
        for (int d = 0; d < dim(); ++d)
            specs.push_back(base.with_lengthscale(lengthscales[d]));
    }
    return specs;
}

CovariancePath covariance_path(const GWPState& state) {
    CovariancePath path;
    if (state.latents.size() !=
        static_cast<Eigen::Index>(state.dof) * state.dim() * state.n_points())
        throw ShapeError("covariance_path: latent vector length mismatch");
    path.inputs = state.inputs;
    path.matrices.resize(state.n_points());
    const int n = state.n_points();
#pragma omp parallel for schedule(static)
    for (int t = 0; t < n; ++t)
        path.matrices[t] = build_covariance(state.latent_slice_at(t), state.scale);
    return path;
}

CovariancePath sample_prior_path(const KernelSpec& spec, const std::vector<Input>& inputs,
                                 const ScaleFactor& scale, int dof, std::uint64_t seed,
                                 double jitter) {
    const int d = scale.dim();
    if (dof < 1) throw std::invalid_argument("prior path needs dof >= 1");
    LatentPrior prior({spec}, inputs, d, dof, jitter);
    Rng rng = make_rng(seed);
    GWPState state;
    state.latents = prior.sample(rng);
    state.lengthscales = Eigen::VectorXd::Constant(1, spec.lengthscale);
    state.scale = scale;
    state.dof = dof;
    state.inputs = inputs;
    return covariance_path(state);
}

CovariancePath invert_path(const CovariancePath& path) {
    CovariancePath out;
    out.inputs = path.inputs;
    out.matrices.resize(path.matrices.size());
    const int n = path.size();
    const int d = path.dim();
    // exceptions must not cross the parallel region; collect the first failure instead
    int bad = n;
#pragma omp parallel for schedule(static) reduction(min : bad)
    for (int t = 0; t < n; ++t) {
        Eigen::LLT<Eigen::MatrixXd> llt(path.matrices[t]);
        if (llt.info() != Eigen::Success) {
            bad = t;
            continue;
        }
        Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
        out.matrices[t] = 0.5 * (inv + inv.transpose());
    }
    if (bad < n)
        throw NotPositiveDefiniteError("invert_path: matrix " + std::to_string(bad) +
                                       " not positive definite");
    return out;
}

}  // namespace gwp
