#include "gwp/kernels.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace gwp {

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "se" || name == "squared-exponential") return KernelFamily::SquaredExponential;
    if (name == "ou" || name == "ornstein-uhlenbeck") return KernelFamily::OrnsteinUhlenbeck;
    if (name == "periodic-paper") return KernelFamily::PeriodicPaper;
    if (name == "periodic-std" || name == "periodic") return KernelFamily::PeriodicStandard;
    throw ParseError("unknown kernel family: " + name);
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "se";
        case KernelFamily::OrnsteinUhlenbeck: return "ou";
        case KernelFamily::PeriodicPaper: return "periodic-paper";
        case KernelFamily::PeriodicStandard: return "periodic-std";
    }
    throw std::logic_error("unreachable kernel family");
}

void KernelSpec::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw std::invalid_argument("kernel lengthscale must be positive, got " +
                                    std::to_string(lengthscale));
    if (family == KernelFamily::PeriodicStandard &&
        (!(period > 0.0) || !std::isfinite(period)))
        throw std::invalid_argument("kernel period must be positive, got " +
                                    std::to_string(period));
}

KernelSpec KernelSpec::with_lengthscale(double l) const {
    KernelSpec out = *this;
    out.lengthscale = l;
    return out;
}

double evaluate_kernel(const KernelSpec& spec, const Input& a, const Input& b) {
    const double r = (a - b).norm();
    const double l = spec.lengthscale;
    switch (spec.family) {
        case KernelFamily::SquaredExponential:
            return std::exp(-0.5 * r * r / (l * l));
        case KernelFamily::OrnsteinUhlenbeck:
            return std::exp(-r / l);
        case KernelFamily::PeriodicPaper: {
            const double s = std::sin(r);
            return std::exp(-2.0 * s * s / (l * l));
        }
        case KernelFamily::PeriodicStandard: {
            const double s = std::sin(M_PI * r / spec.period);
            return std::exp(-2.0 * s * s / (l * l));
        }
    }
    throw std::logic_error("unreachable kernel family");
}

void GramMatrix::factorise() {
    Eigen::MatrixXd k = values;
    k.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
        throw FactorisationError("gram matrix of size " + std::to_string(size()) +
                                 " not positive definite at jitter " + std::to_string(jitter));
    factor_ = llt.matrixL();
}

double GramMatrix::log_det() const { return 2.0 * factor_.diagonal().array().log().sum(); }

Eigen::VectorXd GramMatrix::forward_solve(const Eigen::VectorXd& b) const {
    return factor_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::VectorXd GramMatrix::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd w = forward_solve(b);
    return factor_.transpose().triangularView<Eigen::Upper>().solve(w);
}

Eigen::VectorXd GramMatrix::sample(Rng& rng) const {
    return factor_ * normal_vector(rng, size());
}

double GramMatrix::log_density(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    const int n = size();
    if (u.size() != n) throw ShapeError("gram log_density: length mismatch");
    Eigen::VectorXd w = forward_solve(u);
    constexpr double log2pi = 1.8378770664093455;
    return -0.5 * (n * log2pi + log_det() + w.squaredNorm());
}

GramMatrix build_gram(const KernelSpec& spec, const std::vector<Input>& inputs, double jitter) {
    spec.validate();
    const int n = static_cast<int>(inputs.size());
    GramMatrix gram;
    gram.inputs = inputs;
    gram.jitter = jitter;
    gram.values.resize(n, n);
    // each thread fills whole rows, so every entry has exactly one writer
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            gram.values(i, j) = evaluate_kernel(spec, inputs[i], inputs[j]);
    gram.factorise();
    return gram;
}

Eigen::VectorXd cross_covariance(const KernelSpec& spec, const std::vector<Input>& inputs,
                                 const Input& t_star) {
    const int n = static_cast<int>(inputs.size());
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i) k[i] = evaluate_kernel(spec, inputs[i], t_star);
    return k;
}

std::vector<Eigen::MatrixXd> block_cholesky(const std::vector<Eigen::MatrixXd>& blocks) {
    std::vector<Eigen::MatrixXd> factors(blocks.size());
    for (size_t b = 0; b < blocks.size(); ++b) {
        Eigen::LLT<Eigen::MatrixXd> llt(blocks[b]);
        if (llt.info() != Eigen::Success)
            throw FactorisationError("block " + std::to_string(b) + " not positive definite");
        factors[b] = llt.matrixL();
    }
    return factors;
}

LatentPrior::LatentPrior(std::vector<KernelSpec> specs, std::vector<Input> inputs, int dim,
                         int dof, double jitter)
    : inputs_(std::move(inputs)), n_(static_cast<int>(inputs_.size())), dim_(dim), dof_(dof) {
    if (dim_ <= 0 || dof_ <= 0) throw ShapeError("latent prior: dim and dof must be positive");
    if (specs.size() != 1 && static_cast<int>(specs.size()) != dim_)
        throw ShapeError("latent prior: expected 1 or dim kernel specs, got " +
                         std::to_string(specs.size()));
    distinct_.reserve(specs.size());
    for (const KernelSpec& s : specs) distinct_.push_back(build_gram(s, inputs_, jitter));
}

const GramMatrix& LatentPrior::block(int dof_i, int dim_d) const {
    (void)dof_i;  // blocks never differ across dof
    return distinct_[shared_lengthscale() ? 0 : dim_d];
}

Eigen::Ref<const Eigen::VectorXd> LatentPrior::block_of(const Eigen::VectorXd& u, int dof_i,
                                                        int dim_d) const {
    return u.segment(static_cast<Eigen::Index>(flat_index(dof_i, dim_d, 0, n_, dim_)), n_);
}

double LatentPrior::log_density(const Eigen::VectorXd& u) const {
    if (u.size() != size()) throw ShapeError("latent prior log_density: length mismatch");
    double total = 0.0;
    for (int i = 0; i < dof_; ++i)
        for (int d = 0; d < dim_; ++d) total += block(i, d).log_density(block_of(u, i, d));
    return total;
}

Eigen::VectorXd LatentPrior::sample(Rng& rng) const {
    Eigen::VectorXd u(size());
    for (int i = 0; i < dof_; ++i)
        for (int d = 0; d < dim_; ++d)
            u.segment(static_cast<Eigen::Index>(flat_index(i, d, 0, n_, dim_)), n_) =
                block(i, d).sample(rng);
    return u;
}

}  // namespace gwp
