#include "gwp/bekk.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gwp/inference.hpp"
#include "gwp/rng.hpp"

namespace gwp {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// free parameters: log-diagonal of C, strict lower triangle of C, then A and B row-major
int n_params(int d) { return d * (d + 1) / 2 + 2 * d * d; }

Eigen::VectorXd pack(const BekkParams& p) {
    const int d = p.dim();
    Eigen::VectorXd x(n_params(d));
    int k = 0;
    for (int i = 0; i < d; ++i) x[k++] = std::log(p.c(i, i));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j) x[k++] = p.c(i, j);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) x[k++] = p.a(i, j);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) x[k++] = p.b(i, j);
    return x;
}

BekkParams unpack(const Eigen::VectorXd& x, int d, const Eigen::MatrixXd& sigma0) {
    BekkParams p;
    p.c = Eigen::MatrixXd::Zero(d, d);
    p.a.resize(d, d);
    p.b.resize(d, d);
    p.sigma0 = sigma0;
    int k = 0;
    for (int i = 0; i < d; ++i) p.c(i, i) = std::exp(x[k++]);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j) p.c(i, j) = x[k++];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) p.a(i, j) = x[k++];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) p.b(i, j) = x[k++];
    return p;
}

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    long evaluations = 0;
    bool converged = false;
};

// standard simplex method: reflection 1, expansion 2, contraction 0.5, shrink 0.5
template <typename Fn>
NelderMeadResult nelder_mead(Fn&& f, const Eigen::VectorXd& start, double step,
                             int max_iterations, double tol) {
    const int n = static_cast<int>(start.size());
    std::vector<Eigen::VectorXd> xs(n + 1, start);
    std::vector<double> fs(n + 1);
    long evals = 0;
    for (int i = 1; i <= n; ++i) xs[i][i - 1] += step;
    for (int i = 0; i <= n; ++i) {
        fs[i] = f(xs[i]);
        ++evals;
    }

    auto order = [&] {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> xs2(n + 1);
        std::vector<double> fs2(n + 1);
        for (int i = 0; i <= n; ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };

    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        order();
        if (fs[n] - fs[0] < tol * (1.0 + std::abs(fs[0]))) {
            converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= n;

        Eigen::VectorXd xr = centroid + (centroid - xs[n]);
        double fr = f(xr);
        ++evals;
        if (fr < fs[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[n]);
            double fe = f(xe);
            ++evals;
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (xs[n] - centroid);
            double fc = f(xc);
            ++evals;
            if (fc < fs[n]) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]);
                    ++evals;
                }
            }
        }
    }
    order();
    return {xs[0], fs[0], evals, converged};
}

Eigen::MatrixXd empirical_moment(const ObservationSet& obs) {
    Eigen::MatrixXd m = (obs.x.transpose() * obs.x) / static_cast<double>(obs.size());
    m.diagonal().array() += 1e-10 * std::max(1.0, m.diagonal().maxCoeff());
    return m;
}

}  // namespace

void BekkParams::validate() const {
    const int d = dim();
    if (a.rows() != d || a.cols() != d || b.rows() != d || b.cols() != d ||
        c.cols() != d || sigma0.rows() != d || sigma0.cols() != d)
        throw ShapeError("bekk params: dimension mismatch");
    for (int i = 0; i < d; ++i) {
        if (!(c(i, i) > 0.0)) throw NotPositiveDefiniteError("bekk: C diagonal must be positive");
        for (int j = i + 1; j < d; ++j)
            if (c(i, j) != 0.0) throw ShapeError("bekk: C must be lower triangular");
    }
    if ((sigma0 - sigma0.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw ShapeError("bekk: sigma0 not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma0);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("bekk: sigma0 not positive definite");
}

double BekkParams::stationarity_radius() const {
    const Eigen::MatrixXd m = kron(a, a) + kron(b, b);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd BekkParams::unconditional_covariance() const {
    const int d = dim();
    if (stationarity_radius() >= 1.0)
        throw ConvergenceError("bekk: process not covariance stationary");
    const Eigen::MatrixXd at = a.transpose();
    const Eigen::MatrixXd bt = b.transpose();
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(d * d, d * d) - kron(at, at) - kron(bt, bt);
    const Eigen::MatrixXd cc = c * c.transpose();
    const Eigen::VectorXd vec_cc = Eigen::Map<const Eigen::VectorXd>(cc.data(), d * d);
    const Eigen::VectorXd vec_sigma = lhs.partialPivLu().solve(vec_cc);
    Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(vec_sigma.data(), d, d);
    return 0.5 * (sigma + sigma.transpose());
}

CovariancePath bekk_filter(const BekkParams& params, const ObservationSet& obs) {
    obs.validate();
    params.validate();
    if (params.dim() != obs.dim()) throw ShapeError("bekk filter: dimension mismatch");
    const int n = obs.size();
    const Eigen::MatrixXd cc = params.c * params.c.transpose();
    const Eigen::MatrixXd at = params.a.transpose();
    const Eigen::MatrixXd bt = params.b.transpose();

    CovariancePath path;
    path.inputs = obs.inputs;
    path.matrices.resize(n);
    Eigen::MatrixXd sigma = params.sigma0;
    path.matrices[0] = sigma;
    for (int t = 1; t < n; ++t) {
        const Eigen::VectorXd prev = obs.x.row(t - 1).transpose();
        sigma = cc + at * (prev * prev.transpose()) * params.a + bt * sigma * params.b;
        sigma = 0.5 * (sigma + sigma.transpose()).eval();
        path.matrices[t] = sigma;
    }
    return path;
}

double bekk_log_likelihood(const BekkParams& params, const ObservationSet& obs) {
    const CovariancePath path = bekk_filter(params, obs);
    double total = 0.0;
    for (int t = 0; t < obs.size(); ++t)
        total += gaussian_log_density(obs.x.row(t).transpose(), path.matrices[t]);
    return total;
}

std::pair<BekkParams, BekkFitReport> fit_bekk(const ObservationSet& obs,
                                              const BekkFitConfig& config) {
    obs.validate();
    const int d = obs.dim();
    const int n = obs.size();
    if (n < 10) throw InsufficientDataError("bekk fit: need at least 10 observations");
    if (config.restarts < 1) throw std::invalid_argument("bekk fit: restarts must be >= 1");

    const Eigen::MatrixXd moment = empirical_moment(obs);
    const Eigen::MatrixXd sigma0_emp = moment;

    auto objective = [&](const Eigen::VectorXd& x) -> double {
        if (x.cwiseAbs().maxCoeff() > 40.0) return 1e12;
        BekkParams p = unpack(x, d, sigma0_emp);
        const double radius = p.stationarity_radius();
        if (config.sigma0_mode == Sigma0Mode::Unconditional && radius < config.stationarity_limit)
            p.sigma0 = p.unconditional_covariance();
        double ll;
        try {
            ll = bekk_log_likelihood(p, obs);
        } catch (const std::exception&) {
            return 1e12;
        }
        if (!std::isfinite(ll)) return 1e12;
        const double excess = std::max(0.0, radius - config.stationarity_limit);
        return -ll + config.penalty_weight * excess * excess;
    };

    // restart 0: scaled empirical moment; others: seeded perturbations around it
    auto start_point = [&](int r) -> Eigen::VectorXd {
        Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(r));
        double a0 = 0.3, b0 = 0.8;
        if (r > 0) {
            a0 = 0.1 + 0.4 * rand_uniform(rng);
            b0 = 0.45 + 0.45 * rand_uniform(rng);
        }
        const double rem = std::max(1.0 - a0 * a0 - b0 * b0, 0.05);
        BekkParams p;
        p.a = a0 * Eigen::MatrixXd::Identity(d, d);
        p.b = b0 * Eigen::MatrixXd::Identity(d, d);
        if (r > 0) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    if (i != j) {
                        p.a(i, j) = 0.03 * rand_normal(rng);
                        p.b(i, j) = 0.03 * rand_normal(rng);
                    }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(rem * moment));
        p.c = llt.matrixL();
        p.sigma0 = sigma0_emp;
        return pack(p);
    };

    std::vector<NelderMeadResult> results(config.restarts);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < config.restarts; ++r)
        results[r] = nelder_mead(objective, start_point(r), 0.1, config.max_iterations,
                                 config.tol);

    int best = 0;
    for (int r = 1; r < config.restarts; ++r)
        if (results[r].value < results[best].value) best = r;

    BekkFitReport report;
    report.best_restart = best;
    for (const NelderMeadResult& res : results) {
        report.n_evaluations += res.evaluations;
        BekkParams p = unpack(res.x, d, sigma0_emp);
        double ll;
        try {
            ll = bekk_log_likelihood(p, obs);
        } catch (const std::exception&) {
            ll = -std::numeric_limits<double>::infinity();
        }
        report.restart_log_liks.push_back(ll);
    }

    BekkParams fitted = unpack(results[best].x, d, sigma0_emp);
    // sign convention: likelihood is invariant under A -> -A and B -> -B
    if (fitted.a(0, 0) < 0.0) fitted.a = -fitted.a;
    if (fitted.b(0, 0) < 0.0) fitted.b = -fitted.b;
    report.stationarity_radius = fitted.stationarity_radius();
    if (config.sigma0_mode == Sigma0Mode::Unconditional &&
        report.stationarity_radius < config.stationarity_limit)
        fitted.sigma0 = fitted.unconditional_covariance();
    report.log_lik = bekk_log_likelihood(fitted, obs);

    // constant-covariance floor: any useful fit must at least match it
    BekkParams flat;
    flat.c = Eigen::LLT<Eigen::MatrixXd>(moment).matrixL();
    flat.a = Eigen::MatrixXd::Zero(d, d);
    flat.b = Eigen::MatrixXd::Zero(d, d);
    flat.sigma0 = sigma0_emp;
    const double flat_ll = bekk_log_likelihood(flat, obs);
    if (report.log_lik < flat_ll - 1e-6)
        throw ConvergenceError("bekk fit: best restart log likelihood " +
                               std::to_string(report.log_lik) +
                               " below constant-covariance baseline " +
                               std::to_string(flat_ll));
    if (config.verbose)
        std::fprintf(stderr, "bekk fit: loglik %.4f radius %.4f evals %ld\n", report.log_lik,
                     report.stationarity_radius, report.n_evaluations);
    fitted.validate();
    return {fitted, report};
}

void save_bekk_params(const std::string& path, const BekkParams& params) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    const int d = params.dim();
    out << "dim," << d << "\n";
    char buf[64];
    auto write_mat = [&](const char* name, const Eigen::MatrixXd& m) {
        for (int i = 0; i < d; ++i) {
            out << name << "," << i;
            for (int j = 0; j < d; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
                out << "," << buf;
            }
            out << "\n";
        }
    };
    write_mat("c", params.c);
    write_mat("a", params.a);
    write_mat("b", params.b);
    write_mat("sigma0", params.sigma0);
}

BekkParams load_bekk_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("dim,", 0) != 0)
        throw ParseError(path + ": missing dim header");
    const int d = std::stoi(line.substr(4));
    if (d <= 0) throw ParseError(path + ": bad dimension");
    BekkParams p;
    p.c = p.a = p.b = p.sigma0 = Eigen::MatrixXd::Zero(d, d);
    auto mat_for = [&](const std::string& name) -> Eigen::MatrixXd& {
        if (name == "c") return p.c;
        if (name == "a") return p.a;
        if (name == "b") return p.b;
        if (name == "sigma0") return p.sigma0;
        throw ParseError(path + ": unknown matrix " + name);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            cells.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (cells.size() != static_cast<size_t>(d + 2))
            throw ParseError(path + ": bad row width in '" + line + "'");
        Eigen::MatrixXd& m = mat_for(cells[0]);
        try {
            const int i = std::stoi(cells[1]);
            if (i < 0 || i >= d) throw ParseError(path + ": row index out of range");
            for (int j = 0; j < d; ++j) m(i, j) = std::stod(cells[2 + j]);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(path + ": bad number in '" + line + "'");
        }
    }
    p.validate();
    return p;
}

}  // namespace gwp
