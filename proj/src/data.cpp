#include "gwp/data.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gwp/rng.hpp"

namespace gwp {

namespace {

double phase(double t, double period) {
    // reduce before dividing so integer t gives bitwise-periodic phases
    double r = std::fmod(t, period);
    if (r < 0.0) r += period;
    return r / period;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    size_t pos = 0;
    while (pos <= line.size()) {
        size_t next = line.find(delim, pos);
        if (next == std::string::npos) next = line.size();
        cells.push_back(trim(line.substr(pos, next - pos)));
        pos = next + 1;
    }
    return cells;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void format_cell(char* buf, size_t len, double v) { std::snprintf(buf, len, "%.17g", v); }

}  // namespace

Eigen::MatrixXd periodic_covariance_at(const PeriodicPathParams& params, double t) {
    const double two_pi = 2.0 * M_PI;
    const double s1 = 1.0 + params.amp1 * std::sin(two_pi * phase(t, params.t1));
    const double s2 = 1.0 + params.amp2 * std::cos(two_pi * phase(t, params.t2));
    const double angle = params.angle_amp * std::sin(two_pi * phase(t, params.t3));
    const double c = std::cos(angle), s = std::sin(angle);
    Eigen::MatrixXd r(2, 2);
    r << c, -s, s, c;
    Eigen::MatrixXd diag = Eigen::Vector2d(s1, s2).asDiagonal();
    Eigen::MatrixXd sigma = r * diag * r.transpose();
    return 0.5 * (sigma + sigma.transpose());
}

CovariancePath generate_periodic_path(const PeriodicPathParams& params) {
    if (params.n_points <= 0) throw std::invalid_argument("periodic path: n_points must be positive");
    if (!(params.amp1 < 1.0 && params.amp2 < 1.0 && params.amp1 >= 0.0 && params.amp2 >= 0.0))
        throw std::invalid_argument("periodic path: amplitudes must lie in [0, 1)");
    if (!(params.t1 > 0.0 && params.t2 > 0.0 && params.t3 > 0.0))
        throw std::invalid_argument("periodic path: periods must be positive");
    CovariancePath path;
    path.inputs = regular_grid(params.t_start, params.dt, params.n_points);
    path.matrices.reserve(params.n_points);
    for (int n = 0; n < params.n_points; ++n)
        path.matrices.push_back(periodic_covariance_at(params, path.inputs[n][0]));
    return path;
}

CovariancePath rolling_moment_path(const ObservationSet& returns, int window) {
    returns.validate();
    if (window < 1) throw std::invalid_argument("rolling moment: window must be positive");
    if (returns.size() < window)
        throw InsufficientDataError("rolling moment: " + std::to_string(returns.size()) +
                                    " rows for window " + std::to_string(window));
    const int d = returns.dim();
    const int out_n = returns.size() - window + 1;
    CovariancePath path;
    path.inputs.assign(returns.inputs.begin() + window - 1, returns.inputs.end());
    path.matrices.assign(out_n, Eigen::MatrixXd::Zero(d, d));
#pragma omp parallel for schedule(static)
    for (int n = 0; n < out_n; ++n) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
        for (int k = 0; k < window; ++k) {
            const Eigen::VectorXd row = returns.x.row(n + k).transpose();
            acc.noalias() += row * row.transpose();
        }
        path.matrices[n] = acc / window;
    }
    return path;
}

ObservationSet simulate_returns(const CovariancePath& path, std::uint64_t seed) {
    const int n = path.size();
    const int d = path.dim();
    ObservationSet obs;
    obs.inputs = path.inputs;
    obs.x.resize(n, d);
    int bad = n;
#pragma omp parallel for schedule(static) reduction(min : bad)
    for (int t = 0; t < n; ++t) {
        Eigen::LLT<Eigen::MatrixXd> llt(path.matrices[t]);
        if (llt.info() != Eigen::Success) {
            bad = t;
            continue;
        }
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
        obs.x.row(t) = (Eigen::MatrixXd(llt.matrixL()) * normal_vector(rng, d)).transpose();
    }
    if (bad < n)
        throw NotPositiveDefiniteError("simulate: covariance " + std::to_string(bad) +
                                       " not positive definite");
    return obs;
}

CovariancePath realized_proxy(const ObservationSet& obs) {
    obs.validate();
    CovariancePath path;
    path.inputs = obs.inputs;
    path.matrices.reserve(obs.size());
    for (int t = 0; t < obs.size(); ++t) {
        const Eigen::VectorXd row = obs.x.row(t).transpose();
        path.matrices.push_back(row * row.transpose());
    }
    return path;
}

ObservationSet load_returns_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const std::vector<std::string> header = split_line(line, options.delimiter);
    if (header.empty()) throw ParseError(path + ": empty header");

    int time_col = -1;
    if (options.time_column == "auto") {
        const std::string first = lower(header[0]);
        if (first == "t" || first == "time" || first == "date" || first == "index") time_col = 0;
    } else if (options.time_column != "none") {
        for (size_t j = 0; j < header.size(); ++j)
            if (header[j] == options.time_column) time_col = static_cast<int>(j);
        if (time_col < 0)
            throw ParseError(path + ": time column '" + options.time_column + "' not found");
    }

    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_line(line, options.delimiter);
        if (cells.size() != header.size())
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        std::vector<double> row;
        for (size_t j = 0; j < cells.size(); ++j) {
            if (static_cast<int>(j) == time_col) {
                try {
                    size_t used = 0;
                    const double v = std::stod(cells[j], &used);
                    if (used != cells[j].size()) throw ParseError("");
                    times.push_back(v);
                } catch (const std::exception&) {
                    // non-numeric timestamps (dates) fall back to the row index
                    times.push_back(static_cast<double>(rows.size()));
                }
                continue;
            }
            try {
                size_t used = 0;
                row.push_back(std::stod(cells[j], &used));
                if (used != cells[j].size()) throw ParseError("");
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" +
                                 cells[j] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    if (time_col < 0)
        for (size_t i = 0; i < rows.size(); ++i) times.push_back(static_cast<double>(i));

    ObservationSet obs;
    obs.x.resize(rows.size(), rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) obs.x(i, j) = rows[i][j];

    if (options.prices_to_log_returns) {
        if (obs.x.rows() < 2) throw InsufficientDataError(path + ": need 2+ rows for returns");
        if ((obs.x.array() <= 0.0).any())
            throw ParseError(path + ": non-positive price with prices_to_log_returns");
        Eigen::MatrixXd lp = obs.x.array().log();
        obs.x = lp.bottomRows(lp.rows() - 1) - lp.topRows(lp.rows() - 1);
        times.erase(times.begin());
    }
    if (options.demean) {
        const Eigen::RowVectorXd mu = obs.x.colwise().mean();
        obs.x.rowwise() -= mu;
    }
    obs.inputs = scalar_inputs(times);
    obs.validate();
    return obs;
}

void save_returns_csv(const std::string& path, const ObservationSet& obs) {
    obs.validate();
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << "t";
    for (int j = 0; j < obs.dim(); ++j) out << ",x" << (j + 1);
    out << "\n";
    char buf[64];
    for (int i = 0; i < obs.size(); ++i) {
        format_cell(buf, sizeof(buf), obs.inputs[i][0]);
        out << buf;
        for (int j = 0; j < obs.dim(); ++j) {
            format_cell(buf, sizeof(buf), obs.x(i, j));
            out << "," << buf;
        }
        out << "\n";
    }
}

void save_path_csv(const std::string& path, const CovariancePath& cov_path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    const int d = cov_path.dim();
    out << "t";
    for (const auto& [i, j] : vech_index_pairs(d)) out << ",c" << (i + 1) << (j + 1);
    out << "\n";
    char buf[64];
    for (int n = 0; n < cov_path.size(); ++n) {
        format_cell(buf, sizeof(buf), cov_path.inputs[n][0]);
        out << buf;
        const Eigen::VectorXd v = vech(cov_path.matrices[n]);
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            format_cell(buf, sizeof(buf), v[k]);
            out << "," << buf;
        }
        out << "\n";
    }
}

CovariancePath load_path_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const std::vector<std::string> header = split_line(line, ',');
    if (header.empty() || lower(header[0]) != "t")
        throw ParseError(path + ": first column must be t");
    const int n_vech = static_cast<int>(header.size()) - 1;
    const int d = static_cast<int>(std::lround((std::sqrt(8.0 * n_vech + 1.0) - 1.0) / 2.0));
    if (vech_size(d) != n_vech)
        throw ParseError(path + ": " + std::to_string(n_vech) + " matrix columns is not a" +
                         " lower-triangle count");

    CovariancePath out;
    std::vector<double> times;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_line(line, ',');
        if (cells.size() != header.size())
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad cell count");
        Eigen::VectorXd v(n_vech);
        try {
            times.push_back(std::stod(cells[0]));
            for (int k = 0; k < n_vech; ++k) v[k] = std::stod(cells[k + 1]);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
        }
        out.matrices.push_back(unvech(v));
    }
    out.inputs = scalar_inputs(times);
    if (out.matrices.empty()) throw ParseError(path + ": no data rows");
    return out;
}

}  // namespace gwp
