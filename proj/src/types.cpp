#include "gwp/types.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace gwp {

std::vector<Input> scalar_inputs(const std::vector<double>& times) {
    std::vector<Input> out;
    out.reserve(times.size());
    for (double t : times) {
        Input z(1);
        z << t;
        out.push_back(z);
    }
    return out;
}

std::vector<Input> regular_grid(double start, double step, int n) {
    std::vector<Input> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Input z(1);
        z << start + step * i;
        out.push_back(z);
    }
    return out;
}

void ObservationSet::validate() const {
    if (static_cast<int>(inputs.size()) != size())
        throw ShapeError("observation set: " + std::to_string(inputs.size()) + " inputs for " +
                         std::to_string(size()) + " rows");
    for (size_t i = 1; i < inputs.size(); ++i)
        if (inputs[i].size() != inputs[0].size())
            throw ShapeError("observation set: inputs of mixed dimension");
    if (!x.allFinite()) throw ShapeError("observation set: non-finite value");
}

ObservationSet ObservationSet::head(int n) const { return segment(0, n); }

ObservationSet ObservationSet::segment(int start, int n) const {
    if (start < 0 || n < 0 || start + n > size())
        throw ShapeError("observation segment out of range");
    ObservationSet out;
    out.inputs.assign(inputs.begin() + start, inputs.begin() + start + n);
    out.x = x.middleRows(start, n);
    return out;
}

void CovariancePath::validate(double sym_tol, double eig_floor) const {
    if (inputs.size() != matrices.size())
        throw ShapeError("covariance path: input/matrix count mismatch");
    const int d = dim();
    for (size_t n = 0; n < matrices.size(); ++n) {
        const Eigen::MatrixXd& m = matrices[n];
        if (m.rows() != d || m.cols() != d)
            throw ShapeError("covariance path: matrix " + std::to_string(n) + " has shape " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol)
            throw ShapeError("covariance path: matrix " + std::to_string(n) + " not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < eig_floor)
            throw NotPositiveDefiniteError("covariance path: matrix " + std::to_string(n) +
                                           " has eigenvalue " +
                                           std::to_string(es.eigenvalues().minCoeff()));
    }
}

CovariancePath CovariancePath::segment(int start, int n) const {
    if (start < 0 || n < 0 || start + n > size())
        throw ShapeError("covariance path segment out of range");
    CovariancePath out;
    out.inputs.assign(inputs.begin() + start, inputs.begin() + start + n);
    out.matrices.assign(matrices.begin() + start, matrices.begin() + start + n);
    return out;
}

int vech_size(int dim) { return dim * (dim + 1) / 2; }

std::vector<std::pair<int, int>> vech_index_pairs(int dim) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(vech_size(dim));
    for (int j = 0; j < dim; ++j)
        for (int i = j; i < dim; ++i) pairs.emplace_back(i, j);
    return pairs;
}

Eigen::VectorXd vech(const Eigen::MatrixXd& m) {
    const int d = static_cast<int>(m.rows());
    if (m.cols() != d) throw ShapeError("vech: matrix not square");
    Eigen::VectorXd v(vech_size(d));
    int k = 0;
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) v[k++] = m(i, j);
    return v;
}

Eigen::MatrixXd unvech(const Eigen::VectorXd& v) {
    // d(d+1)/2 = len  =>  d = (sqrt(8 len + 1) - 1) / 2
    const int len = static_cast<int>(v.size());
    const int d = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
    if (vech_size(d) != len) throw ShapeError("unvech: length " + std::to_string(len) +
                                              " is not triangular");
    Eigen::MatrixXd m(d, d);
    int k = 0;
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) {
            m(i, j) = v[k];
            m(j, i) = v[k];
            ++k;
        }
    return m;
}

bool same_inputs(const std::vector<Input>& a, const std::vector<Input>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        if ((a[i] - b[i]).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

}  // namespace gwp
