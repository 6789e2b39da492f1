#include "gwp/metrics.hpp"

#include "gwp/inference.hpp"

namespace gwp {

double path_mse(const CovariancePath& predicted, const CovariancePath& reference) {
    if (predicted.size() != reference.size())
        throw ShapeError("mse: path lengths " + std::to_string(predicted.size()) + " and " +
                         std::to_string(reference.size()));
    if (predicted.size() == 0) throw ShapeError("mse: empty paths");
    if (predicted.dim() != reference.dim()) throw ShapeError("mse: path dimensions differ");
    if (!same_inputs(predicted.inputs, reference.inputs))
        throw ShapeError("mse: paths evaluated at different inputs");
    const double d2 = static_cast<double>(predicted.dim()) * predicted.dim();
    double total = 0.0;
    for (int n = 0; n < predicted.size(); ++n)
        total += (predicted.matrices[n] - reference.matrices[n]).squaredNorm() / d2;
    return total / predicted.size();
}

double forecast_log_likelihood(const CovariancePath& predicted, const ObservationSet& obs) {
    obs.validate();
    if (predicted.size() != obs.size() || predicted.dim() != obs.dim())
        throw ShapeError("forecast loglik: path and observations misaligned");
    if (!same_inputs(predicted.inputs, obs.inputs))
        throw ShapeError("forecast loglik: inputs differ");
    double total = 0.0;
    for (int n = 0; n < obs.size(); ++n)
        total += gaussian_log_density(obs.x.row(n).transpose(), predicted.matrices[n]);
    return total;
}

}  // namespace gwp
