#pragma once

// Linear support vector regression with epsilon-insensitive loss,
//
//     F(w, b) = 1/2 (||w||^2 + b^2) + C * sum_i max(0, |y_i - w.x_i - b| - eps),
//
// solved in the dual.  With z_i = (x_i, 1) and one dual variable per sample,
//
//     min_beta  1/2 beta^T Q beta - y^T beta + eps * ||beta||_1,
//     subject to |beta_i| <= C,  where Q_ij = z_i . z_j,
//
// and the primal solution is recovered as (w, b) = sum_i beta_i z_i.  Cyclic
// coordinate descent over beta solves each one-dimensional subproblem exactly
// (quadratic plus an |beta_i| term: a soft threshold, then a clip to the box),
// and because the non-smooth part is separable in beta the sweeps converge to
// the global optimum.  Fixed sweep order and no randomness: the same inputs
// give the same model on every platform and thread count.
//
// Folding the bias into the feature vector puts a b^2/2 term into the
// objective that the textbook formulation lacks.  The regressions this
// library runs are on standardized features with a centred target, where the
// optimal bias is near zero and the term is negligible; in exchange the dual
// loses its equality constraint and plain coordinate descent applies.

#include <cmath>
#include <cstddef>
#include <vector>

#include "netqual/errors.hpp"

namespace netqual {

struct SvrParams {
    double c = 1.0;
    double epsilon = 0.1;
    std::size_t max_epochs = 1000;
    double tol = 1e-10; // stop when no dual variable moved more than this in a sweep
};

struct SvrModel {
    std::vector<double> w;
    double b = 0.0;
    std::size_t epochs = 0;

    double predict(const std::vector<double>& x) const {
        double acc = b;
        for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * x[j];
        return acc;
    }
};

inline SvrModel svr_fit(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y, const SvrParams& params = {}) {
    if (x.empty()) throw InsufficientDataError("svr_fit: no training samples");
    if (x.size() != y.size())
        throw KeyMismatchError("svr_fit: feature rows and targets differ in length");
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    for (const auto& row : x)
        if (row.size() != d) throw KeyMismatchError("svr_fit: ragged feature matrix");
    if (!(params.c > 0.0) || !(params.epsilon >= 0.0))
        throw DomainValueError("svr_fit: require C > 0 and epsilon >= 0");

    // q_diag[i] = ||z_i||^2 with the implicit bias feature; >= 1 always.
    std::vector<double> q_diag(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (double v : x[i]) q_diag[i] += v * v;

    std::vector<double> beta(n, 0.0);
    std::vector<double> u(d + 1, 0.0); // running sum beta_i * z_i = (w, b)

    SvrModel model;
    for (model.epochs = 1; model.epochs <= params.max_epochs; ++model.epochs) {
        double max_move = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dot = u[d]; // u . z_i, bias feature is 1
            for (std::size_t j = 0; j < d; ++j) dot += u[j] * x[i][j];
            // Minimise 1/2 q t^2 + (g_i - y_i) t + eps |t| over t in [-C, C],
            // where g_i excludes the diagonal contribution of beta_i itself.
            const double v = y[i] - (dot - q_diag[i] * beta[i]);
            double t = 0.0;
            if (v > params.epsilon)
                t = (v - params.epsilon) / q_diag[i];
            else if (v < -params.epsilon)
                t = (v + params.epsilon) / q_diag[i];
            if (t > params.c) t = params.c;
            if (t < -params.c) t = -params.c;
            const double delta = t - beta[i];
            if (delta != 0.0) {
                for (std::size_t j = 0; j < d; ++j) u[j] += delta * x[i][j];
                u[d] += delta;
                beta[i] = t;
            }
            max_move = std::max(max_move, std::abs(delta));
        }
        if (max_move <= params.tol) break;
    }
    if (model.epochs > params.max_epochs) model.epochs = params.max_epochs;

    model.w.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(d));
    model.b = u[d];
    return model;
}

} // namespace netqual
