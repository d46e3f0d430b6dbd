#pragma once

#include <cstddef>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "fate/data_model.hpp"

namespace fate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rows of d as a design matrix with a leading column of ones.
Matrix design_matrix(const StudyDataset& d, std::span<const std::size_t> rows);
/// Rows of d as a plain covariate matrix (no intercept).
Matrix covariate_matrix(const StudyDataset& d, std::span<const std::size_t> rows);

struct LinearModelFit {
    Vector coefficients;  // intercept first

    double predict(std::span<const double> x) const;
};

/// Least squares through a complete orthogonal decomposition; rank-deficient
/// designs get the minimum-norm solution.
LinearModelFit fit_linear(const Matrix& design, const Vector& targets);

struct LogisticModelFit {
    Vector coefficients;
    bool converged = false;
    bool separation = false;  // stopped because some |coefficient| exceeded the guard
    int iterations = 0;

    double predict(std::span<const double> x) const;  // probability
};

/// Newton/IRLS with step halving. Returns the best iterate with
/// converged = false when max_iter is reached or the separation guard fires.
LogisticModelFit fit_logistic(const Matrix& design, const Vector& labels, double tol = 1e-8, int max_iter = 100,
                              double coef_guard = 30.0);

/// Gradient of the Bernoulli log-likelihood, X'(y - p).
Vector logistic_score(const Matrix& design, const Vector& labels, const Vector& coefficients);
double logistic_loglik(const Matrix& design, const Vector& labels, const Vector& coefficients);

inline double expit(double t) {
    return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace fate
