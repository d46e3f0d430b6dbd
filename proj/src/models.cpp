#include "fate/models.hpp"

#include <cmath>

#include "fate/error.hpp"

namespace fate {

Matrix design_matrix(const StudyDataset& d, std::span<const std::size_t> rows) {
    Matrix m(rows.size(), d.p() + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m(r, 0) = 1.0;
        for (std::size_t j = 0; j < d.p(); ++j) m(r, j + 1) = d.x(rows[r], j);
    }
    return m;
}

Matrix covariate_matrix(const StudyDataset& d, std::span<const std::size_t> rows) {
    Matrix m(rows.size(), d.p());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < d.p(); ++j) m(r, j) = d.x(rows[r], j);
    return m;
}

namespace {

double linear_predictor(const Vector& b, std::span<const double> x) {
    double eta = b[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += b[static_cast<Eigen::Index>(j + 1)] * x[j];
    return eta;
}

}  // namespace

double LinearModelFit::predict(std::span<const double> x) const { return linear_predictor(coefficients, x); }

LinearModelFit fit_linear(const Matrix& design, const Vector& targets) {
    if (design.rows() < design.cols())
        throw InsufficientDataError("linear fit needs at least " + std::to_string(design.cols()) + " rows, got " +
                                    std::to_string(design.rows()));
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
    return {cod.solve(targets)};
}

double LogisticModelFit::predict(std::span<const double> x) const {
    return expit(linear_predictor(coefficients, x));
}

Vector logistic_score(const Matrix& design, const Vector& labels, const Vector& coefficients) {
    const Vector eta = design * coefficients;
    const Vector p = eta.unaryExpr([](double t) { return expit(t); });
    return design.transpose() * (labels - p);
}

double logistic_loglik(const Matrix& design, const Vector& labels, const Vector& coefficients) {
    const Vector eta = design * coefficients;
    double ll = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double t = eta[i];
        // log(1 + e^t) without overflow
        const double softplus = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        ll += labels[i] * t - softplus;
    }
    return ll;
}

LogisticModelFit fit_logistic(const Matrix& design, const Vector& labels, double tol, int max_iter,
                              double coef_guard) {
    const double total = labels.sum();
    if (total <= 0.0 || total >= static_cast<double>(labels.size()))
        throw DegenerateLabelsError("logistic fit needs both classes in the labels");

    LogisticModelFit fit;
    Vector beta = Vector::Zero(design.cols());
    double ll = logistic_loglik(design, labels, beta);
    for (int it = 0; it < max_iter; ++it) {
        const Vector eta = design * beta;
        Vector p(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            p[i] = expit(eta[i]);
            w[i] = std::max(p[i] * (1.0 - p[i]), 1e-12);
        }
        const Vector score = design.transpose() * (labels - p);
        fit.iterations = it;
        if (score.cwiseAbs().maxCoeff() < tol) {
            fit.converged = true;
            break;
        }
        const Matrix info = design.transpose() * w.asDiagonal() * design;
        Vector step = info.ldlt().solve(score);
        if (!step.allFinite()) step = Eigen::CompleteOrthogonalDecomposition<Matrix>(info).solve(score);

        Vector next = beta + step;
        double next_ll = logistic_loglik(design, labels, next);
        for (int h = 0; h < 30 && !(next_ll >= ll - 1e-12 * std::abs(ll)); ++h) {
            step *= 0.5;
            next = beta + step;
            next_ll = logistic_loglik(design, labels, next);
        }
        fit.iterations = it + 1;
        if (next_ll >= ll) {
            beta = next;
            ll = next_ll;
        } else {
            break;  // no ascent direction left; beta is the best iterate
        }
        if (beta.cwiseAbs().maxCoeff() > coef_guard) {
            fit.separation = true;
            break;
        }
    }
    if (!fit.converged && !fit.separation) {
        fit.converged = logistic_score(design, labels, beta).cwiseAbs().maxCoeff() < tol;
    }
    fit.coefficients = beta;
    return fit;
}

}  // namespace fate
