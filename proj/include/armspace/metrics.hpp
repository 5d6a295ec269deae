#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "armspace/errors.hpp"
#include "armspace/types.hpp"

namespace armspace {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
};

struct ClassificationMetrics {
    ConfusionCounts counts;
    double jsc = 0.0;      // sample-matching similarity: fraction of exact agreements
    double jsc_set = 0.0;  // set-theoretic Jaccard: tp / (tp + fp + fn)
    double zero_one = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double mcc = 0.0;
    bool degenerate = false;  // an MCC denominator term vanished
};

/// Thresholds the scores and derives the confusion-based metrics. The
/// sample-matching JSC satisfies jsc + zero_one = 1 exactly.
inline ClassificationMetrics classification_metrics(const Vector& y, const Vector& scores,
                                                    double threshold) {
    if (y.size() != scores.size()) throw ShapeMismatch("label/score length mismatch");
    if (y.size() < 1) throw DomainError("need at least one sample");

    ClassificationMetrics m;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const bool truth = y[i] >= 0.5;
        const bool pred = scores[i] >= threshold;
        if (truth && pred)
            ++m.counts.tp;
        else if (!truth && pred)
            ++m.counts.fp;
        else if (truth && !pred)
            ++m.counts.fn;
        else
            ++m.counts.tn;
    }
    const auto& c = m.counts;
    const double n = static_cast<double>(c.total());
    m.jsc = static_cast<double>(c.tp + c.tn) / n;
    m.zero_one = 1.0 - m.jsc;
    m.jsc_set =
        (c.tp + c.fp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn) : 1.0;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;

    const double denom = static_cast<double>(c.tp + c.fp) * static_cast<double>(c.tp + c.fn) *
                         static_cast<double>(c.tn + c.fp) * static_cast<double>(c.tn + c.fn);
    if (denom > 0.0) {
        m.mcc = (static_cast<double>(c.tp) * static_cast<double>(c.tn) -
                 static_cast<double>(c.fp) * static_cast<double>(c.fn)) /
                std::sqrt(denom);
    } else {
        m.mcc = 0.0;
        m.degenerate = true;
    }
    return m;
}

struct RegressionMetrics {
    double mae = 0.0;
    double mse = 0.0;
    double evs = 0.0;  // explained variance, 1 - Var(y - yhat) / Var(y)
    double r2 = 0.0;
    bool zero_variance = false;
};

/// Column-wise metrics, uniformly averaged over target columns. Columns
/// whose spread is at numerical-noise level (constant targets) set the
/// zero_variance flag and are excluded from the variance-based averages.
inline RegressionMetrics regression_metrics(const Matrix& y, const Matrix& yhat) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
        throw ShapeMismatch("regression shapes differ");
    if (y.rows() < 1) throw DomainError("need at least one sample");

    RegressionMetrics m;
    const double cols = static_cast<double>(y.cols());
    double varying = 0.0;
    double evs_sum = 0.0, r2_sum = 0.0;
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        const Vector residual = y.col(c) - yhat.col(c);
        m.mae += residual.cwiseAbs().mean() / cols;
        m.mse += residual.squaredNorm() / static_cast<double>(y.rows()) / cols;

        const double y_mean = y.col(c).mean();
        const double y_var = (y.col(c).array() - y_mean).square().mean();
        const double floor = 1e-12 * std::max(1.0, std::abs(y_mean));
        if (std::sqrt(y_var) <= floor) {
            m.zero_variance = true;
            continue;
        }
        varying += 1.0;
        const double res_mean = residual.mean();
        const double res_var = (residual.array() - res_mean).square().mean();
        evs_sum += 1.0 - res_var / y_var;
        r2_sum += 1.0 - residual.squaredNorm() / ((y.col(c).array() - y_mean).square().sum());
    }
    if (varying > 0.0) {
        m.evs = evs_sum / varying;
        m.r2 = r2_sum / varying;
    } else {
        m.zero_variance = true;
    }
    return m;
}

/// Median-of-means wall time per sample; one untimed warm-up pass.
inline double time_method(const std::function<void()>& f, std::int64_t samples_per_call,
                          int repetitions) {
    if (repetitions < 3) throw DomainError("need at least 3 repetitions");
    if (samples_per_call < 1) throw DomainError("samples_per_call must be >= 1");
    f();  // warm-up
    std::vector<double> per_sample(static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        f();
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        per_sample[static_cast<std::size_t>(r)] =
            elapsed.count() / static_cast<double>(samples_per_call);
    }
    std::sort(per_sample.begin(), per_sample.end());
    const std::size_t mid = per_sample.size() / 2;
    if (per_sample.size() % 2 == 1) return per_sample[mid];
    return 0.5 * (per_sample[mid - 1] + per_sample[mid]);
}

enum class BaselineKind { linear, ridge, logistic };

struct BaselineOptions {
    double ridge_alpha = 0.5;
    int logistic_iters = 500;
    double logistic_lr = 0.5;
};

namespace detail_baselines {

inline Matrix with_intercept(const Matrix& x) {
    Matrix out(x.rows(), x.cols() + 1);
    out.leftCols(x.cols()) = x;
    out.col(x.cols()).setOnes();
    return out;
}

}  // namespace detail_baselines

/// Closed-form linear least squares (QR). SingularSystem on rank-deficient
/// designs; ridge regularizes instead.
inline Matrix baseline_linear(const Matrix& x_train, const Matrix& y_train,
                              const Matrix& x_test) {
    const Matrix a = detail_baselines::with_intercept(x_train);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols())
        throw SingularSystem("design matrix is rank-deficient; use ridge instead");
    const Eigen::MatrixXd beta = qr.solve(Eigen::MatrixXd(y_train));
    return detail_baselines::with_intercept(x_test) * beta;
}

/// Ridge regression with an unpenalized intercept (data centered first).
inline Matrix baseline_ridge(const Matrix& x_train, const Matrix& y_train, const Matrix& x_test,
                             double alpha) {
    if (!(alpha > 0.0)) throw DomainError("ridge alpha must be positive");
    const Eigen::RowVectorXd x_mean = x_train.colwise().mean();
    const Eigen::RowVectorXd y_mean = y_train.colwise().mean();
    const Matrix xc = x_train.rowwise() - x_mean;
    const Matrix yc = y_train.rowwise() - y_mean;
    Eigen::MatrixXd normal = xc.transpose() * xc;
    normal.diagonal().array() += alpha;
    const Eigen::MatrixXd beta = normal.ldlt().solve(Eigen::MatrixXd(xc.transpose() * yc));
    Matrix pred = (x_test.rowwise() - x_mean) * beta;
    pred.rowwise() += y_mean;
    return pred;
}

/// Gradient-descent logistic regression with a fixed budget; features are
/// standardized internally with training statistics. Returns probabilities.
inline Vector baseline_logistic(const Matrix& x_train, const Vector& y_train,
                                const Matrix& x_test, const BaselineOptions& opts = {}) {
    const Eigen::RowVectorXd mean = x_train.colwise().mean();
    Eigen::RowVectorXd sd =
        ((x_train.rowwise() - mean).array().square().colwise().mean()).sqrt();
    for (Eigen::Index c = 0; c < sd.size(); ++c)
        if (sd[c] < 1e-12) sd[c] = 1.0;

    const Matrix xs = (x_train.rowwise() - mean).array().rowwise() / sd.array();
    Vector w = Vector::Zero(xs.cols());
    double b = 0.0;
    const double n = static_cast<double>(xs.rows());
    for (int it = 0; it < opts.logistic_iters; ++it) {
        const Vector z = xs * w + Vector::Constant(xs.rows(), b);
        const Vector p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
        const Vector err = p - y_train;
        w -= opts.logistic_lr * (xs.transpose() * err) / n;
        b -= opts.logistic_lr * err.sum() / n;
    }
    const Matrix xt = (x_test.rowwise() - mean).array().rowwise() / sd.array();
    const Vector z = xt * w + Vector::Constant(xt.rows(), b);
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

/// Dispatcher mirroring the benchmark table rows.
inline Matrix baseline_fit_predict(BaselineKind kind, const Matrix& x_train,
                                   const Matrix& y_train, const Matrix& x_test,
                                   const BaselineOptions& opts = {}) {
    switch (kind) {
        case BaselineKind::linear: return baseline_linear(x_train, y_train, x_test);
        case BaselineKind::ridge:
            return baseline_ridge(x_train, y_train, x_test, opts.ridge_alpha);
        case BaselineKind::logistic: {
            if (y_train.cols() != 1) throw ShapeMismatch("logistic needs a single label column");
            return baseline_logistic(x_train, y_train.col(0), x_test, opts);
        }
    }
    throw UnknownAlgo("bad baseline kind");
}

}  // namespace armspace
