#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "armspace/errors.hpp"
#include "armspace/types.hpp"

namespace armspace::nn {

enum class LossKind { bce, mse };

struct LossValue {
    double value = 0.0;
    Matrix grad;  // d(loss)/d(predictions)
};

inline void check_same_shape(const Matrix& y, const Matrix& yhat) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
        throw ShapeMismatch("targets " + std::to_string(y.rows()) + "x" +
                            std::to_string(y.cols()) + " vs predictions " +
                            std::to_string(yhat.rows()) + "x" + std::to_string(yhat.cols()));
}

/// Mean squared error over all elements.
inline LossValue loss_mse(const Matrix& y, const Matrix& yhat) {
    check_same_shape(y, yhat);
    const double n = static_cast<double>(y.size());
    LossValue out;
    const Matrix diff = yhat - y;
    out.value = diff.squaredNorm() / n;
    out.grad = (2.0 / n) * diff;
    return out;
}

/// Two-term binary cross entropy, summed over targets and averaged over the
/// batch. Predictions are clipped to [1e-12, 1 - 1e-12]; targets must be
/// exactly 0 or 1.
inline LossValue loss_bce(const Matrix& y, const Matrix& yhat) {
    check_same_shape(y, yhat);
    constexpr double clip = 1e-12;
    const double rows = static_cast<double>(y.rows());
    LossValue out;
    out.grad.resize(y.rows(), y.cols());
    double total = 0.0;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            const double t = y(r, c);
            if (t != 0.0 && t != 1.0)
                throw DomainError("binary cross entropy target outside {0,1}");
            const double p = std::clamp(yhat(r, c), clip, 1.0 - clip);
            total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
            out.grad(r, c) = (p - t) / (p * (1.0 - p)) / rows;
        }
    }
    out.value = total / rows;
    return out;
}

inline LossValue compute_loss(LossKind kind, const Matrix& y, const Matrix& yhat) {
    return kind == LossKind::bce ? loss_bce(y, yhat) : loss_mse(y, yhat);
}

}  // namespace armspace::nn
