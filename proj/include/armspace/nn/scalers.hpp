#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "armspace/errors.hpp"
#include "armspace/types.hpp"

namespace armspace::nn {

enum class ScalerKind { standardize, minmax };

/// Per-column affine scaler. Statistics are fit on the training split only.
/// Columns with no spread are flagged degenerate and passed through
/// unchanged in both directions.
struct Scaler {
    ScalerKind kind = ScalerKind::standardize;
    double lo = -1.0;
    double hi = 1.0;
    Vector offset;  // mean (standardize) or column min (minmax)
    Vector spread;  // std or (max - min)
    std::vector<std::uint8_t> degenerate;
    bool fitted = false;

    static Scaler fit(ScalerKind kind, const Matrix& x, double lo = -1.0, double hi = 1.0) {
        if (x.rows() < 2) throw DomainError("scaler needs at least 2 rows");
        Scaler s;
        s.kind = kind;
        s.lo = lo;
        s.hi = hi;
        s.offset.resize(x.cols());
        s.spread.resize(x.cols());
        s.degenerate.assign(static_cast<std::size_t>(x.cols()), 0);
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (kind == ScalerKind::standardize) {
                const double mean = x.col(c).mean();
                const double var = (x.col(c).array() - mean).square().mean();
                s.offset[c] = mean;
                s.spread[c] = std::sqrt(var);
            } else {
                s.offset[c] = x.col(c).minCoeff();
                s.spread[c] = x.col(c).maxCoeff() - s.offset[c];
            }
            if (s.spread[c] < 1e-12) {
                s.degenerate[static_cast<std::size_t>(c)] = 1;
                s.spread[c] = 1.0;  // unused for degenerate columns
            }
        }
        s.fitted = true;
        return s;
    }

    bool has_degenerate() const {
        for (auto flag : degenerate)
            if (flag) return true;
        return false;
    }

    Matrix apply(const Matrix& x) const {
        check(x);
        Matrix y = x;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (degenerate[static_cast<std::size_t>(c)]) continue;
            if (kind == ScalerKind::standardize)
                y.col(c) = (x.col(c).array() - offset[c]) / spread[c];
            else
                y.col(c) = lo + (x.col(c).array() - offset[c]) * (hi - lo) / spread[c];
        }
        return y;
    }

    Matrix invert(const Matrix& y) const {
        check(y);
        Matrix x = y;
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            if (degenerate[static_cast<std::size_t>(c)]) continue;
            if (kind == ScalerKind::standardize)
                x.col(c) = y.col(c).array() * spread[c] + offset[c];
            else
                x.col(c) = (y.col(c).array() - lo) * spread[c] / (hi - lo) + offset[c];
        }
        return x;
    }

private:
    void check(const Matrix& x) const {
        if (!fitted) throw DomainError("scaler not fitted");
        if (x.cols() != offset.size()) throw ShapeMismatch("scaler column count mismatch");
    }
};

}  // namespace armspace::nn
