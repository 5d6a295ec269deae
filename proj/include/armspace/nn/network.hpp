#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "armspace/errors.hpp"
#include "armspace/rng.hpp"
#include "armspace/types.hpp"

namespace armspace::nn {

enum class Mode { train, infer };

/// One named, flat view of a parameter tensor and its gradient.
struct ParamSlot {
    std::string name;
    double* value;
    double* grad;
    Eigen::Index size;
};

inline Matrix glorot_uniform(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w.data()[i] = rng.uniform(-limit, limit);
    return w;
}

struct DenseLayer {
    Matrix w;  // in x out
    Vector b;
    Matrix w_grad;
    Vector b_grad;
    Matrix input;

    DenseLayer(int in, int out, Rng& rng)
        : w(glorot_uniform(in, out, rng)),
          b(Vector::Zero(out)),
          w_grad(Matrix::Zero(in, out)),
          b_grad(Vector::Zero(out)) {}

    int in_width() const { return static_cast<int>(w.rows()); }
    int out_width() const { return static_cast<int>(w.cols()); }

    Matrix forward(const Matrix& x, Mode mode) {
        if (mode == Mode::train) input = x;
        Matrix y = x * w;
        y.rowwise() += b.transpose();
        return y;
    }

    Matrix backward(const Matrix& dy) {
        w_grad = input.transpose() * dy;
        b_grad = dy.colwise().sum();
        return dy * w.transpose();
    }
};

/// Parametric ReLU with one learnable slope per unit, initialized to 0.25.
struct PReLULayer {
    Vector a;
    Vector a_grad;
    Matrix input;

    explicit PReLULayer(int width, double slope = 0.25)
        : a(Vector::Constant(width, slope)), a_grad(Vector::Zero(width)) {}

    Matrix forward(const Matrix& x, Mode mode) {
        if (mode == Mode::train) input = x;
        Matrix y = x;
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            for (Eigen::Index c = 0; c < y.cols(); ++c)
                if (y(r, c) < 0.0) y(r, c) *= a[c];
        return y;
    }

    Matrix backward(const Matrix& dy) {
        a_grad.setZero();
        Matrix dx = dy;
        for (Eigen::Index r = 0; r < dx.rows(); ++r)
            for (Eigen::Index c = 0; c < dx.cols(); ++c)
                if (input(r, c) < 0.0) {
                    a_grad[c] += dy(r, c) * input(r, c);
                    dx(r, c) *= a[c];
                }
        return dx;
    }
};

struct BatchNormLayer {
    double momentum = 0.99;
    double eps = 1e-3;
    Vector gamma, beta;
    Vector gamma_grad, beta_grad;
    Vector run_mean, run_var;
    // caches from the last forward
    Matrix xhat;
    Vector inv_std;
    Mode last_mode = Mode::infer;

    BatchNormLayer(int width, double momentum_, double eps_)
        : momentum(momentum_),
          eps(eps_),
          gamma(Vector::Ones(width)),
          beta(Vector::Zero(width)),
          gamma_grad(Vector::Zero(width)),
          beta_grad(Vector::Zero(width)),
          run_mean(Vector::Zero(width)),
          run_var(Vector::Ones(width)) {}

    Matrix forward(const Matrix& x, Mode mode) {
        last_mode = mode;
        if (mode == Mode::train) {
            const Vector mean = x.colwise().mean();
            const Matrix centered = x.rowwise() - mean.transpose();
            const Vector var = centered.array().square().colwise().mean();
            inv_std = (var.array() + eps).rsqrt();
            xhat = (centered.array().rowwise() * inv_std.transpose().array()).matrix();
            run_mean = momentum * run_mean + (1.0 - momentum) * mean;
            run_var = momentum * run_var + (1.0 - momentum) * var;
        } else {
            inv_std = (run_var.array() + eps).rsqrt();
            xhat = ((x.rowwise() - run_mean.transpose()).array().rowwise() *
                    inv_std.transpose().array())
                       .matrix();
        }
        Matrix y = (xhat.array().rowwise() * gamma.transpose().array()).matrix();
        y.rowwise() += beta.transpose();
        return y;
    }

    Matrix backward(const Matrix& dy) {
        gamma_grad = (dy.array() * xhat.array()).colwise().sum();
        beta_grad = dy.colwise().sum();
        const Matrix dxhat = (dy.array().rowwise() * gamma.transpose().array()).matrix();
        if (last_mode == Mode::infer) {
            // inference normalization is a fixed affine map
            return (dxhat.array().rowwise() * inv_std.transpose().array()).matrix();
        }
        const double n = static_cast<double>(dy.rows());
        const Vector sum_dxhat = dxhat.colwise().sum();
        const Vector sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum();
        Matrix dx = n * dxhat;
        dx.rowwise() -= sum_dxhat.transpose();
        dx -= (xhat.array().rowwise() * sum_dxhat_xhat.transpose().array()).matrix();
        dx = (dx.array().rowwise() * (inv_std / n).transpose().array()).matrix();
        return dx;
    }
};

/// Inverted dropout: train mode zeroes units with probability rate and
/// scales survivors by 1/(1-rate); inference is the identity. The mask is
/// cached so backward replays exactly what forward applied.
struct DropoutLayer {
    double rate = 0.5;
    Matrix mask;

    explicit DropoutLayer(double rate_) : rate(rate_) {
        if (!(rate >= 0.0 && rate < 1.0)) throw BadPlan("dropout rate must be in [0, 1)");
    }

    Matrix forward(const Matrix& x, Mode mode, Rng& rng) {
        if (mode == Mode::infer || rate == 0.0) return x;
        const double keep = 1.0 - rate;
        mask.resize(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < mask.size(); ++i)
            mask.data()[i] = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
        return x.cwiseProduct(mask);
    }

    Matrix backward(const Matrix& dy) { return dy.cwiseProduct(mask); }
};

struct SigmoidLayer {
    Matrix output;

    Matrix forward(const Matrix& x, Mode mode) {
        Matrix y = (1.0 / (1.0 + (-x.array()).exp())).matrix();
        if (mode == Mode::train) output = y;
        return y;
    }

    Matrix backward(const Matrix& dy) {
        return dy.array() * output.array() * (1.0 - output.array());
    }
};

using Layer = std::variant<DenseLayer, PReLULayer, BatchNormLayer, DropoutLayer, SigmoidLayer>;

/// A plain feed-forward stack. Layers are appended through the add_*
/// helpers which track the running width.
struct Network {
    int input_width = 0;
    int current_width = 0;
    std::vector<Layer> layers;

    explicit Network(int input_width_ = 0)
        : input_width(input_width_), current_width(input_width_) {}

    Matrix forward(const Matrix& x, Mode mode, Rng& rng) {
        if (x.cols() != input_width)
            throw ShapeMismatch("batch width " + std::to_string(x.cols()) +
                                " != network input " + std::to_string(input_width));
        Matrix h = x;
        for (auto& layer : layers) {
            std::visit(
                [&](auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, DropoutLayer>)
                        h = l.forward(h, mode, rng);
                    else
                        h = l.forward(h, mode);
                },
                layer);
        }
        return h;
    }

    Matrix infer(const Matrix& x) {
        Rng dummy(0);
        return forward(x, Mode::infer, dummy);
    }

    /// Propagates the loss gradient; parameter gradients land in each layer.
    Matrix backward(const Matrix& dy) {
        Matrix g = dy;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it)
            std::visit([&](auto& l) { g = l.backward(g); }, *it);
        return g;
    }

    std::vector<ParamSlot> param_slots() {
        std::vector<ParamSlot> slots;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const std::string prefix = "L" + std::to_string(i) + ".";
            if (auto* d = std::get_if<DenseLayer>(&layers[i])) {
                slots.push_back({prefix + "W", d->w.data(), d->w_grad.data(), d->w.size()});
                slots.push_back({prefix + "b", d->b.data(), d->b_grad.data(), d->b.size()});
            } else if (auto* p = std::get_if<PReLULayer>(&layers[i])) {
                slots.push_back({prefix + "a", p->a.data(), p->a_grad.data(), p->a.size()});
            } else if (auto* bn = std::get_if<BatchNormLayer>(&layers[i])) {
                slots.push_back(
                    {prefix + "gamma", bn->gamma.data(), bn->gamma_grad.data(), bn->gamma.size()});
                slots.push_back(
                    {prefix + "beta", bn->beta.data(), bn->beta_grad.data(), bn->beta.size()});
            }
        }
        return slots;
    }

    void zero_grad() {
        for (auto slot : param_slots())
            for (Eigen::Index i = 0; i < slot.size; ++i) slot.grad[i] = 0.0;
    }

    Eigen::Index param_count() {
        Eigen::Index n = 0;
        for (const auto& slot : param_slots()) n += slot.size;
        return n;
    }

    int output_width() const { return current_width; }

    /// FNV-1a over parameters and batch-norm running statistics; detects any
    /// bitwise change of network state.
    std::uint64_t checksum() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](const double* data, Eigen::Index n) {
            const auto* bytes = reinterpret_cast<const unsigned char*>(data);
            for (Eigen::Index i = 0; i < n * static_cast<Eigen::Index>(sizeof(double)); ++i) {
                h ^= bytes[i];
                h *= 1099511628211ULL;
            }
        };
        for (const auto& layer : layers) {
            if (const auto* d = std::get_if<DenseLayer>(&layer)) {
                mix(d->w.data(), d->w.size());
                mix(d->b.data(), d->b.size());
            } else if (const auto* p = std::get_if<PReLULayer>(&layer)) {
                mix(p->a.data(), p->a.size());
            } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
                mix(bn->gamma.data(), bn->gamma.size());
                mix(bn->beta.data(), bn->beta.size());
                mix(bn->run_mean.data(), bn->run_mean.size());
                mix(bn->run_var.data(), bn->run_var.size());
            }
        }
        return h;
    }
};

inline void add_dense(Network& net, int out, Rng& rng) {
    if (out < 1) throw BadPlan("dense width must be positive");
    net.layers.emplace_back(DenseLayer(net.current_width, out, rng));
    net.current_width = out;
}

inline void add_prelu(Network& net, double slope = 0.25) {
    net.layers.emplace_back(PReLULayer(net.current_width, slope));
}

inline void add_batchnorm(Network& net, double momentum = 0.99, double eps = 1e-3) {
    if (!(eps > 0.0)) throw BadPlan("batchnorm eps must be positive");
    net.layers.emplace_back(BatchNormLayer(net.current_width, momentum, eps));
}

inline void add_dropout(Network& net, double rate) {
    net.layers.emplace_back(DropoutLayer(rate));
}

inline void add_sigmoid(Network& net) { net.layers.emplace_back(SigmoidLayer()); }

}  // namespace armspace::nn
