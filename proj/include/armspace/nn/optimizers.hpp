#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "armspace/errors.hpp"
#include "armspace/nn/network.hpp"
#include "armspace/types.hpp"

namespace armspace::nn {

enum class OptAlgo { sgd, adam, nadam, adamax, rmsprop, adagrad, adadelta };

inline std::string optimizer_name(OptAlgo algo) {
    switch (algo) {
        case OptAlgo::sgd: return "sgd";
        case OptAlgo::adam: return "adam";
        case OptAlgo::nadam: return "nadam";
        case OptAlgo::adamax: return "adamax";
        case OptAlgo::rmsprop: return "rmsprop";
        case OptAlgo::adagrad: return "adagrad";
        case OptAlgo::adadelta: return "adadelta";
    }
    throw UnknownAlgo("bad optimizer enum");
}

inline OptAlgo optimizer_from_name(const std::string& name) {
    if (name == "sgd") return OptAlgo::sgd;
    if (name == "adam") return OptAlgo::adam;
    if (name == "nadam") return OptAlgo::nadam;
    if (name == "adamax") return OptAlgo::adamax;
    if (name == "rmsprop") return OptAlgo::rmsprop;
    if (name == "adagrad") return OptAlgo::adagrad;
    if (name == "adadelta") return OptAlgo::adadelta;
    throw UnknownAlgo("unknown optimizer: " + name);
}

struct OptimizerConfig {
    OptAlgo algo = OptAlgo::adam;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double rho = 0.9;  // rmsprop / adadelta decay

    static OptimizerConfig defaults(OptAlgo algo) {
        OptimizerConfig c;
        c.algo = algo;
        switch (algo) {
            case OptAlgo::sgd: c.lr = 0.01; break;
            case OptAlgo::adam:
            case OptAlgo::nadam:
            case OptAlgo::adamax:
            case OptAlgo::rmsprop: c.lr = 0.001; break;
            case OptAlgo::adagrad: c.lr = 0.01; break;
            case OptAlgo::adadelta:
                c.lr = 1.0;
                c.rho = 0.95;
                break;
        }
        return c;
    }

    void validate() const {
        if (!(lr > 0.0)) throw DomainError("learning rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("beta2 must be in [0, 1)");
        if (!(eps > 0.0)) throw DomainError("eps must be positive");
        if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must be in [0, 1)");
    }
};

/// Applies one update rule per step; state slots are zero-initialized on
/// first use and indexed by slot position.
struct Optimizer {
    OptimizerConfig config;
    std::int64_t t = 0;
    std::vector<Vector> m_state;  // first moment / squared-delta accumulator
    std::vector<Vector> v_state;  // second moment / max / gradient accumulator

    explicit Optimizer(const OptimizerConfig& cfg = {}) : config(cfg) { config.validate(); }

    void reset() {
        t = 0;
        m_state.clear();
        v_state.clear();
    }

    void step(const std::vector<ParamSlot>& slots) {
        ++t;
        if (m_state.size() < slots.size()) m_state.resize(slots.size());
        if (v_state.size() < slots.size()) v_state.resize(slots.size());
        for (std::size_t s = 0; s < slots.size(); ++s) {
            const ParamSlot& slot = slots[s];
            if (m_state[s].size() != slot.size) m_state[s] = Vector::Zero(slot.size);
            if (v_state[s].size() != slot.size) v_state[s] = Vector::Zero(slot.size);
            update_slot(slot, m_state[s], v_state[s]);
        }
    }

private:
    void update_slot(const ParamSlot& slot, Vector& m, Vector& v) {
        const OptimizerConfig& c = config;
        const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
        const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
        for (Eigen::Index i = 0; i < slot.size; ++i) {
            const double g = slot.grad[i];
            double& theta = slot.value[i];
            switch (c.algo) {
                case OptAlgo::sgd:
                    theta -= c.lr * g;
                    break;
                case OptAlgo::adam: {
                    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                    const double mhat = m[i] / bias1;
                    const double vhat = v[i] / bias2;
                    theta -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
                    break;
                }
                case OptAlgo::nadam: {
                    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                    const double mhat = m[i] / bias1;
                    const double vhat = v[i] / bias2;
                    const double nesterov = c.beta1 * mhat + (1.0 - c.beta1) * g / bias1;
                    theta -= c.lr * nesterov / (std::sqrt(vhat) + c.eps);
                    break;
                }
                case OptAlgo::adamax: {
                    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                    v[i] = std::max(c.beta2 * v[i], std::abs(g));
                    const double mhat = m[i] / bias1;
                    // v can only be zero when every gradient so far was zero,
                    // in which case mhat is zero too and the step is a no-op
                    if (v[i] > 0.0) theta -= c.lr * mhat / v[i];
                    break;
                }
                case OptAlgo::rmsprop:
                    v[i] = c.rho * v[i] + (1.0 - c.rho) * g * g;
                    theta -= c.lr * g / std::sqrt(v[i] + c.eps);
                    break;
                case OptAlgo::adagrad:
                    v[i] += g * g;
                    theta -= c.lr * g / (std::sqrt(v[i]) + c.eps);
                    break;
                case OptAlgo::adadelta: {
                    v[i] = c.rho * v[i] + (1.0 - c.rho) * g * g;
                    const double delta =
                        -std::sqrt(m[i] + c.eps) / std::sqrt(v[i] + c.eps) * g;
                    m[i] = c.rho * m[i] + (1.0 - c.rho) * delta * delta;
                    theta += c.lr * delta;
                    break;
                }
            }
        }
    }
};

}  // namespace armspace::nn
