#pragma once

#include <vector>

#include "armspace/nn/losses.hpp"
#include "armspace/nn/network.hpp"

namespace armspace::nn {

struct GradCheckOptions {
    double step = 1e-6;
    std::uint64_t seed = 0;
    /// Reseed the dropout stream before every forward pass so all loss
    /// evaluations see the masks the analytic gradient was computed with.
    /// Disabling this is only useful as a negative control.
    bool replay_masks = true;
    /// Gradients whose analytic and FD magnitudes both fall below this are
    /// structural zeros (a bias feeding batch norm, say) where central
    /// differences measure only cancellation noise; they contribute 0.
    double zero_floor = 1e-8;
};

/// Central finite-difference check of the analytic gradient. Returns
/// max over parameters of |analytic - fd| / max(|analytic|, |fd|, 1e-12).
inline double grad_check(Network& net, const Matrix& x, const Matrix& y, LossKind kind,
                         GradCheckOptions options = {}) {
    Rng advancing(options.seed);
    auto forward_pass = [&]() -> Matrix {
        if (options.replay_masks) {
            Rng replay(options.seed);
            return net.forward(x, Mode::train, replay);
        }
        return net.forward(x, Mode::train, advancing);
    };

    const Matrix out = forward_pass();
    const LossValue loss = compute_loss(kind, y, out);
    net.backward(loss.grad);

    std::vector<ParamSlot> slots = net.param_slots();
    std::vector<Vector> analytic;
    analytic.reserve(slots.size());
    for (const auto& slot : slots)
        analytic.emplace_back(Eigen::Map<const Vector>(slot.grad, slot.size));

    double max_rel = 0.0;
    const double h = options.step;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        for (Eigen::Index i = 0; i < slots[s].size; ++i) {
            double& value = slots[s].value[i];
            const double saved = value;
            value = saved + h;
            const double plus = compute_loss(kind, y, forward_pass()).value;
            value = saved - h;
            const double minus = compute_loss(kind, y, forward_pass()).value;
            value = saved;
            const double fd = (plus - minus) / (2.0 * h);
            const double a = analytic[s][i];
            if (std::abs(a) < options.zero_floor && std::abs(fd) < options.zero_floor) continue;
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-12});
            max_rel = std::max(max_rel, std::abs(a - fd) / denom);
        }
    }
    return max_rel;
}

}  // namespace armspace::nn
