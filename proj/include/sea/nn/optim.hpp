#pragma once

#include <cmath>

#include "sea/errors.hpp"
#include "sea/geometry.hpp"
#include "sea/nn/model.hpp"

namespace sea::nn {

struct SgdConfig {
    double lr = 0.03;
    double momentum = 0.95;
    double weight_decay = 1e-4;
    bool nesterov = true;
};

// The update recurrence for one tensor:
//   g <- g + wd * p
//   v <- mu * v + g
//   p <- p - lr * (g + mu * v)     (nesterov)
//   p <- p - lr * v                (plain momentum)
template <class S>
void sgd_update_tensor(Tensor<S>& param, Tensor<S>& velocity, const Tensor<S>& grad,
                       const SgdConfig& cfg) {
    if (!grad.same_shape(param)) throw ValidationError("sgd_step: gradient shape mismatch");
    const S lr = static_cast<S>(cfg.lr);
    const S mu = static_cast<S>(cfg.momentum);
    const S wd = static_cast<S>(cfg.weight_decay);
    for (std::size_t k = 0; k < param.data.size(); ++k) {
        const S g = grad.data[k] + wd * param.data[k];
        const S v = mu * velocity.data[k] + g;
        velocity.data[k] = v;
        param.data[k] -= cfg.nesterov ? lr * (g + mu * v) : lr * v;
    }
}

// One SGD step over every online parameter. theta_hat is never touched here.
template <class S>
void sgd_step(EncoderState<S>& state, const StepContext<S>& ctx, const SgdConfig& cfg) {
    for (std::size_t i = 0; i < state.theta.params.size(); ++i) {
        auto& p = state.theta.params[i];
        sgd_update_tensor(p.value, p.velocity, ctx.grad(static_cast<std::int32_t>(i)), cfg);
    }
}

// theta_hat <- m * theta_hat + (1 - m) * theta, for the momentum encoder and
// momentum instance head only (those are the only tensors in theta_hat).
template <class S>
void ema_update(EncoderState<S>& state, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("ema_update: momentum must be in [0, 1]");
    const S mm = static_cast<S>(m);
    for (auto& hat : state.theta_hat.params) {
        const std::int32_t src = state.theta.find(hat.name);
        if (src < 0) throw ValidationError("ema_update: no online parameter named " + hat.name);
        const auto& online = state.theta.params[static_cast<std::size_t>(src)].value;
        for (std::size_t k = 0; k < hat.value.data.size(); ++k) {
            hat.value.data[k] = mm * hat.value.data[k] + (S{1} - mm) * online.data[k];
        }
    }
}

// Cosine annealing: lr(t) = 0.5 * lr0 * (1 + cos(pi * t / T)), t in [0, T].
inline double cosine_lr(std::int64_t t, std::int64_t total, double lr0) {
    if (total <= 0) throw ValidationError("cosine_lr: total iterations must be > 0");
    if (t < 0 || t > total) throw ValidationError("cosine_lr: iteration out of range");
    return 0.5 * lr0 * (1.0 + std::cos(kPi * static_cast<double>(t) / static_cast<double>(total)));
}

}  // namespace sea::nn
