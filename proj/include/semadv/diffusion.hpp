#ifndef SEMADV_DIFFUSION_HPP
#define SEMADV_DIFFUSION_HPP

// Forward diffusion, the denoiser training objective, the ancestral sampling
// step and the deterministic sampler/inverter used by the attacks. Model is
// anything with forward(x_t, t) -> TensorT<T> of the same shape.

#include <cmath>
#include <stdexcept>

#include "semadv/schedule.hpp"
#include "semadv/tensor.hpp"

namespace semadv {

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) w
template <typename T>
TensorT<T> diffuse(TensorT<T> x0, int t, TensorT<T> w, const NoiseScheduleT<T>& sched) {
    sched.check_t(t);
    if (!same_shape(x0.shape(), w.shape()))
        throw std::invalid_argument("diffuse: noise shape mismatch " + shape_str(x0.shape()) + " vs " + shape_str(w.shape()));
    const T ab = sched.alpha_bar[t];
    return add(scalar_mul(x0, std::sqrt(ab)), scalar_mul(w, std::sqrt(T(1) - ab)));
}

// || w - eps(x_t, t) ||_2^2 with x_t from diffuse.
template <typename T, typename Model>
TensorT<T> ddpm_train_loss(Model& model, TensorT<T> x0, int t, TensorT<T> w, const NoiseScheduleT<T>& sched) {
    TensorT<T> x_t = diffuse(x0, t, w, sched);
    TensorT<T> pred = model.forward(x_t, t);
    return sum(square(sub(w, pred)));
}

// x_{t-1} = (x_t - (1-alpha_t)/sqrt(1-abar_t) eps) / sqrt(alpha_t) + sigma_t z
template <typename T, typename Model>
TensorT<T> ddpm_sample_step(Model& model, TensorT<T> x_t, int t, TensorT<T> z, const NoiseScheduleT<T>& sched) {
    sched.check_t(t);
    const T a = sched.alpha[t];
    const T ab = sched.alpha_bar[t];
    TensorT<T> eps = model.forward(x_t, t);
    TensorT<T> mu = scalar_mul(sub(x_t, scalar_mul(eps, (T(1) - a) / std::sqrt(T(1) - ab))), T(1) / std::sqrt(a));
    const T sg = sched.sigma[t];
    if (sg == T(0)) return mu;
    if (!same_shape(z.shape(), x_t.shape())) throw std::invalid_argument("ddpm_sample_step: noise shape mismatch");
    return add(mu, scalar_mul(z, sg));
}

// One-shot clean-image estimate: (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t)
template <typename T, typename Model>
TensorT<T> estimate_x0(Model& model, TensorT<T> x_t, int t, const NoiseScheduleT<T>& sched) {
    sched.check_t(t);
    const T ab = sched.alpha_bar[t];
    if (ab <= T(0)) throw std::runtime_error("estimate_x0: alpha_bar underflowed to zero at t=" + std::to_string(t));
    TensorT<T> eps = model.forward(x_t, t);
    return scalar_mul(sub(x_t, scalar_mul(eps, std::sqrt(T(1) - ab))), T(1) / std::sqrt(ab));
}

// Deterministic-capable sampler step from t to t_prev < t (t_prev 0 means the
// clean image, alpha_bar = 1):
//   x_prev = sqrt(abar_prev) f(x_t,t) + sqrt(1 - abar_prev - sigma_t^2) eps + sigma_t^2 z
template <typename T, typename Model>
TensorT<T> ddim_step(Model& model, TensorT<T> x_t, int t, int t_prev, TensorT<T> z, const NoiseScheduleT<T>& sched) {
    sched.check_t(t);
    if (t_prev >= t || t_prev < 0) throw std::invalid_argument("ddim_step: need 0 <= t_prev < t");
    const T ab_t = sched.alpha_bar[t];
    const T ab_prev = sched.alpha_bar_at(t_prev);
    const T sg = sched.sigma[t];
    const T dir_sq = T(1) - ab_prev - sg * sg;
    if (dir_sq < T(0)) throw std::runtime_error("ddim_step: 1 - alpha_bar_prev - sigma^2 is negative");

    if (ab_t <= T(0)) throw std::runtime_error("ddim_step: alpha_bar underflowed to zero at t=" + std::to_string(t));
    TensorT<T> eps = model.forward(x_t, t);
    TensorT<T> x0_est = scalar_mul(sub(x_t, scalar_mul(eps, std::sqrt(T(1) - ab_t))), T(1) / std::sqrt(ab_t));
    TensorT<T> out = add(scalar_mul(x0_est, std::sqrt(ab_prev)), scalar_mul(eps, std::sqrt(dir_sq)));
    if (sg == T(0)) return out;
    if (!same_shape(z.shape(), x_t.shape())) throw std::invalid_argument("ddim_step: noise shape mismatch");
    return add(out, scalar_mul(z, sg * sg));
}

// Runs the deterministic chain over the plan in descending order, ending at an
// image-space tensor clamped to [-1, 1]. With record_tape the result is
// differentiable w.r.t. x_T and model parameters under the active tape.
template <typename T, typename Model>
TensorT<T> sample(Model& model, TensorT<T> x_T, const StepPlan& plan, const NoiseScheduleT<T>& sched,
                  bool record_tape = false) {
    plan.validate(sched.total_steps);
    TensorT<T> z;  // sigma = 0 throughout the deterministic chain
    auto run = [&](TensorT<T> x) {
        for (int i = plan.length() - 1; i >= 0; --i) {
            const int t = plan.steps[i];
            const int t_prev = i > 0 ? plan.steps[i - 1] : 0;
            x = ddim_step(model, x, t, t_prev, z, sched);
        }
        return clamp(x, T(-1), T(1));
    };
    if (record_tape) return run(x_T);
    NoTapeScope<T> no_tape;
    return run(x_T);
}

// Deterministic encoder: the sampler recursion run in ascending-t direction,
// producing a latent whose sample() reconstruction approximates x0. The noise
// prediction for the step s -> t is queried at max(s, 1). The clean-image
// estimate is clamped to the image range each step; without it the recursion
// amplifies prediction error at low alpha_bar until it overflows.
template <typename T, typename Model>
TensorT<T> ddim_invert(Model& model, TensorT<T> x0, const StepPlan& plan, const NoiseScheduleT<T>& sched) {
    plan.validate(sched.total_steps);
    NoTapeScope<T> no_tape;
    TensorT<T> x = x0;
    for (int i = 0; i < plan.length(); ++i) {
        const int s = i > 0 ? plan.steps[i - 1] : 0;
        const int t = plan.steps[i];
        const T ab_s = sched.alpha_bar_at(s);
        const T ab_t = sched.alpha_bar[t];
        TensorT<T> eps = model.forward(x, std::max(s, 1));
        TensorT<T> x0_est = scalar_mul(sub(x, scalar_mul(eps, std::sqrt(T(1) - ab_s))), T(1) / std::sqrt(ab_s));
        x0_est = clamp(x0_est, T(-1), T(1));
        x = add(scalar_mul(x0_est, std::sqrt(ab_t)), scalar_mul(eps, std::sqrt(T(1) - ab_t)));
    }
    return x;
}

}  // namespace semadv

#endif  // SEMADV_DIFFUSION_HPP
