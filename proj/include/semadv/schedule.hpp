#ifndef SEMADV_SCHEDULE_HPP
#define SEMADV_SCHEDULE_HPP

// Noise schedule tables and timestep plans for the diffusion/sampling chains.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace semadv {

enum class ScheduleMode { ddim, ddpm };

// beta/alpha/alpha_bar/sigma tables, 1-indexed by timestep (index 0 unused
// except alpha_bar[0] = 1, the t=0 boundary of the sampler).
template <typename T>
struct NoiseScheduleT {
    int total_steps = 0;
    std::vector<T> beta;
    std::vector<T> alpha;
    std::vector<T> alpha_bar;
    std::vector<T> sigma;
    ScheduleMode mode = ScheduleMode::ddim;

    void check_t(int t) const {
        if (t < 1 || t > total_steps)
            throw std::invalid_argument("schedule: timestep " + std::to_string(t) + " out of [1," + std::to_string(total_steps) + "]");
    }
    // alpha_bar extended with the t=0 convention alpha_bar[0] = 1.
    T alpha_bar_at(int t) const {
        if (t == 0) return T(1);
        check_t(t);
        return alpha_bar[t];
    }
};

template <typename T>
NoiseScheduleT<T> build_schedule(int total_steps, T beta_start, T beta_end, ScheduleMode mode) {
    if (total_steps < 1) throw std::invalid_argument("build_schedule: total_steps must be >= 1");
    if (!(beta_start > T(0)) || !(beta_start <= beta_end) || !(beta_end < T(1)))
        throw std::invalid_argument("build_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseScheduleT<T> s;
    s.total_steps = total_steps;
    s.mode = mode;
    s.beta.assign(total_steps + 1, T(0));
    s.alpha.assign(total_steps + 1, T(0));
    s.alpha_bar.assign(total_steps + 1, T(0));
    s.sigma.assign(total_steps + 1, T(0));
    s.alpha_bar[0] = T(1);

    T prod = T(1);
    for (int t = 1; t <= total_steps; ++t) {
        const T frac = total_steps == 1 ? T(0) : T(t - 1) / T(total_steps - 1);
        s.beta[t] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[t] = T(1) - s.beta[t];
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
        s.sigma[t] = mode == ScheduleMode::ddim ? T(0) : std::sqrt(s.beta[t]);
    }
    return s;
}

// Strictly increasing subsequence of [1, T]; sampled in descending order.
struct StepPlan {
    std::vector<int> steps;

    int length() const { return static_cast<int>(steps.size()); }

    void validate(int total_steps) const {
        if (steps.empty()) throw std::invalid_argument("step plan: empty");
        if (steps.front() < 1 || steps.back() > total_steps)
            throw std::invalid_argument("step plan: timesteps outside [1,T]");
        for (size_t i = 1; i < steps.size(); ++i)
            if (steps[i] <= steps[i - 1]) throw std::invalid_argument("step plan: not strictly increasing");
    }
};

// Evenly spaced plan of `count` timesteps ending at T.
inline StepPlan make_step_plan(int total_steps, int count) {
    if (count < 1 || count > total_steps)
        throw std::invalid_argument("make_step_plan: count must be in [1,T]");
    StepPlan plan;
    plan.steps.resize(count);
    for (int i = 0; i < count; ++i) {
        int t = static_cast<int>(std::llround(static_cast<double>(total_steps) * (i + 1) / count));
        plan.steps[i] = t < 1 ? 1 : t;
    }
    for (int i = 1; i < count; ++i)
        if (plan.steps[i] <= plan.steps[i - 1]) plan.steps[i] = plan.steps[i - 1] + 1;
    plan.validate(total_steps);
    return plan;
}

using NoiseSchedule = NoiseScheduleT<float>;

}  // namespace semadv

#endif  // SEMADV_SCHEDULE_HPP
