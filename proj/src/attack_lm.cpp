#include "semadv/attack_lm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "semadv/diffusion.hpp"
#include "semadv/rng.hpp"

namespace semadv {

Mask topk_mask(const InterpretationMap& map_s, const InterpretationMap& map_t, MaskStrategy strategy, double delta) {
    if (map_s.height != map_t.height || map_s.width != map_t.width)
        throw std::invalid_argument("topk_mask: map shape mismatch");
    if (delta < 0.0 || delta > 99.0) throw std::invalid_argument("topk_mask: delta must be in [0,99]");

    const size_t n = map_s.values.size();
    std::vector<float> score(n);
    for (size_t i = 0; i < n; ++i) {
        switch (strategy) {
            case MaskStrategy::source: score[i] = std::abs(map_s.values[i]); break;
            case MaskStrategy::target: score[i] = std::abs(map_t.values[i]); break;
            case MaskStrategy::sum: score[i] = std::abs(map_s.values[i]) + std::abs(map_t.values[i]); break;
        }
    }

    const int64_t k = std::llround(delta / 100.0 * static_cast<double>(n));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return score[static_cast<size_t>(a)] > score[static_cast<size_t>(b)]; });

    Mask mask;
    mask.height = map_s.height;
    mask.width = map_s.width;
    mask.delta = delta;
    mask.strategy = strategy;
    mask.keep.assign(n, 0);
    for (int64_t i = 0; i < k; ++i) mask.keep[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 1;
    return mask;
}

double decrement_delta(double delta, const std::vector<float>& target_logits, int label, double gamma) {
    if (target_logits.size() < 2) throw std::invalid_argument("decrement_delta: need at least two logits");
    if (label < 0 || label >= static_cast<int>(target_logits.size()))
        throw std::invalid_argument("decrement_delta: label out of range");

    // softmax keeps z_y strictly positive, so the margin ratio is defined
    float mx = target_logits[0];
    for (float v : target_logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (float v : target_logits) denom += std::exp(static_cast<double>(v) - mx);
    const double z_y = std::exp(static_cast<double>(target_logits[static_cast<size_t>(label)]) - mx) / denom;
    double z_runner = 0.0;
    for (size_t i = 0; i < target_logits.size(); ++i) {
        if (static_cast<int>(i) == label) continue;
        z_runner = std::max(z_runner, std::exp(static_cast<double>(target_logits[i]) - mx) / denom);
    }
    const double step = std::max(gamma * (z_y - z_runner) / z_y, 1.0);
    return delta - step;
}

Tensor blend_latents(const Tensor& source_latent, const Tensor& target_latent, const Mask& mask) {
    if (!same_shape(source_latent.shape(), target_latent.shape()))
        throw std::invalid_argument("blend_latents: latent shape mismatch");
    if (source_latent.shape().size() != 3 || source_latent.shape()[1] != mask.height || source_latent.shape()[2] != mask.width)
        throw std::invalid_argument("blend_latents: mask does not match latent spatial size");

    Tensor out = source_latent.detached_clone();
    const int c = out.shape()[0], h = mask.height, w = mask.width;
    float* po = out.data();
    const float* pt = target_latent.data();
    for (int i = 0; i < h * w; ++i) {
        if (!mask.keep[static_cast<size_t>(i)]) continue;
        for (int cc = 0; cc < c; ++cc) po[cc * h * w + i] = pt[cc * h * w + i];
    }
    return out;
}

AttackResult lm_attack(const Tensor& x_source, const Tensor& x_target, Classifier& target, const Denoiser& denoiser,
                       const NoiseSchedule& sched, const LMConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    AttackResult result;
    const int label_s = target.predict(x_source);
    const int label_t = target.predict(x_target);
    if (label_s == label_t)
        throw std::invalid_argument("lm_attack: source and target must carry different labels under the target classifier");
    result.original_label = label_s;

    const StepPlan plan_df = make_step_plan(sched.total_steps, config.steps_df);
    const StepPlan plan_sp = make_step_plan(sched.total_steps, config.steps_sp);

    // interpretation maps computed once, before the loop
    InterpretationMap map_s = interpretation_map(target, x_source, label_s, config.method);
    InterpretationMap map_t = interpretation_map(target, x_target, label_t, config.method);

    Tensor latent_s, latent_t;
    {
        Rng rng(config.seed);
        Tensor w_s = Tensor::zeros(x_source.shape());
        rng.fill_normal(w_s.values());
        Tensor w_t = Tensor::zeros(x_target.shape());
        rng.fill_normal(w_t.values());
        NoTapeScope<float> no_tape;
        Tensor xs = x_source.detached_clone();
        Tensor xt = x_target.detached_clone();
        latent_s = diffuse(xs, plan_df.steps.back(), w_s, sched);
        latent_t = diffuse(xt, plan_df.steps.back(), w_t, sched);
    }

    Denoiser model = denoiser.clone();  // read-only use; the original is never touched
    double delta = std::min(config.delta_init, 99.0);
    Tensor last_image;
    int last_label = label_s;
    while (delta > 0.0) {
        const Mask mask = topk_mask(map_s, map_t, config.strategy, delta);
        Tensor blended = blend_latents(latent_s, latent_t, mask);
        Tensor image = sample(model, blended, plan_sp, sched);
        const std::vector<float> logits = target.logits_of(image);
        result.target_queries += 1;
        result.judge_queries += 1;  // the target is the only queried model here
        result.iterations += 1;
        result.delta_trace.push_back(delta);

        last_image = image;
        last_label = 0;
        for (size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[static_cast<size_t>(last_label)]) last_label = static_cast<int>(i);

        if (last_label != label_s) {
            result.success = true;
            break;
        }
        delta = decrement_delta(delta, logits, label_s, config.gamma);
    }

    result.adversarial = last_image.defined() ? last_image : x_source.detached_clone();
    result.adversarial_label = last_label;
    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace semadv
