#include "semadv/attack_st.hpp"

#include <chrono>

#include "semadv/diffusion.hpp"
#include "semadv/rng.hpp"

namespace semadv {

namespace {

int argmax(const std::vector<float>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

Tensor st_loss_with_logits(Classifier& extractor, Tensor judge_x0_logits, Tensor judge_xhat_logits, Tensor x0,
                           Tensor x_hat, double lambda_weight) {
    Tensor percep = perceptual_distance(extractor, x0, x_hat);
    Tensor kl = kl_divergence(judge_x0_logits, judge_xhat_logits);
    return sub(scalar_mul(percep, static_cast<float>(lambda_weight)), kl);
}

}  // namespace

Tensor st_loss(Classifier& extractor, Classifier& judge, Tensor x0, Tensor x_hat, double lambda_weight) {
    return st_loss_t<float>(extractor, judge, x0, x_hat, lambda_weight);
}

Classifier& select_judge(BoxSetting box, Classifier& target, Classifier& surrogate) {
    return box == BoxSetting::white ? target : surrogate;
}

AttackResult st_attack(const Tensor& x0_in, Classifier& target, Classifier& surrogate, Classifier& extractor,
                       const Denoiser& denoiser, const NoiseSchedule& sched, const STConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    AttackResult result;
    Tensor x0 = x0_in.detached_clone();
    result.original_label = target.predict(x0);

    Classifier& judge = select_judge(config.box, target, surrogate);
    const bool white = &judge == &target;

    const StepPlan plan_df = make_step_plan(sched.total_steps, config.steps_df);
    const StepPlan plan_ft = make_step_plan(sched.total_steps, config.steps_ft);
    const StepPlan plan_sp = make_step_plan(sched.total_steps, config.steps_sp);

    // latent acquisition: seeded closed-form diffusion to the top of the plan,
    // or the deterministic inversion when configured
    Denoiser theta = denoiser.clone();
    Tensor latent;
    if (config.invert_latent) {
        latent = ddim_invert(theta, x0, plan_df, sched);
    } else {
        Rng rng(config.seed);
        Tensor w = Tensor::zeros(x0.shape());
        rng.fill_normal(w.values());
        NoTapeScope<float> no_tape;
        latent = diffuse(x0, plan_df.steps.back(), w, sched);
    }
    latent = latent.detached_clone();

    const bool tune_latent = config.mode != FineTuneMode::model;
    const bool tune_model = config.mode != FineTuneMode::latent;
    latent.set_requires_grad(tune_latent);
    if (!tune_model)
        for (auto& p : theta.params().entries()) p.second.set_requires_grad(false);

    // judge view of the clean image, computed once
    Tensor judge_x0_logits;
    {
        NoTapeScope<float> no_tape;
        judge_x0_logits = judge.forward(x0).logits;
    }
    result.judge_queries += 1;
    if (white) result.target_queries += 1;
    const int judge_clean_label = argmax(judge_x0_logits.values());

    const int total_rounds = config.max_rounds + config.extension_blocks * config.steps_ft;
    bool done = false;
    for (int round = 0; round < total_rounds && !done; ++round) {
        // snapshot for rollback: a diverged optimization step must not poison
        // the final sample or abort a whole campaign
        Tensor latent_snapshot = latent.detached_clone();
        Denoiser theta_snapshot;
        if (tune_model) theta_snapshot = theta.clone();

        try {
            Tape tape;
            TapeScope<float> scope(tape);

            Tensor x_hat = sample(theta, latent, plan_ft, sched, /*record_tape=*/true);
            Tensor judge_logits = judge.forward(x_hat).logits;
            result.judge_queries += 1;
            if (white) result.target_queries += 1;
            const int judge_label = argmax(judge_logits.values());

            Tensor loss = st_loss_with_logits(extractor, judge_x0_logits, judge_logits, x0, x_hat, config.lambda_weight);
            result.loss_trace.push_back(loss.item());

            if (tune_latent) latent.zero_grad();
            if (tune_model) theta.params().zero_grad();
            tape.backward_from(loss);

            if (tune_latent) {
                auto& v = latent.values();
                const auto& g = latent.grad();
                for (size_t i = 0; i < v.size(); ++i) v[i] -= static_cast<float>(config.lr_latent) * g[i];
            }
            if (tune_model) {
                for (auto& p : theta.params().entries()) {
                    auto& v = p.second.values();
                    const auto& g = p.second.grad();
                    for (size_t i = 0; i < v.size(); ++i) v[i] -= static_cast<float>(config.lr_model) * g[i];
                }
            }
            result.iterations = round + 1;

            // candidate flip under the judge: confirm with the full chain
            // against the target
            if (judge_label != judge_clean_label) {
                Tensor confirm = sample(theta, latent, plan_sp, sched);
                const int label = target.predict(confirm);
                result.target_queries += 1;
                if (label != result.original_label) {
                    result.adversarial = confirm;
                    result.adversarial_label = label;
                    result.success = true;
                    done = true;
                }
            }
        } catch (const std::runtime_error& e) {
            if (std::string(e.what()).find("non-finite") == std::string::npos) throw;
            // restore the last finite state and stop optimizing
            latent = latent_snapshot;
            if (tune_latent) latent.set_requires_grad(true);
            if (tune_model) theta = theta_snapshot;
            break;
        }
    }

    if (!done) {
        Tensor final_img = sample(theta, latent, plan_sp, sched);
        const int label = target.predict(final_img);
        result.target_queries += 1;
        result.adversarial = final_img;
        result.adversarial_label = label;
        result.success = label != result.original_label;
    }

    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace semadv
