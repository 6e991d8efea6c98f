#ifndef SEMADV_ATTACK_ST_HPP
#define SEMADV_ATTACK_ST_HPP

// Semantic transformation attack: gradient fine-tuning of the sampling latent
// and/or a denoiser clone against a perceptual-similarity / logit-divergence
// trade-off, with a cheap short-chain check each round and a full-chain
// confirmation against the target on every candidate flip.

#include <cstdint>
#include <stdexcept>

#include "semadv/attack_result.hpp"
#include "semadv/classifier.hpp"
#include "semadv/denoiser.hpp"
#include "semadv/losses.hpp"
#include "semadv/schedule.hpp"

namespace semadv {

enum class FineTuneMode { latent, model, both };
enum class BoxSetting { white, black };

struct STConfig {
    double lambda_weight = 1.0;
    FineTuneMode mode = FineTuneMode::both;
    BoxSetting box = BoxSetting::white;
    int steps_df = 40;
    int steps_ft = 15;
    int steps_sp = 40;
    int max_rounds = 30;        // N
    int extension_blocks = 10;  // extra blocks of steps_ft rounds after N
    double lr_latent = 0.05;
    double lr_model = 1e-4;
    uint64_t seed = 0;
    bool invert_latent = false;  // deterministic encoding instead of the stochastic draw

    void validate() const {
        if (!(lambda_weight > 0)) throw std::invalid_argument("st config: lambda must be > 0");
        if (steps_df < 1 || steps_ft < 1 || steps_sp < 1) throw std::invalid_argument("st config: step counts must be positive");
        if (steps_ft > steps_sp) throw std::invalid_argument("st config: steps_ft must be <= steps_sp");
        if (max_rounds < 1) throw std::invalid_argument("st config: max_rounds must be >= 1");
        if (extension_blocks < 0) throw std::invalid_argument("st config: extension_blocks must be >= 0");
        if (!(lr_latent > 0) || !(lr_model > 0)) throw std::invalid_argument("st config: learning rates must be > 0");
    }
};

// lambda * perceptual_distance(x0, x_hat) - KL(judge(x0) || judge(x_hat))
template <typename T>
TensorT<T> st_loss_t(ClassifierT<T>& extractor, ClassifierT<T>& judge, TensorT<T> x0, TensorT<T> x_hat,
                     double lambda_weight) {
    if (!same_shape(x0.shape(), x_hat.shape())) throw std::invalid_argument("st_loss: shape mismatch");
    TensorT<T> logits_x0 = judge.forward(x0).logits;
    TensorT<T> logits_xhat = judge.forward(x_hat).logits;
    TensorT<T> percep = perceptual_distance(extractor, x0, x_hat);
    TensorT<T> kl = kl_divergence(logits_x0, logits_xhat);
    return sub(scalar_mul(percep, static_cast<T>(lambda_weight)), kl);
}

Tensor st_loss(Classifier& extractor, Classifier& judge, Tensor x0, Tensor x_hat, double lambda_weight);

// white -> target, black -> surrogate. Success checks always use the target.
Classifier& select_judge(BoxSetting box, Classifier& target, Classifier& surrogate);

AttackResult st_attack(const Tensor& x0, Classifier& target, Classifier& surrogate, Classifier& extractor,
                       const Denoiser& denoiser, const NoiseSchedule& sched, const STConfig& config);

}  // namespace semadv

#endif  // SEMADV_ATTACK_ST_HPP
