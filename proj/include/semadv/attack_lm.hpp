#ifndef SEMADV_ATTACK_LM_HPP
#define SEMADV_ATTACK_LM_HPP

// Latent masking attack: transplant the interpretation-map-selected region of
// a target image's latent into the source latent, shrinking the selection
// percentage each round until the sampled image flips the classifier.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semadv/attack_result.hpp"
#include "semadv/classifier.hpp"
#include "semadv/denoiser.hpp"
#include "semadv/interpret.hpp"
#include "semadv/schedule.hpp"

namespace semadv {

enum class MaskStrategy { source, target, sum };

// Binary per-pixel selection, broadcast over channels when blending.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> keep;  // entries in {0,1}
    double delta = 0.0;         // percentage threshold in [0, 99]
    MaskStrategy strategy = MaskStrategy::sum;

    int64_t count() const {
        int64_t n = 0;
        for (uint8_t v : keep) n += v;
        return n;
    }
};

struct LMConfig {
    MaskStrategy strategy = MaskStrategy::sum;
    MapMethod method = MapMethod::gradcam;
    double gamma = 10.0;
    double delta_init = 99.0;
    int steps_df = 40;
    int steps_sp = 40;
    uint64_t seed = 0;

    void validate() const {
        if (!(gamma > 0)) throw std::invalid_argument("lm config: gamma must be > 0");
        if (!(delta_init > 0) || delta_init > 100) throw std::invalid_argument("lm config: delta_init must be in (0,100]");
        if (steps_df < 1 || steps_sp < 1) throw std::invalid_argument("lm config: step counts must be positive");
    }
};

// Keeps the round(delta% * H*W) entries with the largest score, where score is
// |m_s|, |m_t| or |m_s|+|m_t| by strategy. Ties break by ascending flat index.
Mask topk_mask(const InterpretationMap& map_s, const InterpretationMap& map_t, MaskStrategy strategy, double delta);

// delta - max(gamma * (z_y - max_{i!=y} z_i) / z_y, 1) on softmax probabilities.
double decrement_delta(double delta, const std::vector<float>& target_logits, int label, double gamma);

// (1 - m) * source + m * target, exact per-pixel selection across channels.
Tensor blend_latents(const Tensor& source_latent, const Tensor& target_latent, const Mask& mask);

AttackResult lm_attack(const Tensor& x_source, const Tensor& x_target, Classifier& target, const Denoiser& denoiser,
                       const NoiseSchedule& sched, const LMConfig& config);

}  // namespace semadv

#endif  // SEMADV_ATTACK_LM_HPP
