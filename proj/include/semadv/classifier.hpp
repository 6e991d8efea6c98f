#ifndef SEMADV_CLASSIFIER_HPP
#define SEMADV_CLASSIFIER_HPP

// Small convolutional classifier: four conv blocks, global average pooling and
// a linear head. Every named activation is retrievable after a forward pass,
// which the interpretation maps and the perceptual distance rely on.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "semadv/params.hpp"
#include "semadv/tensor.hpp"

namespace semadv {

template <typename T>
struct ClassifierConfigT {
    int in_channels = 3;
    int height = 16;
    int width = 16;
    int num_classes = 4;
    std::vector<int> widths = {16, 32, 64, 64};
    uint64_t init_seed = 2;
};

template <typename T>
struct ClassifierOutputT {
    TensorT<T> logits;  // shape (K)
    std::map<std::string, TensorT<T>> activations;
};

template <typename T>
class ClassifierT {
  public:
    using Config = ClassifierConfigT<T>;
    using Output = ClassifierOutputT<T>;

    ClassifierT() = default;

    explicit ClassifierT(const Config& cfg) : cfg_(cfg) {
        if (cfg.widths.size() != 4) throw std::invalid_argument("classifier: expected 4 block widths");
        if (cfg.height % 2 != 0 || cfg.width % 2 != 0)
            throw std::invalid_argument("classifier: spatial size must be even");
        Rng rng(cfg.init_seed);
        int cin = cfg.in_channels;
        for (int b = 0; b < 4; ++b) {
            const int cout = cfg.widths[b];
            params_.create_normal(block_name(b) + ".w", {cout, cin, 3, 3}, rng, conv_init_std(cin * 9));
            params_.create(block_name(b) + ".b", {cout});
            cin = cout;
        }
        params_.create_normal("fc.w", {cfg.num_classes, cfg.widths[3]}, rng, std::sqrt(1.0 / cfg.widths[3]));
        params_.create("fc.b", {cfg.num_classes, 1});
    }

    const Config& config() const { return cfg_; }
    ParamStoreT<T>& params() { return params_; }
    const ParamStoreT<T>& params() const { return params_; }
    int feature_dim() const { return cfg_.widths[3]; }

    ClassifierT clone() const {
        ClassifierT copy;
        copy.cfg_ = cfg_;
        params_.clone_into(copy.params_);
        return copy;
    }

    // Registered capture names: preact1..preact4 (conv output with bias),
    // conv1..conv4 (post-relu) and "features" (pooled penultimate vector).
    static const std::vector<std::string>& layer_registry() {
        static const std::vector<std::string> names = {"preact1", "preact2", "preact3", "preact4",
                                                       "conv1",   "conv2",   "conv3",   "conv4",   "features"};
        return names;
    }

    Output forward(TensorT<T> x, const std::vector<std::string>& capture = {}) {
        if (x.shape() != Shape{cfg_.in_channels, cfg_.height, cfg_.width})
            throw std::invalid_argument("classifier: input shape " + shape_str(x.shape()) + " does not match configured " +
                                        shape_str({cfg_.in_channels, cfg_.height, cfg_.width}));
        for (const auto& name : capture) {
            bool known = false;
            for (const auto& reg : layer_registry()) known = known || reg == name;
            if (!known) throw std::invalid_argument("classifier: unknown capture layer '" + name + "'");
        }

        Output out;
        auto want = [&](const std::string& name) {
            for (const auto& c : capture)
                if (c == name) return true;
            return false;
        };

        TensorT<T> h = x;
        for (int b = 0; b < 4; ++b) {
            TensorT<T> pre = conv2d(h, params_.at(block_name(b) + ".w"), params_.at(block_name(b) + ".b"), 1, 1);
            const std::string pre_name = "preact" + std::to_string(b + 1);
            const std::string act_name = "conv" + std::to_string(b + 1);
            if (want(pre_name)) out.activations[pre_name] = pre;
            h = relu(pre);
            if (want(act_name)) out.activations[act_name] = h;
            if (b == 0) h = avg_pool2d(h, 2);  // single spatial reduction; later blocks keep resolution
        }
        const int spatial = h.shape()[1];
        TensorT<T> pooled = reshape(avg_pool2d(h, spatial), {cfg_.widths[3], 1});
        if (want("features")) out.activations["features"] = reshape(pooled, {cfg_.widths[3]});
        TensorT<T> logits = add(matmul(params_.at("fc.w"), pooled), params_.at("fc.b"));
        out.logits = reshape(logits, {cfg_.num_classes});
        return out;
    }

    // Pure forward, no tape, argmax label.
    int predict(TensorT<T> x) {
        NoTapeScope<T> no_tape;
        TensorT<T> logits = forward(x).logits;
        const auto& v = logits.values();
        int best = 0;
        for (size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[best]) best = static_cast<int>(i);
        return best;
    }

    std::vector<T> logits_of(TensorT<T> x) {
        NoTapeScope<T> no_tape;
        return forward(x).logits.values();
    }

    // Per-layer bias tensors paired with their pre-activation capture names.
    std::vector<std::pair<std::string, TensorT<T>*>> bias_layers() {
        std::vector<std::pair<std::string, TensorT<T>*>> out;
        for (int b = 0; b < 4; ++b)
            out.emplace_back("preact" + std::to_string(b + 1), &params_.at(block_name(b) + ".b"));
        return out;
    }

  private:
    static std::string block_name(int b) { return "block" + std::to_string(b + 1); }

    Config cfg_;
    ParamStoreT<T> params_;
};

using Classifier = ClassifierT<float>;
using ClassifierConfig = ClassifierConfigT<float>;
using ClassifierOutput = ClassifierOutputT<float>;

}  // namespace semadv

#endif  // SEMADV_CLASSIFIER_HPP
