#ifndef SEMADV_LOSSES_HPP
#define SEMADV_LOSSES_HPP

// KL divergence between prediction logits, the feature-space perceptual
// distance, and feature embedding for the distribution metrics.

#include <stdexcept>
#include <string>
#include <vector>

#include "semadv/classifier.hpp"
#include "semadv/tensor.hpp"

namespace semadv {

// log softmax via the shifted log-sum-exp identity; stable for any finite
// logits (a plain log(softmax(z)) underflows once logit gaps pass ~88).
template <typename T>
TensorT<T> log_softmax(TensorT<T> logits) {
    T mx = logits.values()[0];
    for (T v : logits.values()) mx = std::max(mx, v);
    TensorT<T> shifted = sub(logits, TensorT<T>::full(logits.shape(), mx));
    TensorT<T> lse = log_op(sum(exp_op(shifted)));
    return sub(shifted, mul(TensorT<T>::full(logits.shape(), T(1)), lse));
}

// D_KL(softmax(logits_p) || softmax(logits_q)); differentiable in both.
template <typename T>
TensorT<T> kl_divergence(TensorT<T> logits_p, TensorT<T> logits_q) {
    if (!same_shape(logits_p.shape(), logits_q.shape()))
        throw std::invalid_argument("kl_divergence: logits length mismatch");
    TensorT<T> p = softmax(logits_p, 0);
    return sum(mul(p, sub(log_softmax(logits_p), log_softmax(logits_q))));
}

// Sum over the classifier's conv activations of the mean squared difference
// between unit-normalized activation maps. Symmetric, non-negative, zero on
// identical inputs; differentiable through both forwards.
template <typename T>
TensorT<T> perceptual_distance(ClassifierT<T>& extractor, TensorT<T> x, TensorT<T> y) {
    if (!same_shape(x.shape(), y.shape()))
        throw std::invalid_argument("perceptual_distance: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(y.shape()));
    static const std::vector<std::string> layers = {"conv1", "conv2", "conv3", "conv4"};
    auto ox = extractor.forward(x, layers);
    auto oy = extractor.forward(y, layers);

    auto unit = [](TensorT<T> a) {
        TensorT<T> norm = sqrt_op(add(sum(square(a)), TensorT<T>::scalar(T(1e-8))));
        return div(a, norm);
    };

    TensorT<T> total = TensorT<T>::scalar(T(0));
    for (const auto& name : layers) {
        TensorT<T> ax = unit(ox.activations.at(name));
        TensorT<T> ay = unit(oy.activations.at(name));
        total = add(total, mean(square(sub(ax, ay))));
    }
    return total;
}

// Penultimate-layer embedding (pooled feature vector) for FID/KID features.
template <typename T>
std::vector<T> feature_embed(ClassifierT<T>& extractor, TensorT<T> x) {
    NoTapeScope<T> no_tape;
    auto out = extractor.forward(x, {"features"});
    return out.activations.at("features").values();
}

}  // namespace semadv

#endif  // SEMADV_LOSSES_HPP
