#include "semadv/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semadv {

namespace {

void max_normalize(std::vector<float>& v) {
    float mx = 0.0f;
    for (float x : v) mx = std::max(mx, x);
    if (mx > 0.0f)
        for (float& x : v) x /= mx;
}

// logit of the requested class as a scalar graph node
Tensor class_logit(Tensor logits, int label) {
    const int k = logits.shape()[0];
    if (label < 0 || label >= k) throw std::invalid_argument("interpretation map: label out of range");
    Tensor mask = Tensor::zeros({k});
    mask.values()[static_cast<size_t>(label)] = 1.0f;
    return sum(mul(logits, mask));
}

// psi: absolute value, channel sum, bilinear resize to HxW, max-normalize
std::vector<float> psi(const std::vector<float>& map, int c, int h, int w, int out_h, int out_w) {
    std::vector<float> collapsed(static_cast<size_t>(h) * w, 0.0f);
    for (int cc = 0; cc < c; ++cc)
        for (int i = 0; i < h * w; ++i) collapsed[static_cast<size_t>(i)] += std::abs(map[static_cast<size_t>(cc) * h * w + i]);
    std::vector<float> resized = bilinear_resize(collapsed, h, w, out_h, out_w);
    max_normalize(resized);
    return resized;
}

}  // namespace

std::vector<float> bilinear_resize(const std::vector<float>& src, int h_in, int w_in, int h_out, int w_out) {
    if (h_in == h_out && w_in == w_out) return src;
    std::vector<float> dst(static_cast<size_t>(h_out) * w_out);
    const double sy = static_cast<double>(h_in) / h_out;
    const double sx = static_cast<double>(w_in) / w_out;
    for (int y = 0; y < h_out; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(h_in - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h_in - 1);
        const double wy = fy - y0;
        for (int x = 0; x < w_out; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(w_in - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w_in - 1);
            const double wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * src[static_cast<size_t>(y0) * w_in + x0] + wx * src[static_cast<size_t>(y0) * w_in + x1]) +
                             wy * ((1 - wx) * src[static_cast<size_t>(y1) * w_in + x0] + wx * src[static_cast<size_t>(y1) * w_in + x1]);
            dst[static_cast<size_t>(y) * w_out + x] = static_cast<float>(v);
        }
    }
    return dst;
}

InterpretationMap grad_cam(Classifier& classifier, const Tensor& x, int label) {
    const int out_h = classifier.config().height, out_w = classifier.config().width;

    Tensor input = x.detached_clone();
    input.set_requires_grad(true);

    Tape tape;
    TapeScope<float> scope(tape);
    auto out = classifier.forward(input, {"conv4"});
    Tensor logit = class_logit(out.logits, label);
    tape.backward_from(logit);

    Tensor act = out.activations.at("conv4");
    const int c = act.shape()[0], h = act.shape()[1], w = act.shape()[2];
    const auto& a = act.values();
    const auto& g = act.grad();

    // channel weights: spatially averaged gradients
    std::vector<float> cam(static_cast<size_t>(h) * w, 0.0f);
    for (int cc = 0; cc < c; ++cc) {
        float wgt = 0.0f;
        for (int i = 0; i < h * w; ++i) wgt += g[static_cast<size_t>(cc) * h * w + i];
        wgt /= static_cast<float>(h * w);
        for (int i = 0; i < h * w; ++i) cam[static_cast<size_t>(i)] += wgt * a[static_cast<size_t>(cc) * h * w + i];
    }
    for (float& v : cam) v = std::max(v, 0.0f);

    InterpretationMap map;
    map.height = out_h;
    map.width = out_w;
    map.method = MapMethod::gradcam;
    map.label = label;
    map.values = bilinear_resize(cam, h, w, out_h, out_w);
    for (float& v : map.values) v = std::abs(v);
    max_normalize(map.values);
    return map;
}

InterpretationMap simple_fullgrad(Classifier& classifier, const Tensor& x, int label) {
    const int out_h = classifier.config().height, out_w = classifier.config().width;

    Tensor input = x.detached_clone();
    input.set_requires_grad(true);

    static const std::vector<std::string> pre_layers = {"preact1", "preact2", "preact3", "preact4"};
    Tape tape;
    TapeScope<float> scope(tape);
    auto out = classifier.forward(input, pre_layers);
    Tensor logit = class_logit(out.logits, label);
    tape.backward_from(logit);

    // input-gradient term: psi(grad_x . x)
    const int c_in = x.shape()[0];
    std::vector<float> ig(input.values().size());
    const auto& gx = input.grad();
    for (size_t i = 0; i < ig.size(); ++i) ig[i] = gx[i] * x.values()[i];
    std::vector<float> total = psi(ig, c_in, out_h, out_w, out_h, out_w);

    // bias-gradient terms: psi(grad_preact . bias), one per conv layer
    for (auto& [pre_name, bias] : classifier.bias_layers()) {
        Tensor pre = out.activations.at(pre_name);
        const int c = pre.shape()[0], h = pre.shape()[1], w = pre.shape()[2];
        const auto& gp = pre.grad();
        const auto& b = bias->values();
        std::vector<float> contrib(static_cast<size_t>(c) * h * w);
        for (int cc = 0; cc < c; ++cc)
            for (int i = 0; i < h * w; ++i)
                contrib[static_cast<size_t>(cc) * h * w + i] = gp[static_cast<size_t>(cc) * h * w + i] * b[static_cast<size_t>(cc)];
        std::vector<float> term = psi(contrib, c, h, w, out_h, out_w);
        for (size_t i = 0; i < total.size(); ++i) total[i] += term[i];
    }
    max_normalize(total);

    InterpretationMap map;
    map.height = out_h;
    map.width = out_w;
    map.method = MapMethod::simplefullgrad;
    map.label = label;
    map.values = std::move(total);
    return map;
}

InterpretationMap interpretation_map(Classifier& classifier, const Tensor& x, int label, MapMethod method) {
    return method == MapMethod::gradcam ? grad_cam(classifier, x, label) : simple_fullgrad(classifier, x, label);
}

}  // namespace semadv
