#ifndef SEMADV_INTERPRET_HPP
#define SEMADV_INTERPRET_HPP

// Backpropagation-based interpretation maps used to pick latent regions:
// Grad-CAM over the last conv block and a full-gradient saliency variant
// aggregating input-gradient and bias-gradient contributions.

#include <string>
#include <vector>

#include "semadv/classifier.hpp"
#include "semadv/tensor.hpp"

namespace semadv {

enum class MapMethod { gradcam, simplefullgrad };

// Single-channel non-negative map, max-normalized to [0, 1], image-sized.
struct InterpretationMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;
    MapMethod method = MapMethod::gradcam;
    int label = -1;

    float at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

InterpretationMap grad_cam(Classifier& classifier, const Tensor& x, int label);

InterpretationMap simple_fullgrad(Classifier& classifier, const Tensor& x, int label);

InterpretationMap interpretation_map(Classifier& classifier, const Tensor& x, int label, MapMethod method);

// Plain bilinear resize of a single-channel map (post-processing utility).
std::vector<float> bilinear_resize(const std::vector<float>& src, int h_in, int w_in, int h_out, int w_out);

}  // namespace semadv

#endif  // SEMADV_INTERPRET_HPP
