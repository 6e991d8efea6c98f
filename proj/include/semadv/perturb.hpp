#ifndef SEMADV_PERTURB_HPP
#define SEMADV_PERTURB_HPP

// Natural perturbations for the robustness harness. Outputs stay in [-1, 1].

#include <string>

#include "semadv/tensor.hpp"

namespace semadv {

enum class PerturbKind { jpeg_like, gaussian_blur, defocus_blur, brightness };

PerturbKind perturb_kind_from_string(const std::string& name);
std::string perturb_kind_name(PerturbKind kind);

// jpeg_like:    strength = quality in (0, 100]; 100 is the identity.
//               Luma-only 8x8 block DCT quantization with the standard table.
// gaussian_blur: strength = sigma in pixels; 0 is the identity.
// defocus_blur:  strength = disk radius in pixels; 0 is the identity.
// brightness:    strength = additive shift in [-2, 2], clamped output.
Tensor natural_perturb(const Tensor& x, PerturbKind kind, double strength);

}  // namespace semadv

#endif  // SEMADV_PERTURB_HPP
