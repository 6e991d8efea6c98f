#ifndef SEMADV_IMAGE_IO_HPP
#define SEMADV_IMAGE_IO_HPP

// Binary PPM (P6) / PGM (P5) with 8-bit quantization of the [-1, 1] range:
// byte = round((v + 1) / 2 * 255), clamped; reading inverts the affine map.

#include <string>

#include "semadv/tensor.hpp"

namespace semadv {

// Writes P6 for 3-channel tensors and P5 for single-channel ones.
void write_image(const Tensor& x, const std::string& path);

Tensor read_image(const std::string& path);

// Channel-mean reduction, used when a gray model consumes an RGB file.
Tensor to_grayscale(const Tensor& x);

// Exactly the value the file codec would store: quantize to 8 bits and back.
// Campaign results are evaluated on this representation so that reported
// labels are reproducible from the saved images alone.
Tensor quantize_roundtrip(const Tensor& x);

}  // namespace semadv

#endif  // SEMADV_IMAGE_IO_HPP
