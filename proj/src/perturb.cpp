#include "semadv/perturb.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace semadv {

namespace {

float clamp_unit(float v) { return std::min(1.0f, std::max(-1.0f, v)); }

// standard luminance quantization table
const int kQuantTable[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                             14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                             18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                             49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

void dct8(const double in[8], double out[8]) {
    for (int k = 0; k < 8; ++k) {
        double acc = 0.0;
        for (int n = 0; n < 8; ++n) acc += in[n] * std::cos((2 * n + 1) * k * M_PI / 16.0);
        const double ck = k == 0 ? std::sqrt(0.125) : 0.5;
        out[k] = ck * acc;
    }
}

void idct8(const double in[8], double out[8]) {
    for (int n = 0; n < 8; ++n) {
        double acc = 0.0;
        for (int k = 0; k < 8; ++k) {
            const double ck = k == 0 ? std::sqrt(0.125) : 0.5;
            acc += ck * in[k] * std::cos((2 * n + 1) * k * M_PI / 16.0);
        }
        out[n] = acc;
    }
}

Tensor jpeg_like(const Tensor& x, double quality) {
    if (quality <= 0.0 || quality > 100.0) throw std::invalid_argument("jpeg_like: quality must be in (0,100]");
    if (quality >= 100.0) return x.detached_clone();
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];

    const double scale = quality < 50.0 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    double q[64];
    for (int i = 0; i < 64; ++i) q[i] = std::min(255.0, std::max(1.0, std::floor((kQuantTable[i] * scale + 50.0) / 100.0)));

    // luma in [0,255]; the chroma residual of each channel rides along untouched
    std::vector<double> luma(static_cast<size_t>(h) * w, 0.0);
    const float* px = x.data();
    for (int i = 0; i < h * w; ++i) {
        double acc = 0.0;
        for (int cc = 0; cc < c; ++cc) acc += px[cc * h * w + i];
        luma[static_cast<size_t>(i)] = (acc / c + 1.0) * 127.5;
    }

    std::vector<double> out_luma(luma);
    const int bh = (h + 7) / 8, bw = (w + 7) / 8;
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            double block[64], tmp[64];
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx) {
                    const int iy = std::min(h - 1, by * 8 + y);
                    const int ix = std::min(w - 1, bx * 8 + xx);
                    block[y * 8 + xx] = luma[static_cast<size_t>(iy) * w + ix] - 128.0;
                }
            double row_in[8], row_out[8];
            for (int y = 0; y < 8; ++y) {
                for (int xx = 0; xx < 8; ++xx) row_in[xx] = block[y * 8 + xx];
                dct8(row_in, row_out);
                for (int xx = 0; xx < 8; ++xx) tmp[y * 8 + xx] = row_out[xx];
            }
            for (int xx = 0; xx < 8; ++xx) {
                for (int y = 0; y < 8; ++y) row_in[y] = tmp[y * 8 + xx];
                dct8(row_in, row_out);
                for (int y = 0; y < 8; ++y) block[y * 8 + xx] = row_out[y];
            }
            for (int i = 0; i < 64; ++i) block[i] = std::round(block[i] / q[i]) * q[i];
            for (int xx = 0; xx < 8; ++xx) {
                for (int y = 0; y < 8; ++y) row_in[y] = block[y * 8 + xx];
                idct8(row_in, row_out);
                for (int y = 0; y < 8; ++y) tmp[y * 8 + xx] = row_out[y];
            }
            for (int y = 0; y < 8; ++y) {
                for (int xx = 0; xx < 8; ++xx) row_in[xx] = tmp[y * 8 + xx];
                idct8(row_in, row_out);
                const int iy = by * 8 + y;
                if (iy >= h) continue;
                for (int xx = 0; xx < 8; ++xx) {
                    const int ix = bx * 8 + xx;
                    if (ix >= w) continue;
                    out_luma[static_cast<size_t>(iy) * w + ix] = row_out[xx] + 128.0;
                }
            }
        }
    }

    Tensor out = Tensor::zeros(x.shape());
    float* po = out.data();
    for (int i = 0; i < h * w; ++i) {
        const double delta = (out_luma[static_cast<size_t>(i)] - luma[static_cast<size_t>(i)]) / 127.5;
        for (int cc = 0; cc < c; ++cc) po[cc * h * w + i] = clamp_unit(px[cc * h * w + i] + static_cast<float>(delta));
    }
    return out;
}

Tensor convolve_kernel(const Tensor& x, const std::vector<double>& kernel, int radius) {
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const int k = 2 * radius + 1;
    Tensor out = Tensor::zeros(x.shape());
    const float* px = x.data();
    float* po = out.data();
    for (int cc = 0; cc < c; ++cc) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                double acc = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    const int iy = std::min(h - 1, std::max(0, y + dy));
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int ix = std::min(w - 1, std::max(0, xx + dx));
                        acc += kernel[static_cast<size_t>(dy + radius) * k + (dx + radius)] * px[(cc * h + iy) * w + ix];
                    }
                }
                po[(cc * h + y) * w + xx] = clamp_unit(static_cast<float>(acc));
            }
        }
    }
    return out;
}

Tensor gaussian_blur(const Tensor& x, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return x.detached_clone();
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const int k = 2 * radius + 1;
    std::vector<double> kernel(static_cast<size_t>(k) * k);
    double total = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            kernel[static_cast<size_t>(dy + radius) * k + (dx + radius)] = v;
            total += v;
        }
    for (auto& v : kernel) v /= total;
    return convolve_kernel(x, kernel, radius);
}

Tensor defocus_blur(const Tensor& x, double radius) {
    if (radius < 0.0) throw std::invalid_argument("defocus_blur: radius must be >= 0");
    if (radius == 0.0) return x.detached_clone();
    const int r = std::max(1, static_cast<int>(std::ceil(radius)));
    const int k = 2 * r + 1;
    std::vector<double> kernel(static_cast<size_t>(k) * k, 0.0);
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dy * dy + dx * dx <= radius * radius) {
                kernel[static_cast<size_t>(dy + r) * k + (dx + r)] = 1.0;
                total += 1.0;
            }
    for (auto& v : kernel) v /= total;
    return convolve_kernel(x, kernel, r);
}

Tensor brightness(const Tensor& x, double shift) {
    if (shift < -2.0 || shift > 2.0) throw std::invalid_argument("brightness: shift must be in [-2,2]");
    Tensor out = x.detached_clone();
    if (shift == 0.0) return out;
    for (auto& v : out.values()) v = clamp_unit(v + static_cast<float>(shift));
    return out;
}

}  // namespace

PerturbKind perturb_kind_from_string(const std::string& name) {
    if (name == "jpeg_like") return PerturbKind::jpeg_like;
    if (name == "gaussian_blur") return PerturbKind::gaussian_blur;
    if (name == "defocus_blur") return PerturbKind::defocus_blur;
    if (name == "brightness") return PerturbKind::brightness;
    throw std::invalid_argument("natural_perturb: unknown kind '" + name + "'");
}

std::string perturb_kind_name(PerturbKind kind) {
    switch (kind) {
        case PerturbKind::jpeg_like: return "jpeg_like";
        case PerturbKind::gaussian_blur: return "gaussian_blur";
        case PerturbKind::defocus_blur: return "defocus_blur";
        case PerturbKind::brightness: return "brightness";
    }
    return "?";
}

Tensor natural_perturb(const Tensor& x, PerturbKind kind, double strength) {
    if (x.shape().size() != 3) throw std::invalid_argument("natural_perturb: expected CxHxW tensor");
    switch (kind) {
        case PerturbKind::jpeg_like: return jpeg_like(x, strength);
        case PerturbKind::gaussian_blur: return gaussian_blur(x, strength);
        case PerturbKind::defocus_blur: return defocus_blur(x, strength);
        case PerturbKind::brightness: return brightness(x, strength);
    }
    throw std::invalid_argument("natural_perturb: unknown kind");
}

}  // namespace semadv
