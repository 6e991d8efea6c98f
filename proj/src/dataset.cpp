#include "semadv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semadv/rng.hpp"

namespace semadv {

namespace {

// hue wheel -> rgb in [-1,1]; the hue is per-image, not per-class, so color
// carries no class signal and the classifier has to key on glyph shape
void hue_to_rgb(double hue, float& r, float& g, float& b) {
    const double h = hue * 6.0;
    const int sector = static_cast<int>(h) % 6;
    const float f = static_cast<float>(h - std::floor(h));
    const float lo = -0.1f, hi = 0.9f;
    const float up = lo + (hi - lo) * f, down = hi - (hi - lo) * f;
    switch (sector) {
        case 0: r = hi; g = up; b = lo; break;
        case 1: r = down; g = hi; b = lo; break;
        case 2: r = lo; g = hi; b = up; break;
        case 3: r = lo; g = down; b = hi; break;
        case 4: r = up; g = lo; b = hi; break;
        default: r = hi; g = lo; b = down; break;
    }
}

bool glyph_hit(int cls, double dx, double dy, double scale) {
    switch (cls) {
        case 0:  // horizontal bar, 3 rows tall
            return std::abs(dy) <= 1.0 && std::abs(dx) <= 5.0 * scale;
        case 1:  // disk
            return dx * dx + dy * dy <= (3.1 * scale) * (3.1 * scale);
        case 2:  // cross, arms 3 wide
            return (std::abs(dx) <= 1.0 && std::abs(dy) <= 3.4 * scale) ||
                   (std::abs(dy) <= 1.0 && std::abs(dx) <= 3.4 * scale);
        case 3: {  // ring
            const double d2 = dx * dx + dy * dy;
            const double ro = 3.9 * scale, ri = 2.1 * scale;
            return d2 <= ro * ro && d2 >= ri * ri;
        }
        default:
            return false;
    }
}

}  // namespace

ToyDataset gen_toy_dataset(uint64_t seed, int num_classes, int count, int height, int width, int channels) {
    if (num_classes < 2 || num_classes > 4) throw std::invalid_argument("gen_toy_dataset: supports 2..4 classes");
    if (count < num_classes) throw std::invalid_argument("gen_toy_dataset: need at least one sample per class");
    if (height < 12 || width < 12) throw std::invalid_argument("gen_toy_dataset: image too small for glyphs");
    if (channels != 1 && channels != 3) throw std::invalid_argument("gen_toy_dataset: channels must be 1 or 3");

    ToyDataset ds;
    ds.num_classes = num_classes;
    ds.channels = channels;
    ds.height = height;
    ds.width = width;
    ds.seed = seed;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    ds.regions.reserve(count);

    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        const int cls = i % num_classes;
        const double cx = width / 2.0 - 0.5 + rng.uniform(-2.0, 2.0);
        const double cy = height / 2.0 - 0.5 + rng.uniform(-2.0, 2.0);
        const double scale = rng.uniform(0.85, 1.15);
        float gr, gg, gb;
        hue_to_rgb(rng.uniform(), gr, gg, gb);

        Tensor img = Tensor::zeros({channels, height, width});
        std::vector<uint8_t> region(static_cast<size_t>(height) * width, 0);
        float* px = img.data();
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const bool hit = glyph_hit(cls, x - cx, y - cy, scale);
                region[static_cast<size_t>(y) * width + x] = hit ? 1 : 0;
                float col[3];
                if (hit) {
                    col[0] = gr;
                    col[1] = gg;
                    col[2] = gb;
                } else {
                    const float bg = -0.45f + static_cast<float>(rng.normal() * 0.12);
                    col[0] = bg;
                    col[1] = bg + static_cast<float>(rng.normal() * 0.04);
                    col[2] = bg + static_cast<float>(rng.normal() * 0.04);
                }
                for (int c = 0; c < channels; ++c) {
                    float v = channels == 1 ? (col[0] + col[1] + col[2]) / 3.0f : col[c];
                    px[(c * height + y) * width + x] = std::min(1.0f, std::max(-1.0f, v));
                }
            }
        }
        ds.images.push_back(std::move(img));
        ds.labels.push_back(cls);
        ds.regions.push_back(std::move(region));
    }
    return ds;
}

uint64_t ToyDataset::fingerprint() const {
    uint64_t h = 1469598103934665603ull;
    const uint64_t head[5] = {seed, static_cast<uint64_t>(num_classes), static_cast<uint64_t>(channels),
                              static_cast<uint64_t>(height), static_cast<uint64_t>(width)};
    h = fnv1a(head, sizeof(head), h);
    for (size_t i = 0; i < images.size(); ++i) {
        h = fnv1a(images[i].values().data(), images[i].values().size() * sizeof(float), h);
        h = fnv1a(&labels[i], sizeof(int), h);
    }
    return h;
}

DatasetSplit split_dataset(const ToyDataset& ds) {
    DatasetSplit split;
    for (size_t i = 0; i < ds.images.size(); ++i) {
        if (i % 5 == 4)
            split.test_indices.push_back(static_cast<int>(i));
        else
            split.train_indices.push_back(static_cast<int>(i));
    }
    return split;
}

}  // namespace semadv
