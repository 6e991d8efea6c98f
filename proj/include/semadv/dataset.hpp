#ifndef SEMADV_DATASET_HPP
#define SEMADV_DATASET_HPP

// Procedural toy dataset: one localized parametric glyph per class on a noisy
// background, with the glyph support recorded as the ground-truth
// discriminative region for interpretation-map checks.

#include <cstdint>
#include <vector>

#include "semadv/tensor.hpp"

namespace semadv {

struct ToyDataset {
    int num_classes = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    uint64_t seed = 0;
    std::vector<Tensor> images;                     // CxHxW in [-1, 1]
    std::vector<int> labels;                        // in [0, K)
    std::vector<std::vector<uint8_t>> regions;      // HxW glyph support masks
    uint64_t fingerprint() const;
};

// Classes are bar / disk / cross / ring glyphs (K in [2,4]) with class colors,
// position and scale jitter, and background texture noise.
ToyDataset gen_toy_dataset(uint64_t seed, int num_classes, int count, int height, int width, int channels = 3);

// Deterministic 80/20 split by index (every 5th sample held out).
struct DatasetSplit {
    std::vector<int> train_indices;
    std::vector<int> test_indices;
};
DatasetSplit split_dataset(const ToyDataset& ds);

}  // namespace semadv

#endif  // SEMADV_DATASET_HPP
