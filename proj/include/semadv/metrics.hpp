#ifndef SEMADV_METRICS_HPP
#define SEMADV_METRICS_HPP

// Campaign metrics: attack success rate, Fréchet distance and kernel MMD over
// locally extracted features, and transfer evaluation.

#include <cstdint>
#include <vector>

#include "semadv/attack_result.hpp"
#include "semadv/classifier.hpp"

namespace semadv {

// n x d feature matrix with consistent mean and covariance (rows / n-1).
struct FeatureSet {
    int dim = 0;
    std::vector<std::vector<double>> rows;
    std::vector<double> mu;
    std::vector<double> sigma;  // d x d, row-major

    static FeatureSet build(const std::vector<std::vector<double>>& features);
    int count() const { return static_cast<int>(rows.size()); }
};

// 100 * successes / attempts
double compute_asr(const std::vector<AttackResult>& results);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), matrix root by symmetric
// eigendecomposition of Sa^(1/2) Sb Sa^(1/2); negative eigenvalues clamp to 0.
// Warns on stderr when n < d.
double compute_fid(const FeatureSet& a, const FeatureSet& b);

// Unbiased MMD^2 with kernel (x.y/d + 1)^3 averaged over seeded random
// subsets. Subset indices are derived from (seed, round, set size) so the
// estimate is symmetric in its arguments.
double compute_kid(const FeatureSet& a, const FeatureSet& b, int subset_size, int subsets, uint64_t seed);

// Fraction (in percent) of images whose victim label differs from the
// original label, one entry per victim.
std::vector<double> transfer_eval(const std::vector<Tensor>& adv_images, const std::vector<int>& original_labels,
                                  std::vector<Classifier*>& victims);

}  // namespace semadv

#endif  // SEMADV_METRICS_HPP
