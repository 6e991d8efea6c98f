#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "semadv/metrics.hpp"
#include "semadv/perturb.hpp"
#include "semadv/rng.hpp"

using namespace semadv;

namespace {

std::vector<std::vector<double>> gaussian_features(int n, int d, const std::vector<double>& mean, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(d)));
    for (auto& r : rows)
        for (int j = 0; j < d; ++j) r[static_cast<size_t>(j)] = rng.normal() + mean[static_cast<size_t>(j)];
    return rows;
}

}  // namespace

TEST_CASE("compute_asr") {
    std::vector<AttackResult> all(4);
    for (auto& r : all) r.success = true;
    CHECK(compute_asr(all) == doctest::Approx(100.0));
    all[1].success = all[2].success = all[3].success = false;
    CHECK(compute_asr(all) == doctest::Approx(25.0));
    CHECK_THROWS_AS(compute_asr({}), std::invalid_argument);
}

TEST_CASE("FeatureSet moments are consistent") {
    auto rows = gaussian_features(200, 3, {1.0, -2.0, 0.5}, 31);
    FeatureSet fs = FeatureSet::build(rows);
    CHECK(fs.count() == 200);
    CHECK(fs.dim == 3);
    for (int j = 0; j < 3; ++j) {
        double mu = 0;
        for (const auto& r : fs.rows) mu += r[static_cast<size_t>(j)];
        mu /= fs.count();
        CHECK(fs.mu[static_cast<size_t>(j)] == doctest::Approx(mu).epsilon(1e-9));
    }
    // symmetric covariance
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(fs.sigma[static_cast<size_t>(i) * 3 + j] == doctest::Approx(fs.sigma[static_cast<size_t>(j) * 3 + i]));
}

TEST_CASE("FID of a set against itself is zero") {
    auto rows = gaussian_features(64, 4, {0, 0, 0, 0}, 33);
    FeatureSet fs = FeatureSet::build(rows);
    CHECK(std::abs(compute_fid(fs, fs)) < 1e-6);
}

TEST_CASE("FID matches the closed form for shifted Gaussians") {
    // N(0, I) vs N(mu, I) has squared Frechet distance ||mu||^2
    const int d = 8, n = 5000;
    std::vector<double> zero(d, 0.0), mu(d, 1.0);
    FeatureSet a = FeatureSet::build(gaussian_features(n, d, zero, 35));
    FeatureSet b = FeatureSet::build(gaussian_features(n, d, mu, 36));
    const double fid = compute_fid(a, b);
    CHECK(fid == doctest::Approx(8.0).epsilon(0.05));
    CHECK(fid >= 0.0);
}

TEST_CASE("FID input validation") {
    FeatureSet a = FeatureSet::build(gaussian_features(16, 3, {0, 0, 0}, 37));
    FeatureSet b = FeatureSet::build(gaussian_features(16, 4, {0, 0, 0, 0}, 38));
    CHECK_THROWS_AS(compute_fid(a, b), std::invalid_argument);
}

TEST_CASE("KID two-point hand computation") {
    // X = {a, a}, Y = {b, b} with a = e1, b = e2 in d = 2:
    // k(a,a) = k(b,b) = (1/2 + 1)^3 = 3.375, k(a,b) = 1
    // unbiased MMD^2 = 3.375 + 3.375 - 2 = 4.75
    std::vector<std::vector<double>> xa = {{1, 0}, {1, 0}};
    std::vector<std::vector<double>> xb = {{0, 1}, {0, 1}};
    FeatureSet a = FeatureSet::build(xa);
    FeatureSet b = FeatureSet::build(xb);
    CHECK(compute_kid(a, b, 2, 1, 0) == doctest::Approx(4.75));
}

TEST_CASE("KID symmetry under the documented subset derivation") {
    FeatureSet a = FeatureSet::build(gaussian_features(60, 4, {0, 0, 0, 0}, 41));
    FeatureSet b = FeatureSet::build(gaussian_features(80, 4, {1, 0, 0, 0}, 42));
    CHECK(compute_kid(a, b, 20, 8, 7) == doctest::Approx(compute_kid(b, a, 20, 8, 7)));
}

TEST_CASE("KID self-consistency: disjoint halves of one pool stay within the bootstrap spread") {
    auto rows = gaussian_features(400, 4, {0, 0, 0, 0}, 43);
    std::vector<std::vector<double>> ra(rows.begin(), rows.begin() + 200);
    std::vector<std::vector<double>> rb(rows.begin() + 200, rows.end());
    FeatureSet a = FeatureSet::build(ra);
    FeatureSet b = FeatureSet::build(rb);

    std::vector<double> estimates;
    for (uint64_t s = 0; s < 20; ++s) estimates.push_back(compute_kid(a, b, 50, 1, s));
    double mean = 0;
    for (double e : estimates) mean += e;
    mean /= estimates.size();
    double var = 0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= (estimates.size() - 1);
    const double stderr_mean = std::sqrt(var / estimates.size());
    CHECK(std::abs(mean) < 3.0 * stderr_mean + 1e-12);
}

TEST_CASE("KID validation") {
    FeatureSet a = FeatureSet::build(gaussian_features(10, 3, {0, 0, 0}, 44));
    CHECK_THROWS_AS(compute_kid(a, a, 1, 5, 0), std::invalid_argument);
    CHECK_THROWS_AS(compute_kid(a, a, 20, 5, 0), std::invalid_argument);
}

TEST_CASE("natural_perturb: identity strengths return the input bitwise") {
    Rng rng(45);
    Tensor x = Tensor::zeros({3, 16, 16});
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));

    CHECK(natural_perturb(x, PerturbKind::jpeg_like, 100.0).values() == x.values());
    CHECK(natural_perturb(x, PerturbKind::gaussian_blur, 0.0).values() == x.values());
    CHECK(natural_perturb(x, PerturbKind::defocus_blur, 0.0).values() == x.values());
    CHECK(natural_perturb(x, PerturbKind::brightness, 0.0).values() == x.values());
}

TEST_CASE("gaussian blur: normalized kernel preserves a constant image") {
    Tensor x = Tensor::full({1, 16, 16}, 0.37f);
    Tensor y = natural_perturb(x, PerturbKind::gaussian_blur, 1.5);
    for (float v : y.values()) CHECK(v == doctest::Approx(0.37f).epsilon(1e-4));
}

TEST_CASE("natural_perturb outputs stay in the valid image range") {
    Rng rng(47);
    Tensor x = Tensor::zeros({3, 16, 16});
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));
    for (PerturbKind kind : {PerturbKind::jpeg_like, PerturbKind::gaussian_blur, PerturbKind::defocus_blur, PerturbKind::brightness}) {
        const double strength = kind == PerturbKind::jpeg_like ? 30.0 : kind == PerturbKind::brightness ? 0.7 : 1.2;
        Tensor y = natural_perturb(x, kind, strength);
        for (float v : y.values()) {
            CHECK(v <= 1.0f);
            CHECK(v >= -1.0f);
        }
    }
    CHECK_THROWS_AS(perturb_kind_from_string("sepia"), std::invalid_argument);
}

TEST_CASE("jpeg-like compression actually changes a textured image at low quality") {
    Rng rng(49);
    Tensor x = Tensor::zeros({3, 16, 16});
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));
    Tensor y = natural_perturb(x, PerturbKind::jpeg_like, 20.0);
    CHECK(y.values() != x.values());
}

TEST_CASE("transfer_eval: self-transfer equals the campaign ASR") {
    // labels assigned by a fixed rule; success flags recorded the same way the
    // campaign does, so transfer against the same model must reproduce ASR
    ClassifierConfig cfg;
    cfg.widths = {4, 4, 8, 8};
    cfg.num_classes = 4;
    cfg.init_seed = 51;
    Classifier target(cfg);

    Rng rng(53);
    std::vector<AttackResult> results;
    std::vector<Tensor> advs;
    std::vector<int> orig_labels;
    for (int i = 0; i < 12; ++i) {
        Tensor adv = Tensor::zeros({3, 16, 16});
        for (auto& v : adv.values()) v = static_cast<float>(rng.uniform(-1, 1));
        AttackResult r;
        r.original_label = i % 4;
        r.adversarial_label = target.predict(adv);
        r.success = r.adversarial_label != r.original_label;
        r.adversarial = adv;
        results.push_back(r);
        advs.push_back(adv);
        orig_labels.push_back(r.original_label);
    }
    std::vector<Classifier*> victims = {&target};
    const std::vector<double> tr = transfer_eval(advs, orig_labels, victims);
    CHECK(tr[0] == doctest::Approx(compute_asr(results)));

    CHECK_THROWS_AS(transfer_eval({}, {}, victims), std::invalid_argument);
}
