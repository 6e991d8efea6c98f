#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semadv/campaign.hpp"
#include "semadv/checkpoint.hpp"
#include "semadv/classifier.hpp"
#include "semadv/dataset.hpp"
#include "semadv/denoiser.hpp"
#include "semadv/diffusion.hpp"
#include "semadv/losses.hpp"
#include "semadv/training.hpp"

using namespace semadv;
namespace fs = std::filesystem;

namespace {

ToyDataset tiny_dataset(uint64_t seed = 21, int n = 80) { return gen_toy_dataset(seed, 4, n, 16, 16, 3); }

ClassifierConfig tiny_classifier_arch(uint64_t init_seed = 3) {
    ClassifierConfig cfg;
    cfg.widths = {8, 12, 16, 16};
    cfg.init_seed = init_seed;
    return cfg;
}

std::string tmp_path(const std::string& name) { return (fs::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("denoiser with zero-initialized output layer predicts zero") {
    DenoiserConfig cfg;
    cfg.base_width = 8;
    Denoiser model(cfg);
    Tensor x = Tensor::zeros({3, 16, 16});
    Rng rng(5);
    rng.fill_normal(x.values(), 0.7);
    Tensor out = model.forward(x, 500);
    CHECK(out.shape() == x.shape());
    for (float v : out.values()) CHECK(v == 0.0f);
}

TEST_CASE("denoiser input-gradient passes the finite-difference oracle") {
    DenoiserConfigT<double> cfg;
    cfg.channels = 1;
    cfg.height = 8;
    cfg.width = 8;
    cfg.base_width = 4;
    cfg.emb_dim = 8;
    cfg.init_seed = 17;
    DenoiserT<double> model(cfg);
    // give the zero-initialized output layer nonzero weights so the check is informative
    Rng rng(23);
    rng.fill_normal(model.params().at("out.w").values(), 0.05);
    for (auto& p : model.params().entries()) p.second.set_requires_grad(false);

    TensorT<double> x = TensorT<double>::zeros({1, 8, 8});
    for (auto& v : x.values()) v = rng.uniform(-0.5, 0.5);
    auto fn = [&](TensorT<double>& t) { return mean(square(model.forward(t, 3))); };
    CHECK(finite_diff_check<double>(fn, x, 1e-5) < 1e-3);
}

TEST_CASE("classifier forward contract") {
    ClassifierConfig cfg = tiny_classifier_arch();
    Classifier model(cfg);
    Tensor x = Tensor::zeros({3, 16, 16});
    Rng rng(9);
    rng.fill_normal(x.values(), 0.4);

    auto out = model.forward(x);
    CHECK(out.logits.shape() == Shape{4});
    CHECK(out.activations.empty());

    Tensor probs = softmax(out.logits, 0);
    float total = 0;
    for (float v : probs.values()) total += v;
    CHECK(total == doctest::Approx(1.0f).epsilon(1e-6));

    auto captured = model.forward(x, {"conv2", "features", "preact1"});
    CHECK(captured.activations.count("conv2") == 1);
    CHECK(captured.activations.count("features") == 1);
    CHECK(captured.activations.at("features").shape() == Shape{16});
    CHECK_THROWS_AS(model.forward(x, {"conv9"}), std::invalid_argument);
}

TEST_CASE("train_classifier memorizes a single sample") {
    ToyDataset ds = tiny_dataset(31, 8);
    DatasetSplit split;
    split.train_indices = {0};
    split.test_indices = {0};
    TrainConfig tc{200, 0.05, 1, 77, "sgd"};
    auto res = train_classifier(ds, split, tiny_classifier_arch(), tc);
    CHECK(res.train_accuracy == doctest::Approx(1.0));
}

TEST_CASE("training determinism: same seed gives bit-identical parameters") {
    ToyDataset ds = tiny_dataset(33, 40);
    DatasetSplit split = split_dataset(ds);
    TrainConfig tc{3, 0.05, 8, 123, "sgd"};
    auto a = train_classifier(ds, split, tiny_classifier_arch(), tc);
    auto b = train_classifier(ds, split, tiny_classifier_arch(), tc);
    CHECK(a.model.params().bit_identical(b.model.params()));

    DenoiserConfig dc;
    dc.base_width = 4;
    dc.emb_dim = 8;
    NoiseSchedule sched = build_schedule<float>(50, 1e-3f, 0.02f, ScheduleMode::ddim);
    TrainConfig td{1, 1e-3, 8, 5, "adam"};
    auto d1 = train_denoiser(ds, split, sched, dc, td);
    auto d2 = train_denoiser(ds, split, sched, dc, td);
    CHECK(d1.model.params().bit_identical(d2.model.params()));
}

TEST_CASE("train_denoiser reduces the validation loss") {
    ToyDataset ds = tiny_dataset(35, 40);
    DatasetSplit split = split_dataset(ds);
    DenoiserConfig dc;
    dc.base_width = 8;
    NoiseSchedule sched = default_schedule();

    Denoiser untrained(dc);
    std::vector<Tensor> val;
    for (int i : split.test_indices) val.push_back(ds.images[static_cast<size_t>(i)]);
    const double loss_init = eval_denoiser_loss(untrained, val, sched, 99);

    TrainConfig tc{4, 2e-3, 8, 5, "adam"};
    auto res = train_denoiser(ds, split, sched, dc, tc);
    const double loss_trained = eval_denoiser_loss(res.model, val, sched, 99);
    CHECK(loss_trained < loss_init);
}

TEST_CASE("overfit one denoising sample: loss decreases monotonically") {
    DenoiserConfig dc;
    dc.base_width = 4;
    dc.emb_dim = 8;
    Denoiser model(dc);
    NoiseSchedule sched = default_schedule();
    Rng rng(3);
    Tensor x0 = Tensor::zeros({3, 16, 16});
    rng.fill_normal(x0.values(), 0.5);
    Tensor w = Tensor::zeros(x0.shape());
    rng.fill_normal(w.values());
    const int t = 400;

    double prev = 1e30;
    for (int step = 0; step < 50; ++step) {
        Tape tape;
        TapeScope<float> scope(tape);
        Tensor loss = ddpm_train_loss(model, x0, t, w, sched);
        const double now = loss.item();
        CHECK(now <= prev + 1e-6);
        prev = now;
        model.params().zero_grad();
        tape.backward_from(loss);
        for (auto& p : model.params().entries()) {
            auto& v = p.second.values();
            const auto& g = p.second.grad();
            for (size_t i = 0; i < v.size(); ++i) v[i] -= 1e-5f * g[i];
        }
    }
}

TEST_CASE("trained denoiser depends on the timestep") {
    ToyDataset ds = tiny_dataset(37, 40);
    DatasetSplit split = split_dataset(ds);
    DenoiserConfig dc;
    dc.base_width = 4;
    dc.emb_dim = 8;
    NoiseSchedule sched = default_schedule();
    TrainConfig tc{2, 1e-3, 8, 5, "adam"};
    auto res = train_denoiser(ds, split, sched, dc, tc);

    Tensor x = ds.images[0].detached_clone();
    NoTapeScope<float> no_tape;
    Tensor a = res.model.forward(x, 100);
    Tensor b = res.model.forward(x, 900);
    CHECK(a.values() != b.values());
}

TEST_CASE("kl_divergence values and properties") {
    // two classes: p = softmax(ln 2, 0) = (2/3, 1/3), q = (1/2, 1/2)
    Tensor p = Tensor::from({2}, {std::log(2.0f), 0.0f});
    Tensor q = Tensor::from({2}, {0.0f, 0.0f});
    const double expect = (2.0 / 3.0) * std::log(4.0 / 3.0) + (1.0 / 3.0) * std::log(2.0 / 3.0);
    CHECK(kl_divergence(p, q).item() == doctest::Approx(expect).epsilon(1e-5));

    CHECK(kl_divergence(p, p).item() == doctest::Approx(0.0));

    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        Tensor a = Tensor::zeros({5});
        Tensor b = Tensor::zeros({5});
        for (auto& v : a.values()) v = static_cast<float>(rng.uniform(-4, 4));
        for (auto& v : b.values()) v = static_cast<float>(rng.uniform(-4, 4));
        CHECK(kl_divergence(a, b).item() >= -1e-6f);
    }

    CHECK_THROWS_AS(kl_divergence(Tensor::zeros({2}), Tensor::zeros({3})), std::invalid_argument);
}

TEST_CASE("perceptual distance is a pseudometric with sensible ordering") {
    ToyDataset ds = tiny_dataset(43, 80);
    DatasetSplit split = split_dataset(ds);
    TrainConfig tc{8, 3e-3, 8, 7, "adam"};
    auto res = train_classifier(ds, split, tiny_classifier_arch(11), tc);
    Classifier& ex = res.model;

    Tensor x = ds.images[0];
    Tensor y = ds.images[1];  // different class glyph
    CHECK(perceptual_distance(ex, x, x.detached_clone()).item() == doctest::Approx(0.0));
    CHECK(perceptual_distance(ex, x, y).item() == doctest::Approx(perceptual_distance(ex, y, x).item()));
    CHECK(perceptual_distance(ex, x, y).item() >= 0.0f);

    // a lightly smoothed copy stays closer than an unrelated image
    Tensor blurred = x.detached_clone();
    for (int c = 0; c < 3; ++c)
        for (int yy = 1; yy < 15; ++yy)
            for (int xx = 1; xx < 15; ++xx) {
                float acc = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) acc += x.values()[(c * 16 + yy + dy) * 16 + xx + dx];
                blurred.values()[(c * 16 + yy) * 16 + xx] = acc / 9.0f;
            }
    CHECK(perceptual_distance(ex, x, blurred).item() < perceptual_distance(ex, x, y).item());

    CHECK_THROWS_AS(perceptual_distance(ex, x, Tensor::zeros({3, 8, 8})), std::invalid_argument);
}

TEST_CASE("feature_embed determinism, dimension, and class separation") {
    ToyDataset ds = tiny_dataset(45, 120);
    DatasetSplit split = split_dataset(ds);
    TrainConfig tc{8, 3e-3, 8, 7, "adam"};
    auto res = train_classifier(ds, split, tiny_classifier_arch(13), tc);

    auto f0 = feature_embed(res.model, ds.images[0]);
    auto f0b = feature_embed(res.model, ds.images[0]);
    CHECK(f0 == f0b);
    CHECK(static_cast<int>(f0.size()) == res.model.feature_dim());

    double intra = 0, inter = 0;
    int n_intra = 0, n_inter = 0;
    std::vector<std::vector<float>> feats;
    for (size_t i = 0; i < 24; ++i) feats.push_back(feature_embed(res.model, ds.images[i]));
    for (size_t i = 0; i < feats.size(); ++i)
        for (size_t j = i + 1; j < feats.size(); ++j) {
            double d = 0;
            for (size_t k = 0; k < feats[i].size(); ++k) d += (feats[i][k] - feats[j][k]) * (feats[i][k] - feats[j][k]);
            d = std::sqrt(d);
            if (ds.labels[i] == ds.labels[j]) {
                intra += d;
                ++n_intra;
            } else {
                inter += d;
                ++n_inter;
            }
        }
    CHECK(inter / n_inter > intra / n_intra);
}

TEST_CASE("checkpoint round trip is bit-exact and validates structure") {
    ClassifierConfig cfg = tiny_classifier_arch(19);
    Classifier model(cfg);
    const std::string path = tmp_path("semadv_test_cls.ckpt");
    CheckpointMeta meta{12345, 7, 0xabcdef0123456789ull};
    save_checkpoint(model, path, meta);

    Classifier restored(cfg);
    CheckpointMeta got = load_checkpoint(restored, path);
    CHECK(restored.params().bit_identical(model.params()));
    CHECK(got.seed == meta.seed);
    CHECK(got.epochs == meta.epochs);
    CHECK(got.dataset_fingerprint == meta.dataset_fingerprint);

    // save -> load -> save produces byte-identical files
    const std::string path2 = tmp_path("semadv_test_cls2.ckpt");
    save_checkpoint(restored, path2, got);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);

    // truncation is an error, not a crash
    {
        std::ofstream trunc(tmp_path("semadv_trunc.ckpt"), std::ios::binary);
        trunc.write(b1.data(), static_cast<std::streamsize>(b1.size() / 2));
    }
    Classifier victim(cfg);
    CHECK_THROWS_AS(load_checkpoint(victim, tmp_path("semadv_trunc.ckpt")), std::runtime_error);

    // loading a classifier checkpoint into a denoiser is a shape mismatch
    DenoiserConfig dc;
    dc.base_width = 4;
    Denoiser wrong(dc);
    CHECK_THROWS_AS(load_checkpoint(wrong, path), std::runtime_error);

    // bad magic
    {
        std::ofstream bad(tmp_path("semadv_badmagic.ckpt"), std::ios::binary);
        bad << "NOTMAGIC" << b1.substr(8);
    }
    Classifier victim2(cfg);
    CHECK_THROWS_AS(load_checkpoint(victim2, tmp_path("semadv_badmagic.ckpt")), std::runtime_error);

    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("classifier reaches high accuracy on the toy task") {
    ToyDataset ds = tiny_dataset(47, 160);
    DatasetSplit split = split_dataset(ds);
    TrainConfig tc{10, 3e-3, 8, 7, "adam"};
    auto res = train_classifier(ds, split, tiny_classifier_arch(23), tc);
    CHECK(res.test_accuracy >= 0.9);  // the full-size >= 95% bound runs in the acceptance suite
}
