#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "semadv/diffusion.hpp"
#include "semadv/rng.hpp"

using namespace semadv;

using DTensor = TensorT<double>;

namespace {

// model returning a fixed tensor regardless of (x, t)
template <typename T>
struct ConstModel {
    TensorT<T> eps;
    TensorT<T> forward(TensorT<T> x, int) {
        if (!same_shape(x.shape(), eps.shape())) throw std::invalid_argument("const model shape");
        // participate in the graph so gradients flow through the chain structure
        return add(scalar_mul(x, T(0)), eps);
    }
};

template <typename T>
struct ZeroModel {
    TensorT<T> forward(TensorT<T> x, int) { return scalar_mul(x, T(0)); }
};

// one-layer conv denoiser with fixed weights, for chain differentiation checks
struct TinyDenoiser {
    TensorT<double> w;
    TensorT<double> forward(TensorT<double> x, int t) {
        TensorT<double> h = conv2d(x, w, 1, 1);
        return scalar_mul(silu(h), 0.05 + 0.001 * t);
    }
};

}  // namespace

TEST_CASE("build_schedule tables") {
    auto s1 = build_schedule<float>(1, 0.5f, 0.5f, ScheduleMode::ddim);
    CHECK(s1.alpha_bar[1] == doctest::Approx(0.5f));

    auto s3 = build_schedule<float>(3, 0.1f, 0.1f, ScheduleMode::ddim);
    CHECK(s3.alpha_bar[1] == doctest::Approx(0.9f));
    CHECK(s3.alpha_bar[2] == doctest::Approx(0.81f));
    CHECK(s3.alpha_bar[3] == doctest::Approx(0.729f));
    for (int t = 1; t <= 3; ++t) CHECK(s3.sigma[t] == 0.0f);

    auto s = build_schedule<double>(1000, 1e-4, 0.02, ScheduleMode::ddim);
    double prod = 1.0;
    for (int t = 1; t <= 1000; ++t) {
        prod *= s.alpha[t];
        CHECK(std::abs(s.alpha_bar[t] - prod) / prod < 1e-6);
        if (t > 1) CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
        CHECK(s.beta[t] > 0.0);
        CHECK(s.beta[t] < 1.0);
    }
    CHECK(s.alpha_bar[1000] < 1e-4);

    auto sp = build_schedule<float>(4, 0.25f, 0.25f, ScheduleMode::ddpm);
    CHECK(sp.sigma[2] == doctest::Approx(std::sqrt(0.25f)));

    CHECK_THROWS_AS(build_schedule<float>(0, 0.1f, 0.2f, ScheduleMode::ddim), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule<float>(10, 0.0f, 0.2f, ScheduleMode::ddim), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule<float>(10, 0.3f, 0.2f, ScheduleMode::ddim), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule<float>(10, 0.3f, 1.0f, ScheduleMode::ddim), std::invalid_argument);
}

TEST_CASE("step plans") {
    StepPlan plan = make_step_plan(1000, 40);
    CHECK(plan.length() == 40);
    CHECK(plan.steps.front() == 25);
    CHECK(plan.steps.back() == 1000);
    plan.validate(1000);

    StepPlan bad;
    bad.steps = {5, 5, 7};
    CHECK_THROWS_AS(bad.validate(1000), std::invalid_argument);
    StepPlan out_of_range;
    out_of_range.steps = {5, 2000};
    CHECK_THROWS_AS(out_of_range.validate(1000), std::invalid_argument);
}

TEST_CASE("diffuse closed form") {
    auto s = build_schedule<float>(10, 0.05f, 0.05f, ScheduleMode::ddim);

    Tensor x0 = Tensor::from({1, 1, 2}, {0.5f, -0.25f});
    Tensor zero = Tensor::zeros(x0.shape());
    Tensor a = diffuse(x0, 4, zero, s);
    const float root_ab = std::sqrt(s.alpha_bar[4]);
    CHECK(a.values()[0] == doctest::Approx(0.5f * root_ab));
    CHECK(a.values()[1] == doctest::Approx(-0.25f * root_ab));

    Tensor w = Tensor::from({1, 1, 2}, {1.0f, 2.0f});
    Tensor b = diffuse(zero, 4, w, s);
    const float root_1mab = std::sqrt(1.0f - s.alpha_bar[4]);
    CHECK(b.values()[0] == doctest::Approx(root_1mab));
    CHECK(b.values()[1] == doctest::Approx(2.0f * root_1mab));

    // hand arithmetic at alpha_bar = 0.64: 0.8 * 1 + 0.6 * 1 = 1.4
    NoiseSchedule hand;
    hand.total_steps = 1;
    hand.beta = {0, 0.36f};
    hand.alpha = {0, 0.64f};
    hand.alpha_bar = {1.0f, 0.64f};
    hand.sigma = {0, 0};
    Tensor one = Tensor::from({1, 1, 1}, {1.0f});
    CHECK(diffuse(one, 1, one, hand).values()[0] == doctest::Approx(1.4f));

    CHECK_THROWS_AS(diffuse(x0, 99, zero, s), std::invalid_argument);
    CHECK_THROWS_AS(diffuse(x0, 4, Tensor::zeros({1, 1, 3}), s), std::invalid_argument);
}

TEST_CASE("ddpm_train_loss") {
    auto s = build_schedule<float>(10, 0.05f, 0.05f, ScheduleMode::ddim);
    Tensor x0 = Tensor::from({1, 2, 2}, {0.1f, -0.2f, 0.3f, -0.4f});
    Tensor w = Tensor::full({1, 2, 2}, 1.0f);

    ConstModel<float> oracle{w};
    CHECK(ddpm_train_loss(oracle, x0, 5, w, s).item() == doctest::Approx(0.0f));

    ZeroModel<float> zero;
    CHECK(ddpm_train_loss(zero, x0, 5, w, s).item() == doctest::Approx(4.0f));  // n unit entries
}

TEST_CASE("ddpm_sample_step algebra") {
    auto s = build_schedule<float>(10, 0.19f, 0.19f, ScheduleMode::ddim);  // sigma = 0
    ZeroModel<float> zero;
    Tensor x = Tensor::from({1, 1, 2}, {0.9f, -0.9f});

    Tensor next = ddpm_sample_step(zero, x, 5, Tensor{}, s);
    const float inv_root_a = 1.0f / std::sqrt(s.alpha[5]);
    CHECK(next.values()[0] == doctest::Approx(0.9f * inv_root_a));
    CHECK(next.values()[1] == doctest::Approx(-0.9f * inv_root_a));

    // sigma = 0 makes z irrelevant
    Tensor z = Tensor::full(x.shape(), 123.0f);
    CHECK(ddpm_sample_step(zero, x, 5, z, s).values() == next.values());

    // alpha_t = 1 and zero prediction is the identity
    NoiseSchedule ident;
    ident.total_steps = 1;
    ident.beta = {0, 1e-8f};
    ident.alpha = {0, 1.0f};
    ident.alpha_bar = {1.0f, 0.5f};
    ident.sigma = {0, 0};
    CHECK(ddpm_sample_step(zero, x, 1, Tensor{}, ident).values() == x.values());
}

TEST_CASE("estimate_x0") {
    auto s = build_schedule<float>(10, 0.05f, 0.05f, ScheduleMode::ddim);
    ZeroModel<float> zero;
    Tensor x = Tensor::from({1, 1, 2}, {0.4f, -0.6f});
    Tensor est = estimate_x0(zero, x, 7, s);
    const float inv = 1.0f / std::sqrt(s.alpha_bar[7]);
    CHECK(est.values()[0] == doctest::Approx(0.4f * inv));
    CHECK(est.values()[1] == doctest::Approx(-0.6f * inv));

    // oracle inversion of the closed-form diffusion
    Tensor x0 = Tensor::from({1, 1, 2}, {0.25f, -0.75f});
    Tensor w = Tensor::from({1, 1, 2}, {0.5f, 1.5f});
    Tensor xt = diffuse(x0, 9, w, s);
    ConstModel<float> oracle{w};
    Tensor back = estimate_x0(oracle, xt, 9, s);
    CHECK(back.values()[0] == doctest::Approx(0.25f).epsilon(1e-5));
    CHECK(back.values()[1] == doctest::Approx(-0.75f).epsilon(1e-5));

    // hand evaluation at alpha_bar = 0.25, prediction 0.5:
    // (1 - sqrt(0.75)*0.5) / 0.5 = 1.1339746
    NoiseSchedule hand;
    hand.total_steps = 1;
    hand.beta = {0, 0.75f};
    hand.alpha = {0, 0.25f};
    hand.alpha_bar = {1.0f, 0.25f};
    hand.sigma = {0, 0};
    ConstModel<float> half{Tensor::from({1, 1, 1}, {0.5f})};
    Tensor one = Tensor::from({1, 1, 1}, {1.0f});
    CHECK(estimate_x0(half, one, 1, hand).values()[0] == doctest::Approx(1.1339746f));
}

TEST_CASE("ddim_step algebra and determinism") {
    auto s = build_schedule<float>(20, 0.03f, 0.03f, ScheduleMode::ddim);
    ZeroModel<float> zero;
    Tensor x = Tensor::from({1, 1, 2}, {0.5f, -0.5f});

    Tensor prev = ddim_step(zero, x, 10, 6, Tensor{}, s);
    const float scale = std::sqrt(s.alpha_bar[6] / s.alpha_bar[10]);
    CHECK(prev.values()[0] == doctest::Approx(0.5f * scale));
    CHECK(prev.values()[1] == doctest::Approx(-0.5f * scale));

    Tensor again = ddim_step(zero, x, 10, 6, Tensor{}, s);
    CHECK(prev.values() == again.values());

    CHECK_THROWS_AS(ddim_step(zero, x, 5, 9, Tensor{}, s), std::invalid_argument);
}

TEST_CASE("oracle denoiser: full chain recovers x0") {
    auto s = build_schedule<float>(100, 1e-3f, 0.02f, ScheduleMode::ddim);
    Rng rng(3);
    Tensor x0 = Tensor::zeros({1, 2, 2});
    for (auto& v : x0.values()) v = static_cast<float>(rng.uniform(-0.9, 0.9));
    Tensor w = Tensor::zeros(x0.shape());
    rng.fill_normal(w.values());

    Tensor xT = diffuse(x0, 100, w, s);
    ConstModel<float> oracle{w};
    StepPlan plan = make_step_plan(100, 20);
    Tensor rec = sample(oracle, xT, plan, s);
    for (size_t i = 0; i < rec.values().size(); ++i)
        CHECK(std::abs(rec.values()[i] - x0.values()[i]) < 1e-5f);
}

TEST_CASE("sample: degenerate plan, determinism") {
    auto s = build_schedule<float>(10, 0.05f, 0.05f, ScheduleMode::ddim);
    ZeroModel<float> zero;
    Tensor xT = Tensor::from({1, 1, 2}, {0.3f, -0.3f});

    StepPlan single;
    single.steps = {10};
    Tensor via_sample = sample(zero, xT, single, s);
    Tensor via_step = clamp(ddim_step(zero, xT, 10, 0, Tensor{}, s), -1.0f, 1.0f);
    CHECK(via_sample.values() == via_step.values());

    StepPlan plan = make_step_plan(10, 4);
    CHECK(sample(zero, xT, plan, s).values() == sample(zero, xT, plan, s).values());
}

TEST_CASE("ddim_invert: zero model scales by sqrt(alpha_bar_T)") {
    auto s = build_schedule<float>(50, 0.01f, 0.01f, ScheduleMode::ddim);
    ZeroModel<float> zero;
    Tensor x0 = Tensor::from({1, 1, 2}, {0.5f, -0.25f});
    StepPlan plan = make_step_plan(50, 10);
    Tensor latent = ddim_invert(zero, x0, plan, s);
    const float scale = std::sqrt(s.alpha_bar[50]);
    CHECK(latent.values()[0] == doctest::Approx(0.5f * scale));
    CHECK(latent.values()[1] == doctest::Approx(-0.25f * scale));

    Tensor latent2 = ddim_invert(zero, x0, plan, s);
    CHECK(latent.values() == latent2.values());
}

TEST_CASE("finite differences through a 3-step unrolled chain") {
    auto s = build_schedule<double>(10, 1e-4, 1e-3, ScheduleMode::ddim);
    Rng rng(11);
    TinyDenoiser model;
    model.w = TensorT<double>::zeros({1, 1, 3, 3});
    for (auto& v : model.w.values()) v = rng.uniform(-0.3, 0.3);

    StepPlan plan;
    plan.steps = {3, 6, 10};

    DTensor xT = DTensor::zeros({1, 3, 3});
    for (auto& v : xT.values()) v = rng.uniform(-0.4, 0.4);

    auto fn = [&](DTensor& x) { return mean(square(sample(model, x, plan, s, true))); };
    const double err = finite_diff_check<double>(fn, xT, 1e-5);
    CHECK(err < 1e-3);
}
