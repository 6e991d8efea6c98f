#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "semadv/losses.hpp"
#include "semadv/rng.hpp"
#include "semadv/tensor.hpp"

using namespace semadv;

using DTensor = TensorT<double>;
using DTape = TapeT<double>;

namespace {

DTensor randn(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    DTensor t = DTensor::zeros(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("elementwise forward values") {
    auto a = Tensor::from({2}, {1, 2});
    auto b = Tensor::from({2}, {3, 4});
    auto s = add(a, b);
    CHECK(s.values() == std::vector<float>{4, 6});

    auto sm = softmax(Tensor::from({2}, {0, 0}), 0);
    CHECK(sm.values()[0] == doctest::Approx(0.5));
    CHECK(sm.values()[1] == doctest::Approx(0.5));

    auto d = sub(b, a);
    CHECK(d.values() == std::vector<float>{2, 2});
    auto m = mul(a, b);
    CHECK(m.values() == std::vector<float>{3, 8});
    auto q = div(b, a);
    CHECK(q.values() == std::vector<float>{3, 2});
}

TEST_CASE("conv2d with a 1x1 doubling kernel scales the input") {
    Tensor x = Tensor::full({1, 3, 3}, 1.0f);
    Tensor w = Tensor::from({1, 1, 1, 1}, {2.0f});
    Tensor y = conv2d(x, w, 1, 0);
    CHECK(y.shape() == Shape{1, 3, 3});
    for (float v : y.values()) CHECK(v == doctest::Approx(2.0f));
}

TEST_CASE("backward of sum of squares") {
    Tensor x = Tensor::from({3}, {1, 2, 3});
    x.set_requires_grad(true);
    Tape tape;
    TapeScope<float> scope(tape);
    Tensor loss = sum(square(x));
    tape.backward_from(loss);
    CHECK(x.grad() == std::vector<float>{2, 4, 6});
}

TEST_CASE("backward of mean") {
    Tensor x = Tensor::from({4}, {1, 2, 3, 4});
    x.set_requires_grad(true);
    Tape tape;
    TapeScope<float> scope(tape);
    Tensor loss = mean(x);
    tape.backward_from(loss);
    for (float g : x.grad()) CHECK(g == doctest::Approx(0.25f));
}

TEST_CASE("KL gradient vanishes at equal logits") {
    Tensor a = Tensor::from({3}, {0.3f, -0.7f, 1.1f});
    Tensor b = a.detached_clone();
    b.set_requires_grad(true);
    Tape tape;
    TapeScope<float> scope(tape);
    Tensor loss = kl_divergence(a, b);
    CHECK(loss.item() == doctest::Approx(0.0f).epsilon(1e-7));
    tape.backward_from(loss);
    for (float g : b.grad()) CHECK(std::abs(g) < 1e-6f);
}

TEST_CASE("gradient accumulates across uses and linearity holds") {
    // d/dx [sum(x^2) + mean(x)] accumulated in one pass equals the sum of
    // separate passes
    auto run = [](bool combined) {
        Tensor x = Tensor::from({2}, {1.5f, -2.0f});
        x.set_requires_grad(true);
        if (combined) {
            Tape tape;
            TapeScope<float> scope(tape);
            Tensor loss = add(sum(square(x)), mean(x));
            tape.backward_from(loss);
        } else {
            {
                Tape tape;
                TapeScope<float> scope(tape);
                Tensor l1 = sum(square(x));
                tape.backward_from(l1);
            }
            {
                Tape tape;
                TapeScope<float> scope(tape);
                Tensor l2 = mean(x);
                tape.backward_from(l2);
            }
        }
        return x.grad();
    };
    CHECK(run(true) == run(false));
}

TEST_CASE("deterministic forward: identical operands give bit-identical outputs") {
    Rng rng(42);
    DTensor x = randn({2, 6, 6}, rng);
    DTensor w = randn({3, 2, 3, 3}, rng);
    DTensor y1 = conv2d(x, w, 1, 1);
    DTensor y2 = conv2d(x, w, 1, 1);
    CHECK(y1.values() == y2.values());
}

TEST_CASE("error paths") {
    CHECK_THROWS_AS(add(Tensor::from({2}, {1, 2}), Tensor::from({3}, {1, 2, 3})), std::invalid_argument);
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), std::invalid_argument);

    // non-finite outputs are reported with the producing op kind
    try {
        log_op(Tensor::from({1}, {-1.0f}));
        FAIL("expected non-finite error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("log") != std::string::npos);
    }

    // backward preconditions: scalar loss, non-empty tape, attached graph
    {
        Tensor x = Tensor::from({2}, {1, 2});
        x.set_requires_grad(true);
        Tape tape;
        TapeScope<float> scope(tape);
        Tensor y = square(x);
        CHECK_THROWS_AS(tape.backward_from(y), std::invalid_argument);
    }
    {
        Tape tape;
        Tensor loss = Tensor::scalar(1.0f);
        CHECK_THROWS_AS(tape.backward_from(loss), std::runtime_error);
    }
    {
        Tensor x = Tensor::from({2}, {1, 2});
        x.set_requires_grad(true);
        Tensor detached;
        {
            Tape other;
            TapeScope<float> scope(other);
            detached = sum(x);
        }
        Tape tape;
        TapeScope<float> scope(tape);
        Tensor unused = sum(square(x));
        (void)unused;
        CHECK_THROWS_AS(tape.backward_from(detached), std::runtime_error);
    }
}

TEST_CASE("finite differences: spec oracle points") {
    DTensor x = DTensor::from({2}, {1.0, -1.0});
    auto fn = [](DTensor& t) { return sum(square(t)); };
    CHECK(finite_diff_check<double>(fn, x, 1e-4) < 1e-6);

    DTensor xr = DTensor::from({2}, {1.0, 2.0});
    auto fn_relu = [](DTensor& t) { return sum(relu(t)); };
    CHECK(finite_diff_check<double>(fn_relu, xr, 1e-4) < 1e-6);
}

TEST_CASE("finite differences: every primitive at randomized smooth points") {
    Rng rng(7);
    const double h = 1e-5;
    const double tol = 1e-4;

    auto check = [&](const char* name, const std::function<DTensor(DTensor&)>& fn, DTensor x) {
        const double err = finite_diff_check<double>(fn, x, h);
        INFO(name, " max rel err ", err);
        CHECK(err < tol);
    };

    DTensor c6 = randn({6}, rng);
    DTensor c233 = randn({2, 3, 3}, rng);

    check("add", [&](DTensor& x) { return sum(square(add(x, c6))); }, randn({6}, rng));
    check("sub.a", [&](DTensor& x) { return sum(square(sub(x, c6))); }, randn({6}, rng));
    check("sub.b", [&](DTensor& x) { return sum(square(sub(c6, x))); }, randn({6}, rng));
    check("mul.a", [&](DTensor& x) { return sum(square(mul(x, c6))); }, randn({6}, rng));
    check("mul.b", [&](DTensor& x) { return sum(square(mul(c6, x))); }, randn({6}, rng));
    check("mul.scalar_b", [&](DTensor& x) { return sum(square(mul(c6, x))); }, randn({1}, rng, 0.5, 1.5));
    check("div.a", [&](DTensor& x) { return sum(square(div(x, c6))); }, randn({6}, rng, 0.5, 1.5));
    check("div.b", [&](DTensor& x) { return sum(square(div(c6, x))); }, randn({6}, rng, 0.5, 1.5));
    check("div.scalar_b", [&](DTensor& x) { return sum(square(div(c6, x))); }, randn({1}, rng, 0.5, 1.5));
    check("scalar_mul", [&](DTensor& x) { return sum(square(scalar_mul(x, 1.7))); }, randn({6}, rng));

    DTensor m23 = randn({2, 3}, rng);
    DTensor m32 = randn({3, 2}, rng);
    check("matmul.a", [&](DTensor& x) { return sum(square(matmul(x, m32))); }, randn({2, 3}, rng));
    check("matmul.b", [&](DTensor& x) { return sum(square(matmul(m23, x))); }, randn({3, 2}, rng));

    DTensor cw = randn({3, 2, 3, 3}, rng, -0.5, 0.5);
    DTensor cb = randn({3}, rng);
    check("conv2d.x", [&](DTensor& x) { return sum(square(conv2d(x, cw, cb, 1, 1))); }, randn({2, 5, 5}, rng));
    check("conv2d.w", [&](DTensor& x) { return sum(square(conv2d(c233, x, cb, 1, 1))); }, randn({3, 2, 3, 3}, rng, -0.5, 0.5));
    check("conv2d.b", [&](DTensor& x) { return sum(square(conv2d(c233, cw, x, 1, 1))); }, randn({3}, rng));
    check("conv2d.stride2", [&](DTensor& x) { return sum(square(conv2d(x, cw, cb, 2, 1))); }, randn({2, 5, 5}, rng));

    DTensor away_from_kink = DTensor::from({4}, {0.8, -0.9, 1.4, -0.3});
    check("relu", [&](DTensor& x) { return sum(square(relu(x))); }, away_from_kink);
    check("silu", [&](DTensor& x) { return sum(square(silu(x))); }, randn({6}, rng));
    check("avg_pool2d", [&](DTensor& x) { return sum(square(avg_pool2d(x, 2))); }, randn({1, 4, 4}, rng));
    check("upsample_nearest", [&](DTensor& x) { return sum(square(upsample_nearest(x, 2))); }, randn({1, 3, 3}, rng));
    check("reshape", [&](DTensor& x) { return sum(square(reshape(x, {3, 2}))); }, randn({6}, rng));
    check("concat.a", [&](DTensor& x) { return sum(square(concat(x, c233, 0))); }, randn({1, 3, 3}, rng));
    check("concat.b", [&](DTensor& x) { return sum(square(concat(c233, x, 0))); }, randn({1, 3, 3}, rng));
    check("concat.axis2", [&](DTensor& x) { return sum(square(concat(c233, x, 2))); }, randn({2, 3, 2}, rng));
    check("sum", [&](DTensor& x) { return sum(x); }, randn({6}, rng));
    check("mean", [&](DTensor& x) { return mean(square(x)); }, randn({6}, rng));
    check("log", [&](DTensor& x) { return sum(log_op(x)); }, randn({6}, rng, 0.5, 2.0));
    check("exp", [&](DTensor& x) { return sum(exp_op(x)); }, randn({6}, rng));
    check("sqrt", [&](DTensor& x) { return sum(sqrt_op(x)); }, randn({6}, rng, 0.5, 2.0));
    check("square", [&](DTensor& x) { return sum(square(x)); }, randn({6}, rng));
    check("softmax", [&](DTensor& x) { return sum(mul(softmax(x, 0), c6)); }, randn({6}, rng));
    DTensor c23 = randn({2, 3}, rng);
    check("softmax.axis1", [&](DTensor& x) { return sum(mul(softmax(x, 1), c23)); }, randn({2, 3}, rng));
    check("clamp.inside", [&](DTensor& x) { return sum(square(clamp(x, -2.0, 2.0))); }, randn({6}, rng));
    check("clamp.mixed", [&](DTensor& x) { return sum(square(clamp(x, -0.5, 0.5))); },
          DTensor::from({4}, {0.2, -0.8, 0.9, -0.1}));
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::zeros({0, 3}), std::invalid_argument);

    Tensor x = Tensor::zeros({2, 3});
    CHECK(x.numel() == 6);
    x.zero_grad();
    CHECK(x.grad().size() == 6);
}
