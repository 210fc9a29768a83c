#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <vector>

#include "monotonet/rng.hpp"
#include "monotonet/tape.hpp"
#include "support/finite_diff.hpp"

using namespace monotonet;

TEST_CASE("forward evaluates basic expressions") {
    Tape t;
    Var x = leaf(t, Tensor::scalar(3.0));
    Var y = mul(x, x);
    CHECK(y.value().scalar_value() == 9.0);

    Var z = relu(leaf(t, Tensor::scalar(-2.0)));
    CHECK(z.value().scalar_value() == 0.0);
}

TEST_CASE("softmax normalizes to one") {
    Tape t;
    Var x = leaf(t, Tensor::vector({0.3, -1.2, 5.0, 0.0}));
    double s = sum_all(softmax(x)).value().scalar_value();
    CHECK(s == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("gradient of x*x at 3 is 6") {
    Tape t;
    Var x = leaf(t, Tensor::scalar(3.0));
    Var y = mul(x, x);
    Var g = gradient(y, x);
    CHECK(g.value().scalar_value() == Catch::Approx(6.0));
}

TEST_CASE("second derivative of x^3 via two reverse passes") {
    Tape t;
    Var x = leaf(t, Tensor::scalar(2.0));
    Var y = mul(mul(x, x), x);
    Var g = gradient(y, x);          // 3x^2 = 12
    CHECK(g.value().scalar_value() == Catch::Approx(12.0));
    Var h = gradient(g, x);          // 6x = 12
    CHECK(h.value().scalar_value() == Catch::Approx(12.0));
}

TEST_CASE("gradient rejects non-scalar targets and foreign variables") {
    Tape t;
    Var x = leaf(t, Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(gradient(x, x), std::invalid_argument);

    Tape other;
    Var y = leaf(other, Tensor::scalar(1.0));
    Var s = sum_all(x);
    CHECK_THROWS_AS(gradient(s, y), std::invalid_argument);
}

TEST_CASE("shape mismatch is rejected") {
    Tape t;
    Var a = leaf(t, Tensor::vector({1.0, 2.0}));
    Var b = leaf(t, Tensor::vector({1.0, 2.0, 3.0}));
    CHECK_THROWS_AS(add(a, b), std::invalid_argument);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("non-finite results are reported") {
    Tape t;
    Var a = leaf(t, Tensor::scalar(-1.0));
    CHECK_THROWS_AS(log(a), std::runtime_error);
    Var z = leaf(t, Tensor::scalar(0.0));
    CHECK_THROWS_AS(div(a, z), std::runtime_error);
}

// every primitive against central differences at random points
TEST_CASE("primitive gradients match finite differences") {
    Rng rng(71);

    // builders mapping a flat 6-vector to a scalar through one primitive
    using Builder = std::function<Var(Tape&, Var)>;
    std::vector<std::pair<const char*, Builder>> cases = {
        {"add", [](Tape& t, Var v) { return sum_all(add(v, mul(v, v))); }},
        {"sub", [](Tape& t, Var v) { return sum_all(sub(mul(v, v), v)); }},
        {"mul", [](Tape& t, Var v) { return sum_all(mul(v, shift(v, 2.0))); }},
        {"div", [](Tape& t, Var v) { return sum_all(div(v, shift(mul(v, v), 4.0))); }},
        {"neg", [](Tape& t, Var v) { return sum_all(neg(v)); }},
        {"tanh", [](Tape& t, Var v) { return sum_all(tanh(v)); }},
        {"exp", [](Tape& t, Var v) { return sum_all(exp(scale(v, 0.5))); }},
        {"log", [](Tape& t, Var v) { return sum_all(log(shift(mul(v, v), 1.5))); }},
        {"max_const", [](Tape& t, Var v) { return sum_all(max_const(v, 0.25)); }},
        {"square", [](Tape& t, Var v) { return sum_all(square(v)); }},
        {"scale_shift", [](Tape& t, Var v) { return sum_all(shift(scale(v, -1.7), 0.3)); }},
        {"mean", [](Tape& t, Var v) { return mean_all(mul(v, v)); }},
        {"softmax", [](Tape& t, Var v) { return sum_all(mul(softmax(v), v)); }},
        {"slice_embed", [](Tape& t, Var v) {
             return sum_all(square(embed(slice(v, 1, 3), 2, 8)));
         }},
        {"concat", [](Tape& t, Var v) {
             return sum_all(mul(concat({slice(v, 0, 3), slice(v, 3, 3)}), v));
         }},
    };

    for (auto& [name, build] : cases) {
        INFO("primitive: " << name);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> x0(6);
            for (auto& v : x0) v = rng.uniform(-2.0, 2.0);
            // keep clear of the max_const kink at 0.25
            for (auto& v : x0)
                if (std::fabs(v - 0.25) < 1e-3) v += 5e-3;

            auto f = [&](const std::vector<double>& x) {
                Tape t;
                Var v = leaf(t, Tensor::vector(x));
                return build(t, v).value().scalar_value();
            };

            Tape t;
            Var v = leaf(t, Tensor::vector(x0));
            Var s = build(t, v);
            Var g = gradient(s, v);

            auto fd = oracle::grad_fd(f, x0);
            CHECK(oracle::max_rel_err(g.value().data(), fd) < 1e-4);
        }
    }
}

TEST_CASE("matmul gradients match finite differences") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a0(6), b0(8);
        for (auto& v : a0) v = rng.uniform(-1.5, 1.5);
        for (auto& v : b0) v = rng.uniform(-1.5, 1.5);

        auto f = [&](const std::vector<double>& a, const std::vector<double>& b) {
            Tape t;
            Var A = leaf(t, Tensor::matrix(2, 3, a));
            Var B = leaf(t, Tensor::matrix(3, 4, {b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
                                                  0.5, -1.0, 2.0, 0.0}));
            return sum_all(square(matmul(A, B))).value().scalar_value();
        };

        Tape t;
        Var A = leaf(t, Tensor::matrix(2, 3, a0));
        Var B = leaf(t, Tensor::matrix(3, 4, {b0[0], b0[1], b0[2], b0[3], b0[4], b0[5], b0[6], b0[7],
                                              0.5, -1.0, 2.0, 0.0}));
        Var s = sum_all(square(matmul(A, B)));
        auto g = gradient(s, {A, B});

        auto fda = oracle::grad_fd([&](const std::vector<double>& a) { return f(a, b0); }, a0);
        CHECK(oracle::max_rel_err(g[0].value().data(), fda) < 1e-4);

        std::vector<double> gb(g[1].value().data().begin(), g[1].value().data().begin() + 8);
        auto fdb = oracle::grad_fd([&](const std::vector<double>& b) { return f(a0, b); }, b0);
        CHECK(oracle::max_rel_err(gb, fdb) < 1e-4);
    }
}

TEST_CASE("gradient is linear in the target") {
    Rng rng(5);
    std::vector<double> x0(5);
    for (auto& v : x0) v = rng.uniform(-1.0, 1.0);
    const double a = 1.7, b = -0.4;

    Tape t;
    Var x = leaf(t, Tensor::vector(x0));
    Var f = sum_all(mul(x, tanh(x)));
    Var g = sum_all(exp(scale(x, 0.3)));
    Var combo = add(scale(f, a), scale(g, b));

    Var gf = gradient(f, x);
    Var gg = gradient(g, x);
    Var gc = gradient(combo, x);

    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double expect = a * gf.value()[i] + b * gg.value()[i];
        CHECK(gc.value()[i] == Catch::Approx(expect).margin(1e-10));
    }
}

TEST_CASE("tape replay is bit-deterministic") {
    Rng rng(99);
    std::vector<double> x0(7);
    for (auto& v : x0) v = rng.uniform(-3.0, 3.0);

    auto run = [&]() {
        Tape t;
        Var x = leaf(t, Tensor::vector(x0));
        Var y = sum_all(mul(softmax(x), tanh(scale(x, 0.7))));
        Var g = gradient(y, x);
        std::vector<double> out = g.value().data();
        out.push_back(y.value().scalar_value());
        return out;
    };

    auto r1 = run();
    auto r2 = run();
    REQUIRE(r1.size() == r2.size());
    CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(double)) == 0);
}

TEST_CASE("gradients of unrelated variables are zero") {
    Tape t;
    Var x = leaf(t, Tensor::scalar(2.0));
    Var y = leaf(t, Tensor::scalar(5.0));
    Var f = mul(x, x);
    auto g = gradient(f, {x, y});
    CHECK(g[0].value().scalar_value() == Catch::Approx(4.0));
    CHECK(g[1].value().scalar_value() == 0.0);
}
