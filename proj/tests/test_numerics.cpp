#include <doctest.h>

#include <cmath>

#include "xc/numerics.hpp"
#include "xc/random.hpp"

using namespace xc;

TEST_CASE("matmul identity") {
    Tensor i2 = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor b = Tensor::from_rows({{5, 6}, {7, 8}});
    Tensor c = matmul(i2, b);
    for (std::size_t k = 0; k < 4; ++k) CHECK(c.data[k] == b.data[k]);
}

TEST_CASE("matmul hand product") {
    Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
    Tensor b = Tensor::from_rows({{5, 6}, {7, 8}});
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == 19);
    CHECK(c.at(0, 1) == 22);
    CHECK(c.at(1, 0) == 43);
    CHECK(c.at(1, 1) == 50);
}

TEST_CASE("matmul shape error names both shapes") {
    Tensor a(2, 3), b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
    try {
        matmul(a, b);
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("2x2") != std::string::npos);
    }
}

TEST_CASE("softmax symmetry and shift invariance") {
    Tensor m = Tensor::from_rows({{0, 0}});
    Tensor s = softmax_rows(m);
    CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

    Tensor a = Tensor::from_rows({{0.3, -1.2, 2.0}});
    Tensor b = Tensor::from_rows({{0.3 + 7.5, -1.2 + 7.5, 2.0 + 7.5}});
    Tensor sa = softmax_rows(a), sb = softmax_rows(b);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(sa.data[i] - sb.data[i]) < 1e-12);
}

TEST_CASE("softmax closed form ln2") {
    Tensor m = Tensor::from_rows({{std::log(2.0), 0.0}});
    Tensor s = softmax_rows(m);
    CHECK(std::abs(s.at(0, 0) - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(s.at(0, 1) - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("softmax rows sum to one") {
    RandomSource rng(11);
    Tensor m(7, 13);
    for (auto& v : m.data) v = rng.normal() * 10.0;
    Tensor s = softmax_rows(m);
    for (std::size_t i = 0; i < 7; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 13; ++j) {
            CHECK(s.at(i, j) >= 0.0);
            sum += s.at(i, j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("layer_norm constant vector is zero") {
    Tensor x = Tensor::from_rows({{4, 4, 4, 4}});
    Tensor g = Tensor::from_rows({{1, 1, 1, 1}});
    Tensor b = Tensor::from_rows({{0, 0, 0, 0}});
    Tensor y = layer_norm(x, g, b, 1e-5);
    for (double v : y.data) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("layer_norm unit case eps=0") {
    Tensor x = Tensor::from_rows({{1, -1}});
    Tensor g = Tensor::from_rows({{1, 1}});
    Tensor b = Tensor::from_rows({{0, 0}});
    Tensor y = layer_norm(x, g, b, 0.0);
    CHECK(y.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("layer_norm normalization property") {
    RandomSource rng(3);
    Tensor x(1, 9);
    for (auto& v : x.data) v = rng.normal() * 2.0 + 1.0;
    Tensor g(1, 9), b(1, 9);
    for (auto& v : g.data) v = 1.0;
    Tensor y = layer_norm(x, g, b, 0.0);
    double mean = 0.0, var = 0.0;
    for (double v : y.data) mean += v;
    mean /= 9.0;
    for (double v : y.data) var += (v - mean) * (v - mean);
    var /= 9.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-10);
}

TEST_CASE("gelu values") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(std::abs(gelu(1.0) - 0.841345) < 1e-6);
    CHECK(std::abs(gelu(-10.0)) < 1e-20);
}

TEST_CASE("gelu derivative matches finite differences") {
    for (double x : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
        double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
        CHECK(std::abs(gelu_derivative(x) - fd) < 1e-7);
    }
}

TEST_CASE("adamw first step approx lr") {
    Parameter p("p", Tensor(1, 1));
    p.grad.data[0] = 1.0;
    AdamWState s(p.value.shape);
    adamw_step(p, s, 0.1, 0.01);
    CHECK(std::abs(p.value.data[0] + 0.1) < 1e-6);
    CHECK(s.step_count == 1);
}

TEST_CASE("adamw zero grad zero decay is identity") {
    Parameter p("p", Tensor(1, 1));
    p.value.data[0] = 1.0;
    AdamWState s(p.value.shape);
    adamw_step(p, s, 0.1, 0.0);
    CHECK(p.value.data[0] == 1.0);
}

TEST_CASE("adamw pure decay") {
    Parameter p("p", Tensor(1, 1));
    p.value.data[0] = 1.0;
    AdamWState s(p.value.shape);
    adamw_step(p, s, 0.1, 0.01);
    CHECK(std::abs(p.value.data[0] - 0.999) < 1e-12);
}

TEST_CASE("adamw refuses frozen parameter") {
    Parameter p("p", Tensor(1, 1), /*train=*/false);
    AdamWState s(p.value.shape);
    CHECK_THROWS_AS(adamw_step(p, s, 0.1, 0.0), std::logic_error);
}

TEST_CASE("finite_diff_grad basic") {
    auto sq = [](const std::vector<double>& t) { return t[0] * t[0]; };
    auto g = finite_diff_grad(sq, {3.0});
    CHECK(std::abs(g[0] - 6.0) < 1e-8);

    auto c = [](const std::vector<double>&) { return 4.25; };
    for (double v : finite_diff_grad(c, {1.0, 2.0, 3.0})) CHECK(v == 0.0);

    std::vector<double> a = {2.0, -1.5, 0.25};
    auto lin = [&](const std::vector<double>& t) {
        return a[0] * t[0] + a[1] * t[1] + a[2] * t[2];
    };
    auto gl = finite_diff_grad(lin, {0.1, 0.2, 0.3});
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(gl[i] - a[i]) < 1e-9);
}

TEST_CASE("operations deterministic bit-for-bit") {
    RandomSource rng(99);
    Tensor a(5, 6), b(6, 4);
    for (auto& v : a.data) v = rng.normal();
    for (auto& v : b.data) v = rng.normal();
    Tensor c1 = matmul(a, b), c2 = matmul(a, b);
    CHECK(c1.data == c2.data);
    Tensor s1 = softmax_rows(a), s2 = softmax_rows(a);
    CHECK(s1.data == s2.data);
}
