#include <cmath>
#include <random>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "vtnav/ad/adam.hpp"
#include "vtnav/ad/kernels.hpp"
#include "vtnav/ad/ops.hpp"
#include "vtnav/ad/parameters.hpp"

using namespace vtnav;
using namespace vtnav::ad;
using vtnav::testing::DTensor;
using vtnav::testing::gradcheck;
using vtnav::testing::random_leaf;
using vtnav::testing::random_leaf_away_from_zero;
using vtnav::testing::weighted_sum;

using FTensor = Tensor<float>;

TEST_CASE("matmul identity and unit-row selection") {
    auto a = FTensor::from({2, 2}, {1, 2, 3, 4});
    auto eye = FTensor::from({2, 2}, {1, 0, 0, 1});
    auto c = matmul(a, eye);
    CHECK(c.shape() == Shape{2, 2});
    CHECK(std::vector<float>(c.values().begin(), c.values().end()) == std::vector<float>{1, 2, 3, 4});

    auto row = FTensor::from({1, 2}, {1, 0});
    auto col = FTensor::from({2, 1}, {2, 5});
    CHECK(matmul(row, col).item() == 2.0f);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    auto a = FTensor::zeros({2, 3});
    auto b = FTensor::zeros({2, 3});
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul gradient matches central differences to 1e-6") {
    std::mt19937_64 rng(11);
    auto a = random_leaf({3, 4}, rng);
    auto b = random_leaf({4, 2}, rng);
    auto r = gradcheck({a, b}, [&] { return weighted_sum(matmul(a, b), 1); });
    CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("softmax_rows examples") {
    auto s = softmax_rows(FTensor::from({1, 2}, {0, 0}));
    CHECK(s.values()[0] == doctest::Approx(0.5));
    CHECK(s.values()[1] == doctest::Approx(0.5));

    auto big = softmax_rows(FTensor::from({1, 2}, {1000, 1000}));
    CHECK(big.all_finite());
    CHECK(big.values()[0] == doctest::Approx(0.5));

    auto t = softmax_rows(FTensor::from({1, 2}, {1, 0}));
    CHECK(std::abs(t.values()[0] - 0.7311) <= 1e-4);
    CHECK(std::abs(t.values()[1] - 0.2689) <= 1e-4);
}

TEST_CASE("softmax_rows rows are probability vectors") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(0.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(4 * 7);
        for (double& x : v) x = d(rng);
        auto s = softmax_rows(DTensor::from({4, 7}, v));
        for (std::size_t r = 0; r < 4; ++r) {
            double total = 0;
            for (std::size_t c = 0; c < 7; ++c) {
                const double p = s.at(r, c);
                CHECK(p > 0.0);
                CHECK(p < 1.0);
                total += p;
            }
            CHECK(std::abs(total - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("cross_entropy examples") {
    std::vector<int> label{3};
    auto uniform = cross_entropy(FTensor::zeros({1, 6}), std::span<const int>(label));
    CHECK(uniform.item() == doctest::Approx(std::log(6.0)).epsilon(1e-5));

    std::vector<int> l0{0};
    auto confident = cross_entropy(FTensor::from({1, 3}, {60, 0, 0}), std::span<const int>(l0));
    CHECK(confident.item() < 1e-6);

    std::vector<int> l2{2};
    auto hand = cross_entropy(FTensor::from({1, 3}, {1, 2, 3}), std::span<const int>(l2));
    CHECK(std::abs(hand.item() - 0.4076) <= 1e-3);

    std::vector<int> bad{3};
    CHECK_THROWS_AS(cross_entropy(FTensor::zeros({1, 3}), std::span<const int>(bad)), IndexError);
    std::vector<int> neg{-1};
    CHECK_THROWS_AS(cross_entropy(FTensor::zeros({1, 3}), std::span<const int>(neg)), IndexError);
}

TEST_CASE("adam examples") {
    AdamHyper hyper{0.1, 0.9, 0.999, 1e-8};

    SUBCASE("zero gradient leaves parameters unchanged") {
        ParameterSet<double> ps;
        auto p = ps.add_constant("p", {3}, 0.7);
        p.mutable_grad();
        Adam<double> opt(ps, hyper);
        opt.step(ps);
        for (double v : p.values()) CHECK(v == 0.7);
    }
    SUBCASE("one bias-corrected step from p=0 with g=1") {
        ParameterSet<double> ps;
        auto p = ps.add("p", {1});
        p.mutable_grad()[0] = 1.0;
        Adam<double> opt(ps, hyper);
        opt.step(ps);
        CHECK(p.values()[0] == doctest::Approx(-0.1).epsilon(1e-6));
        CHECK(opt.steps() == 1);
        CHECK(opt.moments()[0].v[0] >= 0.0);
    }
    SUBCASE("descends p^2") {
        ParameterSet<double> ps;
        auto p = ps.add_constant("p", {1}, 1.0);
        Adam<double> opt(ps, hyper);
        for (int i = 0; i < 100; ++i) {
            ps.zero_grad();
            auto loss = ad::mul(p, p);
            ad::sum(loss).backward();
            opt.step(ps);
            CHECK(opt.steps() == static_cast<std::uint64_t>(i + 1));
        }
        CHECK(std::abs(p.values()[0]) < 0.1);
    }
    SUBCASE("size mismatch is rejected") {
        AdamMoments<float> mo;
        std::vector<float> param(3, 0.f), grad(2, 1.f);
        CHECK_THROWS_AS(adam_update<float>(std::span<float>(param), std::span<const float>(grad), mo, hyper, 0.1),
                        ShapeError);
    }
}

TEST_CASE("every primitive passes the finite-difference check at 1e-4") {
    std::mt19937_64 rng(2024);
    auto x = random_leaf_away_from_zero({3, 5}, rng);
    auto y = random_leaf({3, 5}, rng);
    auto row = random_leaf({1, 5}, rng);
    auto pos = random_leaf({3, 5}, rng, 0.5, 2.0);
    auto check = [](double err) { CHECK(err <= 1e-4); };

    check(gradcheck({x, y}, [&] { return weighted_sum(add(x, y), 1); }).max_rel_error);
    check(gradcheck({x, row}, [&] { return weighted_sum(add(x, row), 2); }).max_rel_error);
    check(gradcheck({x, row}, [&] { return weighted_sum(add(row, x), 3); }).max_rel_error);
    check(gradcheck({x, row}, [&] { return weighted_sum(sub(x, row), 4); }).max_rel_error);
    check(gradcheck({x, y}, [&] { return weighted_sum(mul(x, y), 5); }).max_rel_error);
    check(gradcheck({x, row}, [&] { return weighted_sum(mul(x, row), 6); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(mul(x, x), 7); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(scale(x, 2.5), 8); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(relu(x), 9); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(ad::tanh(x), 10); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(sigmoid(x), 11); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(ad::exp(x), 12); }).max_rel_error);
    check(gradcheck({pos}, [&] { return weighted_sum(ad::log(pos), 13); }).max_rel_error);
    auto gain = random_leaf({1, 5}, rng);
    auto bias = random_leaf({1, 5}, rng);
    check(gradcheck({y, gain, bias}, [&] { return weighted_sum(layer_norm(y, gain, bias), 14); }).max_rel_error);
    check(gradcheck({y}, [&] { return weighted_sum(softmax_rows(y), 15); }).max_rel_error);
    check(gradcheck({y}, [&] { return weighted_sum(log_softmax_rows(y), 16); }).max_rel_error);
    std::vector<int> labels{0, 4, 2};
    check(gradcheck({y}, [&] { return cross_entropy(y, std::span<const int>(labels)); }).max_rel_error);
    check(gradcheck({y}, [&] { return weighted_sum(pick(y, std::span<const int>(labels)), 17); }).max_rel_error);
    auto z = random_leaf({3, 2}, rng);
    check(gradcheck({x, z}, [&] { return weighted_sum(concat_cols<double>({x, z, x}), 18); }).max_rel_error);
    check(gradcheck({x, row}, [&] { return weighted_sum(concat_rows<double>({x, row}), 19); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(slice_cols(x, 1, 3), 20); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(slice_rows(x, 1, 2), 21); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(reshape(x, {5, 3}), 22); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(transpose(x), 23); }).max_rel_error);
    check(gradcheck({x}, [&] { return ad::sum(mul(x, y)); }).max_rel_error);
    check(gradcheck({x}, [&] { return ad::mean(mul(x, x)); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(mean_rows(x), 24); }).max_rel_error);
    check(gradcheck({x}, [&] { return weighted_sum(sum_rows(x), 25); }).max_rel_error);
    auto w = random_leaf({5, 4}, rng);
    check(gradcheck({x, w}, [&] { return weighted_sum(matmul(x, w), 26); }).max_rel_error);
}

TEST_CASE("composed backward equals manually chained Jacobians") {
    // L = sum(tanh(x W)); dL/dx = (1 - y^2) W^T, dL/dW = x^T (1 - y^2)
    std::mt19937_64 rng(5);
    auto x = random_leaf({2, 3}, rng);
    auto w = random_leaf({3, 2}, rng);
    auto y = ad::tanh(matmul(x, w));
    std::vector<double> yv(y.values().begin(), y.values().end());
    ad::sum(y).backward();
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            double expect = 0;
            for (std::size_t j = 0; j < 2; ++j) expect += (1 - yv[i * 2 + j] * yv[i * 2 + j]) * w.at(k, j);
            CHECK(std::abs(x.grad()[i * 3 + k] - expect) <= 1e-10);
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t j = 0; j < 2; ++j) {
            double expect = 0;
            for (std::size_t i = 0; i < 2; ++i) expect += x.at(i, k) * (1 - yv[i * 2 + j] * yv[i * 2 + j]);
            CHECK(std::abs(w.grad()[k * 2 + j] - expect) <= 1e-10);
        }
    }
}

TEST_CASE("graph is released after backward") {
    auto a = DTensor::from({1, 2}, {1.0, 2.0}, true);
    auto h = ad::tanh(a);
    auto loss = ad::sum(h);
    loss.backward();
    CHECK(h.node().parents.empty());
    CHECK(loss.node().parents.empty());
    CHECK(a.has_grad());
}

TEST_CASE("broadcasting is limited to row vectors") {
    auto a = FTensor::zeros({3, 4});
    CHECK_NOTHROW(add(a, FTensor::zeros({4})));
    CHECK_NOTHROW(add(a, FTensor::zeros({1, 4})));
    CHECK_THROWS_AS(add(a, FTensor::zeros({3, 1})), ShapeError);
    CHECK_THROWS_AS(mul(a, FTensor::zeros({2, 4})), ShapeError);
}

TEST_CASE("backward rejects non-finite roots") {
    auto a = DTensor::from({1}, {0.0}, true);
    auto bad = ad::scale(ad::sum(a), std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(bad.backward(), NumericError);
}

TEST_CASE("replay with the same seed is bit-identical") {
    auto run = [] {
        Rng rng(77);
        ParameterSet<float> ps;
        auto w = ps.add_uniform("w", {8, 8}, 8, rng);
        auto b = ps.add("b", {1, 8});
        std::vector<float> xv(4 * 8);
        for (float& v : xv) v = static_cast<float>(uniform01(rng));
        auto x = FTensor::from({4, 8}, xv);
        auto out = softmax_rows(ad::tanh(add(matmul(x, w), b)));
        ad::sum(mul(out, out)).backward();
        std::vector<float> all(out.values().begin(), out.values().end());
        all.insert(all.end(), w.grad().begin(), w.grad().end());
        return all;
    };
    CHECK(run() == run());
}

TEST_CASE("uniform initialization respects the fan-in bound") {
    Rng rng(1);
    ParameterSet<float> ps;
    auto w = ps.add_uniform("w", {16, 4}, 16, rng);
    for (float v : w.values()) CHECK(std::abs(v) <= 0.25f);
    CHECK(ps.scalar_count() == 64);
    CHECK_THROWS(ps.add("w", {1}));
}

TEST_CASE("no-grad guard records no graph and restores the previous mode") {
    auto w = ad::Tensor<double>::from({2, 2}, {1, 2, 3, 4}, true);
    {
        ad::NoGradGuard guard;
        auto y = ad::matmul(w, w);
        CHECK_FALSE(y.requires_grad());
        CHECK(y.is_leaf());
        CHECK(y.at(0, 0) == 7.0);
    }
    CHECK(ad::grad_enabled());
    CHECK(ad::matmul(w, w).requires_grad());
}

TEST_CASE("blocked gemm kernels agree with a naive triple loop on ragged shapes") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 5, 7}, {4, 9, 33}, {9, 13, 70}, {17, 2, 130}, {2, 37, 5}, {1, 300, 3}}) {
        std::vector<double> a(m * k), b(k * n), bt(n * k), at(k * m);
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        ad::kernels::transpose(b.data(), bt.data(), k, n);
        ad::kernels::transpose(a.data(), at.data(), m, k);
        std::vector<double> want(m * n, 0.5);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t p = 0; p < k; ++p) want[i * n + j] += a[i * k + p] * b[p * n + j];
        std::vector<double> nn(m * n, 0.5), tn(m * n, 0.5), nt(m * n, 0.5);
        ad::kernels::gemm_nn(a.data(), b.data(), nn.data(), m, k, n);
        ad::kernels::gemm_tn(at.data(), b.data(), tn.data(), k, m, n);
        ad::kernels::gemm_nt(a.data(), bt.data(), nt.data(), m, k, n);
        for (std::size_t i = 0; i < m * n; ++i) {
            CHECK(nn[i] == doctest::Approx(want[i]).epsilon(1e-12));
            CHECK(tn[i] == doctest::Approx(want[i]).epsilon(1e-12));
            CHECK(nt[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}
