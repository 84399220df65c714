#include "doctest.h"

#include "core/gradcheck.hpp"
#include "core/losses.hpp"
#include "core/rng.hpp"
#include "test_helpers.hpp"

#include <algorithm>
#include <cmath>

using namespace opd;
using namespace opd::test;

namespace {

TensorD px(double v) { return TensorD(Shape{1}, std::vector<double>{v}); }

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("pairwise_l2 direct values") {
    Tape<double> t;
    TensorD a(Shape{2}, std::vector<double>{1, 3});
    TensorD b(Shape{2}, std::vector<double>{0, 2});
    CHECK(pairwise_l2(t, a, a).scalar_value() == 0.0);
    CHECK(pairwise_l2(t, a, b).scalar_value() == doctest::Approx(1.0));

    // batch mean over two samples with per-sample losses 1 and 3
    TensorD p(Shape{2, 1, 1, 1}, std::vector<double>{1, 3});
    TensorD q(Shape{2, 1, 1, 1}, std::vector<double>{0, 3 - std::sqrt(3.0)});
    CHECK(pairwise_l2(t, p, q).scalar_value() == doctest::Approx(2.0));
}

TEST_CASE("opd_clean_loss scalar examples") {
    Tape<double> t;
    std::vector<TensorD> outs = {px(1), px(2), px(3)};
    CHECK(opd_clean_loss(t, outs, px(2)).scalar_value() == doctest::Approx(0.0));
    CHECK(opd_clean_loss(t, outs, px(0)).scalar_value() == doctest::Approx(4.0));
    std::vector<TensorD> same = {px(0.7), px(0.7)};
    CHECK(opd_clean_loss(t, same, px(0.7)).scalar_value() == doctest::Approx(0.0));
    std::vector<TensorD> one = {px(1)};
    CHECK_THROWS_AS(opd_clean_loss(t, one, px(0)), std::invalid_argument);
}

TEST_CASE("decomposition matches direct arithmetic") {
    Tape<double> t;
    std::vector<TensorD> outs = {px(1), px(2), px(3)};
    auto lb = opd_clean_decomposed(t, outs, px(2));
    CHECK(lb.mse_term.scalar_value() == doctest::Approx(2.0 / 3.0));
    CHECK(lb.msa_term.scalar_value() == doctest::Approx(2.0 / 3.0));
    CHECK(lb.total.scalar_value() == doctest::Approx(0.0));

    std::vector<TensorD> ident = {px(1.4), px(1.4), px(1.4)};
    auto lb2 = opd_clean_decomposed(t, ident, px(0.2));
    CHECK(lb2.msa_term.scalar_value() == 0.0);
    CHECK(lb2.total.scalar_value() == lb2.mse_term.scalar_value());
}

TEST_CASE("averaged and decomposed forms agree on random instances") {
    RngStream rng(2024);
    for (int iter = 0; iter < 1000; ++iter) {
        const int m = 2 + static_cast<int>(rng.below(7));
        const int h = 1 + static_cast<int>(rng.below(4));
        const int w = 1 + static_cast<int>(rng.below(4));
        std::vector<TensorD> outs;
        for (int j = 0; j < m; ++j) {
            outs.push_back(random_tensor<double>(Shape{1, 1, h, w}, rng, -2.0, 2.0));
        }
        TensorD target = random_tensor<double>(Shape{1, 1, h, w}, rng, -2.0, 2.0);
        Tape<double> t;
        t.set_recording(false);
        const double direct = opd_clean_loss(t, outs, target).scalar_value();
        const double decomposed = opd_clean_decomposed(t, outs, target).total.scalar_value();
        const double rel = std::abs(direct - decomposed) /
                           std::max({std::abs(direct), std::abs(decomposed), 1e-12});
        CHECK(rel <= 1e-10);
    }
}

TEST_CASE("mse_noisy direct values and label protection") {
    Tape<double> t;
    std::vector<TensorD> y2 = {px(1), px(3)};
    std::vector<TensorD> f2 = {px(0), px(2)};
    CHECK(mse_noisy(t, y2, f2).scalar_value() == doctest::Approx(5.0));

    std::vector<TensorD> y3 = {px(1), px(2), px(3)};
    std::vector<TensorD> f3 = {px(0), px(2), px(4)};
    CHECK(mse_noisy(t, y3, f3).scalar_value() == doctest::Approx(14.0 / 3.0));

    std::vector<TensorD> same = {px(0.5), px(0.5)};
    CHECK(mse_noisy(t, same, same).scalar_value() == doctest::Approx(0.0));

    CHECK_THROWS_AS(mse_noisy(t, y3, f2), std::invalid_argument);
    std::vector<TensorD> fg = {px(0), px(2)};
    fg[0].set_requires_grad(true);
    CHECK_THROWS_AS(mse_noisy(t, y2, fg), std::invalid_argument);
}

TEST_CASE("msa direct values") {
    Tape<double> t;
    std::vector<TensorD> y2 = {px(1), px(3)};
    CHECK(msa(t, y2).scalar_value() == doctest::Approx(1.0));
    std::vector<TensorD> y3 = {px(1), px(2), px(3)};
    CHECK(msa(t, y3).scalar_value() == doctest::Approx(2.0 / 3.0));
    std::vector<TensorD> same = {px(2), px(2), px(2)};
    CHECK(msa(t, same).scalar_value() == 0.0);
}

TEST_CASE("opd_loss combines the two terms and may go negative") {
    Tape<double> t;
    std::vector<TensorD> y = {px(1), px(3)};
    std::vector<TensorD> f = {px(0), px(2)};
    auto lb = opd_loss(t, y, f);
    CHECK(lb.total.scalar_value() == doctest::Approx(4.0));
    CHECK(lb.total.scalar_value() ==
          doctest::Approx(lb.mse_term.scalar_value() - lb.msa_term.scalar_value()));

    std::vector<TensorD> yn = {px(0), px(2)};
    std::vector<TensorD> fn = {px(1), px(0)};
    CHECK(opd_loss(t, yn, fn).total.scalar_value() == doctest::Approx(-0.5));
}

TEST_CASE("two-frame reduction to the symmetric pairwise objective") {
    RngStream rng(77);
    for (int iter = 0; iter < 1000; ++iter) {
        const int h = 1 + static_cast<int>(rng.below(4));
        const int w = 1 + static_cast<int>(rng.below(4));
        std::vector<TensorD> y = {random_tensor<double>(Shape{1, 1, h, w}, rng, -2, 2),
                                  random_tensor<double>(Shape{1, 1, h, w}, rng, -2, 2)};
        std::vector<TensorD> f = {random_tensor<double>(Shape{1, 1, h, w}, rng, -2, 2),
                                  random_tensor<double>(Shape{1, 1, h, w}, rng, -2, 2)};
        Tape<double> t;
        t.set_recording(false);
        const double total = opd_loss(t, y, f).total.scalar_value();
        // symmetric two-frame objective: mean of both supervision directions
        const double sym = 0.5 * (pairwise_l2(t, y[0], f[1]).scalar_value() +
                                  pairwise_l2(t, y[1], f[0]).scalar_value());
        const double expect = sym - msa(t, y).scalar_value();
        const double rel =
            std::abs(total - expect) / std::max({std::abs(total), std::abs(expect), 1e-12});
        CHECK(rel <= 1e-10);
    }
}

TEST_CASE("losses are invariant under simultaneous permutation") {
    RngStream rng(31);
    for (int iter = 0; iter < 50; ++iter) {
        const int m = 2 + static_cast<int>(rng.below(6));
        std::vector<TensorD> y, f;
        for (int j = 0; j < m; ++j) {
            y.push_back(random_tensor<double>(Shape{1, 1, 3, 3}, rng, -2, 2));
            f.push_back(random_tensor<double>(Shape{1, 1, 3, 3}, rng, -2, 2));
        }
        TensorD target = random_tensor<double>(Shape{1, 1, 3, 3}, rng, -2, 2);
        std::vector<int> perm(m);
        for (int j = 0; j < m; ++j) perm[j] = j;
        for (int i = m - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
        }
        std::vector<TensorD> yp, fp;
        for (int j = 0; j < m; ++j) {
            yp.push_back(y[perm[j]]);
            fp.push_back(f[perm[j]]);
        }
        Tape<double> t;
        t.set_recording(false);
        CHECK(opd_loss(t, y, f).total.scalar_value() ==
              opd_loss(t, yp, fp).total.scalar_value());
        CHECK(msa(t, y).scalar_value() == msa(t, yp).scalar_value());
        CHECK(mse_noisy(t, y, f).scalar_value() == mse_noisy(t, yp, fp).scalar_value());
        CHECK(opd_clean_loss(t, y, target).scalar_value() ==
              opd_clean_loss(t, yp, target).scalar_value());
        CHECK(opd_clean_decomposed(t, y, target).total.scalar_value() ==
              opd_clean_decomposed(t, yp, target).total.scalar_value());
    }
}

TEST_CASE("opd_loss gradients match finite differences") {
    RngStream rng(55);
    for (int iter = 0; iter < 10; ++iter) {
        const int m = 2 + static_cast<int>(rng.below(4));
        std::vector<TensorD> y, f;
        for (int j = 0; j < m; ++j) {
            y.push_back(random_tensor<double>(Shape{1, 1, 3, 3}, rng, -1, 1));
            f.push_back(random_tensor<double>(Shape{1, 1, 3, 3}, rng, -1, 1));
        }
        for (auto& t : y) t.set_requires_grad(true);
        std::vector<TensorD> params(y.begin(), y.end());
        auto fn = [&](Tape<double>& t) { return opd_loss(t, y, f).total; };
        CHECK(grad_check(fn, params, 1e-5) < 1e-6);
    }
}

TEST_CASE("clean-supervision total is nonnegative") {
    RngStream rng(11);
    for (int iter = 0; iter < 200; ++iter) {
        const int m = 2 + static_cast<int>(rng.below(7));
        std::vector<TensorD> y;
        for (int j = 0; j < m; ++j) {
            y.push_back(random_tensor<double>(Shape{1, 1, 2, 2}, rng, -3, 3));
        }
        TensorD target = random_tensor<double>(Shape{1, 1, 2, 2}, rng, -3, 3);
        Tape<double> t;
        t.set_recording(false);
        CHECK(opd_clean_decomposed(t, y, target).total.scalar_value() >= -1e-15);
    }
}

TEST_SUITE_END();
