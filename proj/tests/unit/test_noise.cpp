#include "doctest.h"

#include "core/metrics.hpp"
#include "core/noise.hpp"
#include "core/rng.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace opd;
using namespace opd::test;

namespace {

struct Moments {
    double mean, var;
};

Moments residual_moments(const Tensor<float>& noisy, const Tensor<float>& clean) {
    double sum = 0, sq = 0;
    const std::int64_t n = noisy.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const double r = static_cast<double>(noisy.data()[i]) - clean.data()[i];
        sum += r;
        sq += r * r;
    }
    const double mean = sum / n;
    return {mean, sq / n - mean * mean};
}

}  // namespace

TEST_SUITE_BEGIN("noise");

TEST_CASE("gaussian residual statistics") {
    Tensor<float> clean(Shape{1, 1, 1000, 1000}, 0.5f);
    RngStream rng(101);
    CHECK(add_gaussian(clean, 0.0, rng).values() == clean.values());

    Tensor<float> noisy = add_gaussian(clean, 25.0, rng);
    const auto m = residual_moments(noisy, clean);
    CHECK(std::abs(m.mean) < 0.001);
    CHECK(std::sqrt(m.var) == doctest::Approx(25.0 / 255.0).epsilon(0.02));
}

TEST_CASE("gaussian noisy psnr near the closed form") {
    // 10*log10((255/25)^2) = 20.17 dB
    Tensor<float> clean(Shape{1, 1, 256, 256}, 0.5f);
    RngStream rng(102);
    Tensor<float> noisy = add_gaussian(clean, 25.0, rng);
    CHECK(psnr(noisy, clean) == doctest::Approx(20.172).epsilon(0.0075));
}

TEST_CASE("poisson statistics and domain") {
    RngStream rng(103);
    Tensor<float> zeros(Shape{1, 1, 100, 100}, 0.0f);
    Tensor<float> z = add_poisson(zeros, 30.0, rng);
    for (float v : z.values()) CHECK(v == 0.0f);

    for (double x : {0.2, 0.5, 0.8}) {
        Tensor<float> clean(Shape{1, 1, 1000, 1000}, static_cast<float>(x));
        Tensor<float> noisy = add_poisson(clean, 30.0, rng);
        const auto m = residual_moments(noisy, clean);
        CHECK(std::abs(m.mean) < 0.001);
        CHECK(m.var == doctest::Approx(x / 30.0).epsilon(0.05));
    }

    Tensor<float> big(Shape{1, 1, 64, 64}, 0.5f);
    Tensor<float> nearly = add_poisson(big, 1e6, rng);
    CHECK(psnr(nearly, big) > 55.0);

    Tensor<float> bad(Shape{2}, std::vector<float>{0.5f, 1.5f});
    CHECK_THROWS_AS(add_poisson(bad, 30.0, rng), std::invalid_argument);
}

TEST_CASE("speckle statistics") {
    RngStream rng(104);
    Tensor<float> zeros(Shape{1, 1, 32, 32}, 0.0f);
    Tensor<float> z = add_speckle(zeros, 4.0, rng);
    for (float v : z.values()) CHECK(v == 0.0f);

    Tensor<float> clean(Shape{1, 1, 1000, 1000}, 0.5f);
    Tensor<float> noisy = add_speckle(clean, 4.0, rng);
    const auto m = residual_moments(noisy, clean);
    CHECK(std::abs(m.mean) < 0.0025);  // 0.5% of x
    CHECK(m.var == doctest::Approx(0.25 * 0.25).epsilon(0.05));

    Tensor<float> tight = add_speckle(clean, 1e6, rng);
    CHECK(psnr(tight, clean) > 55.0);

    CHECK_THROWS_AS(add_speckle(clean, 0.5, rng), std::invalid_argument);
}

TEST_CASE("make_stack determinism and averaging") {
    Tensor<float> clean = procedural_clean(64, 7, 0);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian;
    spec.sigma255 = 0.0;
    FrameStack s0 = make_stack(clean, spec, 8, 7, 0);
    for (const auto& f : s0.frames) CHECK(f.values() == clean.values());

    spec.sigma255 = 25.0;
    FrameStack a = make_stack(clean, spec, 8, 7, 3);
    FrameStack b = make_stack(clean, spec, 8, 7, 3);
    for (int j = 0; j < 8; ++j) CHECK(a.frames[j].values() == b.frames[j].values());
    FrameStack c = make_stack(clean, spec, 8, 7, 4);
    CHECK(a.frames[0].values() != c.frames[0].values());

    CHECK_THROWS_AS(make_stack(clean, spec, 1, 7, 0), std::invalid_argument);

    // residual std of the 8-frame mean shrinks by sqrt(8)
    Tensor<float> flat(Shape{1, 1, 500, 500}, 0.5f);
    FrameStack wide = make_stack(flat, spec, 8, 11, 0);
    const auto m = residual_moments(aar(wide.frames), flat);
    CHECK(std::sqrt(m.var) == doctest::Approx((25.0 / 255.0) / std::sqrt(8.0)).epsilon(0.05));
}

TEST_CASE("frames in a stack are pairwise independent") {
    Tensor<float> clean(Shape{1, 1, 340, 340}, 0.5f);  // ~1.2e5 pixels
    NoiseSpec spec;
    FrameStack s = make_stack(clean, spec, 4, 17, 0);
    const std::int64_t n = clean.numel();
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                const double ra = s.frames[a].data()[i] - clean.data()[i];
                const double rb = s.frames[b].data()[i] - clean.data()[i];
                sa += ra;
                sb += rb;
                sab += ra * rb;
                saa += ra * ra;
                sbb += rb * rb;
            }
            const double cov = sab / n - (sa / n) * (sb / n);
            const double corr = cov / std::sqrt((saa / n - (sa / n) * (sa / n)) *
                                                (sbb / n - (sb / n) * (sb / n)));
            CHECK(std::abs(corr) < 0.01);
        }
}

TEST_CASE("procedural cleans are deterministic, structured, in range") {
    Tensor<float> a = procedural_clean(64, 5, 2);
    Tensor<float> b = procedural_clean(64, 5, 2);
    Tensor<float> c = procedural_clean(64, 5, 3);
    CHECK(a.values() == b.values());
    CHECK(a.values() != c.values());
    float lo = 1.0f, hi = 0.0f;
    for (float v : a.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0f);
    CHECK(hi <= 1.0f);
    CHECK(hi - lo > 0.2f);  // not a flat image
}

TEST_SUITE_END();
