#include "doctest.h"

#include "core/losses.hpp"
#include "core/noise.hpp"
#include "core/ops.hpp"
#include "core/trainer.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace opd;
using namespace opd::test;

namespace {

Dataset tiny_dataset(int samples, int size, int m, double sigma, std::uint64_t seed) {
    Dataset ds;
    ds.meta.noise.kind = NoiseKind::gaussian;
    ds.meta.noise.sigma255 = sigma;
    ds.meta.m = m;
    ds.meta.seed = seed;
    for (int i = 0; i < samples; ++i) {
        FrameStack s = make_stack(procedural_clean(size, seed, i), ds.meta.noise, m, seed, i);
        s.id = "s" + std::to_string(i);
        ds.stacks.push_back(std::move(s));
    }
    ds.height = ds.width = size;
    return ds;
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("adam single-step arithmetic") {
    std::vector<TensorF> params = {TensorF(Shape{1}, std::vector<float>{0.0f})};
    params[0].set_requires_grad(true);
    params[0].zero_grad();
    params[0].grad()[0] = 1.0f;
    AdamState st(params);
    adam_step(params, st, 0.1, 0.9, 0.999, 1e-8);
    CHECK(st.t == 1);
    CHECK(params[0].values()[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
    std::vector<TensorF> params = {TensorF(Shape{3}, std::vector<float>{1, 2, 3})};
    params[0].set_requires_grad(true);
    params[0].zero_grad();
    AdamState st(params);
    adam_step(params, st, 0.1, 0.9, 0.999, 1e-8);
    CHECK(params[0].values() == std::vector<float>{1, 2, 3});
}

TEST_CASE("adam converges to the signed step size under constant gradients") {
    std::vector<TensorF> params = {TensorF(Shape{2}, std::vector<float>{0, 0})};
    params[0].set_requires_grad(true);
    AdamState st(params);
    const double lr = 0.01;
    float prev0 = 0, prev1 = 0;
    double delta0 = 0, delta1 = 0;
    for (int s = 0; s < 800; ++s) {
        params[0].zero_grad();
        params[0].grad()[0] = 0.37f;   // positive
        params[0].grad()[1] = -2.2f;  // negative
        prev0 = params[0].values()[0];
        prev1 = params[0].values()[1];
        adam_step(params, st, lr, 0.9, 0.999, 1e-8);
        delta0 = params[0].values()[0] - prev0;
        delta1 = params[0].values()[1] - prev1;
    }
    CHECK(delta0 == doctest::Approx(-lr).epsilon(0.01));
    CHECK(delta1 == doctest::Approx(lr).epsilon(0.01));
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
    std::vector<TensorF> params = {TensorF(Shape{2}, std::vector<float>{1, 2})};
    params[0].set_requires_grad(true);
    params[0].zero_grad();
    params[0].grad()[0] = std::numeric_limits<float>::quiet_NaN();
    AdamState st(params);
    CHECK_THROWS_AS(adam_step(params, st, 0.1, 0.9, 0.999, 1e-8), DivergenceError);
    CHECK(params[0].values() == std::vector<float>{1, 2});
    CHECK(st.t == 0);
}

TEST_CASE("validation split covers, separates, and reproduces") {
    auto [train, val] = split_validation(10, 0.1, 5);
    CHECK(val.size() == 1);
    CHECK(train.size() == 9);
    auto [train2, val2] = split_validation(10, 0.1, 5);
    CHECK(train == train2);
    CHECK(val == val2);

    std::vector<bool> seen(10, false);
    for (int i : train) seen[i] = true;
    for (int i : val) {
        CHECK_FALSE(seen[i]);  // disjoint
        seen[i] = true;
    }
    for (bool b : seen) CHECK(b);  // full cover

    CHECK_THROWS_AS(split_validation(1, 0.1, 5), std::invalid_argument);
    // the split always leaves at least one sample on each side
    auto [t3, v3] = split_validation(2, 0.9, 5);
    CHECK(t3.size() == 1);
    CHECK(v3.size() == 1);
}

TEST_CASE("zero steps return the initialized net unchanged") {
    Dataset ds = tiny_dataset(4, 16, 2, 25.0, 3);
    DenoiserNetF net(11);
    DenoiserNetF fresh(11);
    TrainConfig cfg;
    cfg.steps = 0;
    cfg.seed = 3;
    TrainResult r = train_run(net, ds, cfg);
    CHECK(r.log.rows.empty());
    auto a = net.parameters(), b = fresh.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values() == b[i].values());
}

TEST_CASE("training is deterministic given the seed") {
    Dataset ds = tiny_dataset(5, 16, 4, 25.0, 21);
    TrainConfig cfg;
    cfg.strategy = Strategy::opd_al;
    cfg.steps = 6;
    cfg.batch_samples = 2;
    cfg.log_every = 2;
    cfg.val_every = 6;
    cfg.seed = 77;

    DenoiserNetF n1(9), n2(9);
    TrainResult r1 = train_run(n1, ds, cfg);
    TrainResult r2 = train_run(n2, ds, cfg);
    REQUIRE(r1.log.rows.size() == r2.log.rows.size());
    for (std::size_t i = 0; i < r1.log.rows.size(); ++i) {
        CHECK(r1.log.rows[i].step == r2.log.rows[i].step);
        CHECK(r1.log.rows[i].train_loss == r2.log.rows[i].train_loss);
        CHECK(r1.log.rows[i].val_psnr == r2.log.rows[i].val_psnr);
    }
    auto p1 = n1.parameters(), p2 = n2.parameters();
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].values() == p2[i].values());
}

TEST_CASE("alienation logs satisfy the exact term identity") {
    Dataset ds = tiny_dataset(4, 16, 4, 25.0, 33);
    TrainConfig cfg;
    cfg.strategy = Strategy::opd_al;
    cfg.steps = 8;
    cfg.batch_samples = 2;
    cfg.log_every = 1;
    cfg.val_every = 8;
    cfg.seed = 5;
    DenoiserNetF net(6);
    TrainResult r = train_run(net, ds, cfg);
    int train_rows = 0;
    for (const auto& row : r.log.rows) {
        if (!row.has_train) continue;
        ++train_rows;
        REQUIRE(row.has_breakdown);
        const float diff = static_cast<float>(row.mse_term) - static_cast<float>(row.msa_term);
        CHECK(static_cast<float>(row.train_loss) == diff);
    }
    CHECK(train_rows == 8);
}

TEST_CASE("two-frame alienation step equals the symmetric pairwise identity") {
    Dataset ds = tiny_dataset(2, 16, 2, 25.0, 8);
    TrainConfig cfg;
    cfg.strategy = Strategy::opd_al;
    cfg.steps = 1;
    cfg.batch_samples = 1;
    cfg.log_every = 1;
    cfg.val_every = 1;
    cfg.seed = 2;
    DenoiserNetF net(4);
    DenoiserNetF copy(4);
    TrainResult r = train_run(net, ds, cfg);

    // rebuild the logged loss by hand from the pre-step parameters
    const int train_sample = r.train_indices[0];
    Tape<float> tape;
    tape.set_recording(false);
    const FrameStack& stack = ds.stacks[train_sample];
    TensorF x(Shape{2, 1, 16, 16});
    const std::size_t plane = 16 * 16;
    for (int j = 0; j < 2; ++j)
        std::copy(stack.frames[j].data(), stack.frames[j].data() + plane, x.data() + j * plane);
    TensorF out = copy.forward(tape, x);
    std::vector<TensorF> outputs;
    for (int j = 0; j < 2; ++j) outputs.push_back(slice_batch(tape, out, j, 1));
    const double sym = 0.5 * (pairwise_l2(tape, outputs[0], stack.frames[1]).scalar_value() +
                              pairwise_l2(tape, outputs[1], stack.frames[0]).scalar_value());
    const double expect = sym - msa(tape, outputs).scalar_value();
    const auto& row = r.log.rows.front();
    CHECK(row.train_loss == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("every strategy runs and logs the expected row counts") {
    Dataset ds = tiny_dataset(6, 16, 4, 25.0, 44);
    for (Strategy st : {Strategy::n2c, Strategy::n2n, Strategy::opd_rc, Strategy::opd_al}) {
        TrainConfig cfg;
        cfg.strategy = st;
        cfg.steps = 10;
        cfg.batch_samples = 2;
        cfg.log_every = 5;
        cfg.val_every = 10;
        cfg.seed = 13;
        DenoiserNetF net(15);
        TrainResult r = train_run(net, ds, cfg);
        int train_rows = 0, val_rows = 0;
        for (const auto& row : r.log.rows) {
            if (row.has_train) ++train_rows;
            if (row.has_val) ++val_rows;
        }
        CHECK(train_rows == 2);  // floor(steps / log_every)
        CHECK(val_rows == 1);
        CHECK(net.trained_strategy() == strategy_name(st));
        CHECK(r.final_validation.images > 0);
    }
}

TEST_CASE("ten consecutive non-finite losses abort the run") {
    Dataset ds = tiny_dataset(4, 16, 2, 25.0, 3);
    TrainConfig cfg;
    cfg.strategy = Strategy::n2n;
    cfg.steps = 80;
    cfg.batch_samples = 2;
    cfg.learning_rate = 1e14;  // blows activations up to inf within a few steps
    cfg.seed = 1;
    cfg.log_every = 80;
    cfg.val_every = 80;
    DenoiserNetF net(1);
    CHECK_THROWS_AS(train_run(net, ds, cfg), DivergenceError);
}

TEST_CASE("fused inference matches or beats per-frame on a trained net") {
    Dataset ds = tiny_dataset(8, 32, 4, 25.0, 77);
    TrainConfig cfg;
    cfg.strategy = Strategy::opd_rc;
    cfg.steps = 400;
    cfg.batch_samples = 2;
    cfg.seed = 5;
    cfg.log_every = 400;
    cfg.val_every = 400;
    DenoiserNetF net(5);
    train_run(net, ds, cfg);
    const MetricsReport per_frame = evaluate_model(net, ds, InferenceMode::per_frame);
    const MetricsReport fused = evaluate_model(net, ds, InferenceMode::fused);
    CHECK(fused.mean_psnr >= per_frame.mean_psnr);
}

TEST_CASE("noise-free data drives every strategy toward identity") {
    Dataset ds = tiny_dataset(4, 16, 2, 0.0, 55);
    for (Strategy st : {Strategy::n2c, Strategy::n2n, Strategy::opd_rc, Strategy::opd_al}) {
        TrainConfig cfg;
        cfg.strategy = st;
        cfg.steps = 60;
        cfg.batch_samples = 2;
        cfg.log_every = 60;
        cfg.val_every = 60;
        cfg.seed = 1;
        DenoiserNetF net(2);
        TrainResult r = train_run(net, ds, cfg);
        double first_loss = 0, last_loss = 0;
        for (const auto& row : r.log.rows) {
            if (row.has_train) last_loss = row.train_loss;
        }
        // rerun briefly to capture an early loss for comparison
        TrainConfig cfg1 = cfg;
        cfg1.steps = 1;
        cfg1.log_every = 1;
        DenoiserNetF net1(2);
        TrainResult r1 = train_run(net1, ds, cfg1);
        first_loss = r1.log.rows.front().train_loss;
        CHECK(last_loss < first_loss);
    }
}

TEST_SUITE_END();
