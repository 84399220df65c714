#include "core/trainer.hpp"

#include "core/losses.hpp"
#include "core/ops.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>

namespace opd {

void TrainConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (batch_samples < 1) throw std::invalid_argument("batch_samples must be >= 1");
    if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1) {
        throw std::invalid_argument("adam betas must lie in (0,1)");
    }
    if (eps <= 0) throw std::invalid_argument("adam eps must be > 0");
    if (validation_fraction <= 0 || validation_fraction >= 1) {
        throw std::invalid_argument("validation_fraction must lie in (0,1)");
    }
    if (log_every < 1 || val_every < 1) {
        throw std::invalid_argument("log_every and val_every must be >= 1");
    }
}

AdamState::AdamState(const std::vector<Tensor<float>>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params) {
        m.emplace_back(p.numel(), 0.0f);
        v.emplace_back(p.numel(), 0.0f);
    }
}

void adam_step(std::vector<Tensor<float>>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    for (auto& p : params) {
        if (!p.has_grad()) p.zero_grad();
        for (float g : p.grad()) {
            if (!std::isfinite(g)) {
                throw DivergenceError("adam_step: non-finite gradient, step aborted");
            }
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        float* val = params[pi].data();
        const float* g = params[pi].grad().data();
        float* mv = state.m[pi].data();
        float* vv = state.v[pi].data();
        const std::int64_t n = params[pi].numel();
        for (std::int64_t i = 0; i < n; ++i) {
            mv[i] = static_cast<float>(beta1 * mv[i] + (1.0 - beta1) * g[i]);
            vv[i] = static_cast<float>(beta2 * vv[i] +
                                       (1.0 - beta2) * static_cast<double>(g[i]) * g[i]);
            const double mhat = mv[i] / bc1;
            const double vhat = vv[i] / bc2;
            val[i] = static_cast<float>(val[i] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

std::pair<std::vector<int>, std::vector<int>> split_validation(int sample_count, double fraction,
                                                               std::uint64_t seed) {
    if (sample_count < 2) {
        throw std::invalid_argument("split_validation: need at least 2 samples");
    }
    int val_n = static_cast<int>(std::llround(fraction * sample_count));
    val_n = std::max(1, std::min(val_n, sample_count - 1));
    std::vector<int> idx(sample_count);
    std::iota(idx.begin(), idx.end(), 0);
    RngStream rng(derive_seed(seed, seed_tag::split));
    for (int i = sample_count - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[i], idx[j]);
    }
    std::vector<int> val(idx.begin(), idx.begin() + val_n);
    std::vector<int> train(idx.begin() + val_n, idx.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {train, val};
}

namespace {

void append_field(std::string& line, const char* fmt, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), fmt, v);
    line += buf;
}

}  // namespace

void write_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write log: " + path);
    os << "step,epoch,strategy,train_loss,mse_term,msa_term,val_psnr,val_ssim,val_rmse,seconds\n";
    for (const auto& r : log.rows) {
        std::string line =
            std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + r.strategy + ",";
        if (r.has_train) append_field(line, "%.9g", r.train_loss);
        line += ",";
        if (r.has_breakdown) append_field(line, "%.9g", r.mse_term);
        line += ",";
        if (r.has_breakdown) append_field(line, "%.9g", r.msa_term);
        line += ",";
        if (r.has_val) append_field(line, "%.9g", r.val_psnr);
        line += ",";
        if (r.has_val) append_field(line, "%.9g", r.val_ssim);
        line += ",";
        if (r.has_val) append_field(line, "%.9g", r.val_rmse);
        line += ",";
        append_field(line, "%.3f", r.seconds);
        os << line << "\n";
    }
}

namespace {

struct StepLoss {
    Tensor<float> loss;
    bool has_breakdown = false;
    double mse = 0.0;
    double msa_v = 0.0;
};

Tensor<float> stack_frames(const std::vector<const Tensor<float>*>& frames) {
    const int H = frames[0]->dim(2), W = frames[0]->dim(3);
    Tensor<float> out(Shape{static_cast<int>(frames.size()), 1, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::memcpy(out.data() + i * plane, frames[i]->data(), sizeof(float) * plane);
    }
    return out;
}

// One coupled (input -> label) choice per sample per step; full_pairs
// expands to every couple the plan yields.
StepLoss build_pair_loss(Tape<float>& tape, const DenoiserNet<float>& net, const Dataset& data,
                         const std::vector<int>& batch, Strategy strategy,
                         const std::vector<Tensor<float>>& n2c_targets,
                         const N2nStaticPlan* n2n, const TrainConfig& cfg, std::int64_t step) {
    std::vector<const Tensor<float>*> inputs;
    std::vector<const Tensor<float>*> labels;
    const int m = data.meta.m;
    for (int si : batch) {
        const FrameStack& stack = data.stacks[si];
        RngStream pick(derive_seed(cfg.seed, seed_tag::pair_pick, static_cast<std::uint64_t>(si),
                                   static_cast<std::uint64_t>(step)));
        switch (strategy) {
            case Strategy::n2c: {
                if (cfg.full_pairs) {
                    for (int j = 0; j < m; ++j) {
                        inputs.push_back(&stack.frames[j]);
                        labels.push_back(&n2c_targets[si]);
                    }
                } else {
                    const int j = static_cast<int>(pick.below(static_cast<std::uint64_t>(m)));
                    inputs.push_back(&stack.frames[j]);
                    labels.push_back(&n2c_targets[si]);
                }
                break;
            }
            case Strategy::n2n: {
                const Partition& p = n2n->partition_for(si);
                if (cfg.full_pairs) {
                    for (int t = 0; t < p.pair_count(); ++t) {
                        inputs.push_back(&stack.frames[p.J[t]]);
                        labels.push_back(&stack.frames[p.K[t]]);
                    }
                } else {
                    const int t = static_cast<int>(
                        pick.below(static_cast<std::uint64_t>(p.pair_count())));
                    inputs.push_back(&stack.frames[p.J[t]]);
                    labels.push_back(&stack.frames[p.K[t]]);
                }
                break;
            }
            case Strategy::opd_rc: {
                const Partition p = opd_rc_step_plan(m, cfg.seed, si, step);
                if (cfg.full_pairs) {
                    for (int t = 0; t < p.pair_count(); ++t) {
                        inputs.push_back(&stack.frames[p.J[t]]);
                        labels.push_back(&stack.frames[p.K[t]]);
                    }
                } else {
                    inputs.push_back(&stack.frames[p.J[0]]);
                    labels.push_back(&stack.frames[p.K[0]]);
                }
                break;
            }
            default: throw std::logic_error("build_pair_loss: wrong strategy");
        }
    }
    Tensor<float> x = stack_frames(inputs);
    Tensor<float> y = stack_frames(labels);
    Tensor<float> pred = net.forward(tape, x);
    StepLoss out;
    out.loss = pairwise_l2(tape, pred, y);
    return out;
}

StepLoss build_opd_al_loss(Tape<float>& tape, const DenoiserNet<float>& net, const Dataset& data,
                           const std::vector<int>& batch) {
    const int m = data.meta.m;
    const int B = static_cast<int>(batch.size());
    std::vector<const Tensor<float>*> all;
    all.reserve(static_cast<std::size_t>(B) * m);
    for (int si : batch) {
        for (const auto& f : data.stacks[si].frames) all.push_back(&f);
    }
    Tensor<float> x = stack_frames(all);
    Tensor<float> pred = net.forward(tape, x);

    std::vector<Tensor<float>> mse_terms, msa_terms;
    mse_terms.reserve(B);
    msa_terms.reserve(B);
    for (int bi = 0; bi < B; ++bi) {
        std::vector<Tensor<float>> outputs;
        outputs.reserve(m);
        for (int j = 0; j < m; ++j) outputs.push_back(slice_batch(tape, pred, bi * m + j, 1));
        const FrameStack& stack = data.stacks[batch[bi]];
        LossBreakdown<float> lb = opd_loss(tape, outputs, stack.frames);
        mse_terms.push_back(lb.mse_term);
        msa_terms.push_back(lb.msa_term);
    }
    const float inv_b = 1.0f / static_cast<float>(B);
    Tensor<float> mse_b = scale(tape, sum_scalars(tape, mse_terms), inv_b);
    Tensor<float> msa_b = scale(tape, sum_scalars(tape, msa_terms), inv_b);

    StepLoss out;
    out.loss = add(tape, mse_b, scale(tape, msa_b, -1.0f));
    out.has_breakdown = true;
    out.mse = mse_b.scalar_value();
    out.msa_v = msa_b.scalar_value();
    return out;
}

}  // namespace

TrainResult train_run(DenoiserNet<float>& net, const Dataset& data, const TrainConfig& cfg,
                      const ProgressFn& on_row) {
    cfg.validate();
    if (data.meta.m < 2) throw std::invalid_argument("train_run: dataset needs m >= 2");

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    auto [train_idx, val_idx] =
        split_validation(data.sample_count(), cfg.validation_fraction, cfg.seed);

    // strategy resources, resolved before any parameter mutation
    std::vector<Tensor<float>> n2c_targets;
    std::unique_ptr<N2nStaticPlan> n2n;
    if (cfg.strategy == Strategy::n2c) n2c_targets = n2c_plan(data.stacks);
    if (cfg.strategy == Strategy::n2n) {
        n2n = std::make_unique<N2nStaticPlan>(data.sample_count(), data.meta.m, cfg.seed);
    }

    std::vector<Tensor<float>> params = net.parameters();
    AdamState adam(params);

    TrainResult result;
    result.train_indices = train_idx;
    result.val_indices = val_idx;

    std::vector<int> order = train_idx;
    std::size_t cursor = 0;
    std::int64_t epoch = 0;
    auto reshuffle = [&] {
        RngStream rng(derive_seed(cfg.seed, seed_tag::shuffle, static_cast<std::uint64_t>(epoch)));
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[i], order[j]);
        }
        cursor = 0;
    };
    reshuffle();

    auto emit = [&](const TrainLogRow& row) {
        result.log.rows.push_back(row);
        if (on_row) on_row(row);
    };

    auto run_validation = [&](std::int64_t step) {
        const MetricsReport rep = evaluate_model(net, data, InferenceMode::per_frame, val_idx);
        TrainLogRow row;
        row.step = step;
        row.epoch = epoch;
        row.strategy = strategy_name(cfg.strategy);
        row.has_val = true;
        row.val_psnr = rep.mean_psnr;
        row.val_ssim = rep.mean_ssim;
        row.val_rmse = rep.mean_rmse;
        row.seconds = elapsed();
        emit(row);
        result.final_validation = rep;
    };

    int divergence_streak = 0;
    for (std::int64_t s = 1; s <= cfg.steps; ++s) {
        std::vector<int> batch;
        for (int i = 0; i < cfg.batch_samples && cursor < order.size(); ++i) {
            batch.push_back(order[cursor++]);
        }
        if (cursor >= order.size()) {
            ++epoch;
            reshuffle();
        }

        Tape<float> tape;
        StepLoss sl;
        double loss_val = std::numeric_limits<double>::quiet_NaN();
        bool finite_step = true;
        try {
            if (cfg.strategy == Strategy::opd_al) {
                sl = build_opd_al_loss(tape, net, data, batch);
            } else {
                sl = build_pair_loss(tape, net, data, batch, cfg.strategy, n2c_targets, n2n.get(),
                                     cfg, s);
            }
            loss_val = sl.loss.scalar_value();
            if (!std::isfinite(loss_val)) {
                finite_step = false;
            } else {
                for (auto& p : params) p.zero_grad();
                backward(tape, sl.loss);
                adam_step(params, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps);
            }
        } catch (const DivergenceError&) {
            finite_step = false;
        }

        if (!finite_step) {
            ++divergence_streak;
            if (divergence_streak >= 10) {
                throw DivergenceError(
                    "training diverged: 10 consecutive non-finite losses at step " +
                    std::to_string(s));
            }
        } else {
            divergence_streak = 0;
        }

        if (s % cfg.log_every == 0) {
            TrainLogRow row;
            row.step = s;
            row.epoch = epoch;
            row.strategy = strategy_name(cfg.strategy);
            row.has_train = true;
            row.train_loss = loss_val;
            row.has_breakdown = sl.has_breakdown;
            row.mse_term = sl.mse;
            row.msa_term = sl.msa_v;
            row.seconds = elapsed();
            emit(row);
        }
        if (s % cfg.val_every == 0 || s == cfg.steps) run_validation(s);
    }

    result.input_psnr_val = input_psnr(data, val_idx);
    result.seconds = elapsed();
    result.steps_run = cfg.steps;
    net.set_training_provenance(strategy_name(cfg.strategy), cfg.steps);
    return result;
}

}  // namespace opd
