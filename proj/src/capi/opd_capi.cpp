#include "opd/opd.h"

#include "core/checkpoint.hpp"
#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/noise.hpp"
#include "core/ops.hpp"
#include "core/png_io.hpp"
#include "core/trainer.hpp"

#include <cmath>
#include <memory>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

namespace fs = std::filesystem;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Maps core exceptions onto status codes; the catch-all keeps exceptions
// from ever crossing the C boundary.
template <typename Fn>
opd_status guarded(Fn&& fn) {
    try {
        fn();
        return OPD_OK;
    } catch (const opd::CheckpointError& e) {
        set_error(e.what());
        switch (e.kind) {
            case opd::CheckpointError::Kind::bad_magic: return OPD_ERR_FORMAT_MAGIC;
            case opd::CheckpointError::Kind::truncated: return OPD_ERR_FORMAT_TRUNCATED;
            case opd::CheckpointError::Kind::shape_mismatch: return OPD_ERR_SHAPE_MISMATCH;
            case opd::CheckpointError::Kind::parse: return OPD_ERR_FORMAT_TRUNCATED;
        }
        return OPD_ERR_INTERNAL;
    } catch (const opd::DivergenceError& e) {
        set_error(e.what());
        return OPD_ERR_DIVERGED;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return OPD_ERR_INVALID_ARGUMENT;
    } catch (const std::runtime_error& e) {
        set_error(e.what());
        return OPD_ERR_IO;
    } catch (const std::exception& e) {
        set_error(e.what());
        return OPD_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown error");
        return OPD_ERR_INTERNAL;
    }
}

opd_status need(bool cond, const char* msg) {
    if (cond) return OPD_OK;
    set_error(msg);
    return OPD_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct opd_dataset {
    opd::Dataset data;
};

struct opd_model {
    opd::DenoiserNet<float> net;
};

extern "C" {

const char* opd_status_name(opd_status s) {
    switch (s) {
        case OPD_OK: return "ok";
        case OPD_ERR_INVALID_ARGUMENT: return "invalid argument";
        case OPD_ERR_SHAPE_MISMATCH: return "shape mismatch";
        case OPD_ERR_IO: return "io error";
        case OPD_ERR_FORMAT_MAGIC: return "bad file magic";
        case OPD_ERR_FORMAT_TRUNCATED: return "truncated or malformed file";
        case OPD_ERR_DIVERGED: return "numerical divergence";
        case OPD_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

const char* opd_last_error(void) { return g_last_error.c_str(); }

const char* opd_version(void) { return "1.0.0"; }

void opd_set_num_threads(int n) { opd::set_max_threads(n); }

void opd_synth_params_init(opd_synth_params* p) {
    if (!p) return;
    p->kind = OPD_NOISE_GAUSSIAN;
    p->sigma = 25.0;
    p->lambda = 30.0;
    p->looks = 4.0;
    p->frames = 8;
    p->count = 8;
    p->size = 64;
    p->seed = 1;
    p->clean_dir = nullptr;
}

opd_status opd_synth_dataset(const opd_synth_params* p, const char* out_dir) {
    if (opd_status s = need(p && out_dir, "null argument"); s != OPD_OK) return s;
    return guarded([&] {
        opd::SynthParams sp;
        switch (p->kind) {
            case OPD_NOISE_GAUSSIAN: sp.noise.kind = opd::NoiseKind::gaussian; break;
            case OPD_NOISE_POISSON: sp.noise.kind = opd::NoiseKind::poisson; break;
            case OPD_NOISE_SPECKLE: sp.noise.kind = opd::NoiseKind::speckle; break;
            default: throw std::invalid_argument("bad noise kind");
        }
        sp.noise.sigma255 = p->sigma;
        sp.noise.lambda = p->lambda;
        sp.noise.looks = p->looks;
        sp.frames = p->frames;
        sp.count = p->count;
        sp.size = p->size;
        sp.seed = p->seed;
        if (p->clean_dir) sp.clean_dir = p->clean_dir;
        opd::synth_dataset(sp, out_dir);
    });
}

opd_status opd_dataset_open(const char* dir, opd_dataset** out) {
    if (opd_status s = need(dir && out, "null argument"); s != OPD_OK) return s;
    *out = nullptr;
    return guarded([&] {
        auto ds = std::make_unique<opd_dataset>();
        if (fs::exists(fs::path(dir) / "manifest.json")) {
            ds->data = opd::load_dataset(dir);
        } else if (fs::exists(fs::path(dir) / "frames_f32.bin")) {
            ds->data = opd::load_sample_dir(dir);
        } else {
            throw std::runtime_error(std::string(dir) +
                                     " contains neither manifest.json nor frames_f32.bin");
        }
        *out = ds.release();
    });
}

void opd_dataset_close(opd_dataset* ds) { delete ds; }

opd_status opd_dataset_info_get(const opd_dataset* ds, opd_dataset_info* out) {
    if (opd_status s = need(ds && out, "null argument"); s != OPD_OK) return s;
    out->samples = ds->data.sample_count();
    out->frames_per_sample = ds->data.meta.m;
    out->height = ds->data.height;
    out->width = ds->data.width;
    out->has_clean = ds->data.all_have_clean() ? 1 : 0;
    return OPD_OK;
}

opd_status opd_model_create(uint64_t seed, opd_model** out) {
    if (opd_status s = need(out != nullptr, "null argument"); s != OPD_OK) return s;
    *out = nullptr;
    return guarded([&] { *out = new opd_model{opd::DenoiserNet<float>(seed)}; });
}

opd_status opd_model_load(const char* path, opd_model** out) {
    if (opd_status s = need(path && out, "null argument"); s != OPD_OK) return s;
    *out = nullptr;
    return guarded([&] { *out = new opd_model{opd::load_checkpoint(path)}; });
}

opd_status opd_model_save(const opd_model* model, const char* path) {
    if (opd_status s = need(model && path, "null argument"); s != OPD_OK) return s;
    return guarded([&] { opd::save_checkpoint(path, model->net); });
}

void opd_model_free(opd_model* model) { delete model; }

int64_t opd_model_param_count(const opd_model* model) {
    return model ? model->net.parameter_count() : 0;
}

void opd_train_params_init(opd_train_params* p) {
    if (!p) return;
    p->strategy = "opd-al";
    p->steps = 2000;
    p->batch_samples = 4;
    p->learning_rate = 1e-3;
    p->beta1 = 0.9;
    p->beta2 = 0.999;
    p->eps = 1e-8;
    p->seed = 1;
    p->validation_fraction = 0.1;
    p->log_every = 50;
    p->val_every = 500;
    p->full_pairs = 0;
}

opd_status opd_train(opd_model* model, const opd_dataset* ds, const opd_train_params* p,
                     const char* csv_log_path, opd_progress_fn progress, void* user,
                     opd_train_result* out) {
    if (opd_status s = need(model && ds && p, "null argument"); s != OPD_OK) return s;
    return guarded([&] {
        opd::TrainConfig cfg;
        cfg.strategy = opd::parse_strategy(p->strategy ? p->strategy : "");
        cfg.steps = p->steps;
        cfg.batch_samples = p->batch_samples;
        cfg.learning_rate = p->learning_rate;
        cfg.beta1 = p->beta1;
        cfg.beta2 = p->beta2;
        cfg.eps = p->eps;
        cfg.seed = p->seed;
        cfg.validation_fraction = p->validation_fraction;
        cfg.log_every = p->log_every;
        cfg.val_every = p->val_every;
        cfg.full_pairs = p->full_pairs != 0;

        opd::ProgressFn on_row;
        if (progress) {
            on_row = [&](const opd::TrainLogRow& r) {
                opd_log_row row;
                row.step = r.step;
                row.epoch = r.epoch;
                row.train_loss = r.has_train ? r.train_loss : kNaN;
                row.mse_term = r.has_breakdown ? r.mse_term : kNaN;
                row.msa_term = r.has_breakdown ? r.msa_term : kNaN;
                row.val_psnr = r.has_val ? r.val_psnr : kNaN;
                row.val_ssim = r.has_val ? r.val_ssim : kNaN;
                row.val_rmse = r.has_val ? r.val_rmse : kNaN;
                row.seconds = r.seconds;
                progress(&row, user);
            };
        }

        opd::TrainResult res = opd::train_run(model->net, ds->data, cfg, on_row);
        if (csv_log_path) opd::write_train_log_csv(csv_log_path, res.log);
        if (out) {
            out->final_val_psnr = res.final_validation.mean_psnr;
            out->final_val_ssim = res.final_validation.mean_ssim;
            out->final_val_rmse = res.final_validation.mean_rmse;
            out->input_psnr = res.input_psnr_val;
            out->seconds = res.seconds;
            out->steps_run = res.steps_run;
        }
    });
}

opd_status opd_evaluate_model(const opd_model* model, const opd_dataset* ds, opd_infer_mode mode,
                              opd_metrics* out) {
    if (opd_status s = need(model && ds && out, "null argument"); s != OPD_OK) return s;
    return guarded([&] {
        const opd::MetricsReport r = opd::evaluate_model(
            model->net, ds->data,
            mode == OPD_INFER_FUSED ? opd::InferenceMode::fused : opd::InferenceMode::per_frame);
        out->psnr = r.mean_psnr;
        out->ssim = r.mean_ssim;
        out->rmse = r.mean_rmse;
        out->images = r.images;
        out->psnr_inf_excluded = r.psnr_inf_excluded;
        out->proxy_reference = r.proxy_reference ? 1 : 0;
    });
}

opd_status opd_evaluate_aar(const opd_dataset* ds, opd_metrics* out) {
    if (opd_status s = need(ds && out, "null argument"); s != OPD_OK) return s;
    return guarded([&] {
        const opd::MetricsReport r = opd::evaluate_aar(ds->data);
        out->psnr = r.mean_psnr;
        out->ssim = r.mean_ssim;
        out->rmse = r.mean_rmse;
        out->images = r.images;
        out->psnr_inf_excluded = r.psnr_inf_excluded;
        out->proxy_reference = r.proxy_reference ? 1 : 0;
    });
}

opd_status opd_input_psnr(const opd_dataset* ds, double* out) {
    if (opd_status s = need(ds && out, "null argument"); s != OPD_OK) return s;
    return guarded([&] { *out = opd::input_psnr(ds->data); });
}

opd_status opd_denoise(const opd_model* model, const opd_dataset* ds, const char* out_dir,
                       opd_infer_mode mode) {
    if (opd_status s = need(model && ds && out_dir, "null argument"); s != OPD_OK) return s;
    return guarded([&] {
        fs::create_directories(out_dir);
        for (const auto& stack : ds->data.stacks) {
            const fs::path dir = fs::path(out_dir) / stack.id;
            fs::create_directories(dir);
            const int m = stack.frame_count();
            const int H = stack.frames[0].dim(2), W = stack.frames[0].dim(3);
            const std::size_t plane = static_cast<std::size_t>(H) * W;

            opd::Tensor<float> batch(opd::Shape{m, 1, H, W});
            for (int j = 0; j < m; ++j) {
                std::memcpy(batch.data() + j * plane, stack.frames[j].data(),
                            sizeof(float) * plane);
            }
            opd::Tape<float> tape;
            tape.set_recording(false);
            opd::Tensor<float> pred = model->net.forward(tape, batch);

            std::vector<opd::Tensor<float>> outputs;
            for (int j = 0; j < m; ++j) {
                opd::Tensor<float> o(opd::Shape{1, 1, H, W});
                std::memcpy(o.data(), pred.data() + j * plane, sizeof(float) * plane);
                outputs.push_back(std::move(o));
            }
            if (mode == OPD_INFER_FUSED) {
                outputs = {opd::aar(outputs)};
            }
            for (std::size_t j = 0; j < outputs.size(); ++j) {
                char name[32];
                std::snprintf(name, sizeof(name), "denoised_%02zu.png", j);
                opd::write_png_gray8((dir / name).string(), outputs[j].data(), H, W);
            }
            opd::write_frames_bin((dir / "denoised_f32.bin").string(), outputs);
        }
    });
}

}  // extern "C"
