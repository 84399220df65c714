// opd command line: synthesize datasets, train denoisers, evaluate and
// compare strategies. Everything numerical goes through the C API.

#include "opd/opd.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

int fail(opd_status s) {
    std::fprintf(stderr, "error: %s (%s)\n", opd_last_error(), opd_status_name(s));
    switch (s) {
        case OPD_ERR_DIVERGED: return kExitDiverged;
        case OPD_ERR_INVALID_ARGUMENT:
        case OPD_ERR_SHAPE_MISMATCH:
        case OPD_ERR_FORMAT_MAGIC:
        case OPD_ERR_FORMAT_TRUNCATED: return kExitUsage;
        default: return kExitUsage;
    }
}

struct DatasetHandle {
    opd_dataset* ds = nullptr;
    ~DatasetHandle() { opd_dataset_close(ds); }
};

struct ModelHandle {
    opd_model* m = nullptr;
    ~ModelHandle() { opd_model_free(m); }
};

void print_progress_row(const opd_log_row* row, void*) {
    if (!std::isnan(row->val_psnr)) {
        std::printf("step %6lld  val psnr %.3f dB  ssim %.4f  rmse %.5f  (%.1fs)\n",
                    static_cast<long long>(row->step), row->val_psnr, row->val_ssim,
                    row->val_rmse, row->seconds);
    } else if (!std::isnan(row->msa_term)) {
        std::printf("step %6lld  loss %.6g  mse %.6g  msa %.6g\n",
                    static_cast<long long>(row->step), row->train_loss, row->mse_term,
                    row->msa_term);
    } else {
        std::printf("step %6lld  loss %.6g\n", static_cast<long long>(row->step),
                    row->train_loss);
    }
    std::fflush(stdout);
}

ordered_json metrics_json(const opd_metrics& m) {
    ordered_json j;
    j["psnr"] = m.psnr;
    j["ssim"] = m.ssim;
    j["rmse"] = m.rmse;
    j["images"] = m.images;
    j["psnr_inf_excluded"] = m.psnr_inf_excluded;
    j["proxy_reference"] = m.proxy_reference != 0;
    return j;
}

void write_json(const std::string& path, const ordered_json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CLI::RuntimeError("cannot write " + path, kExitUsage);
    os << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"opd - multi-frame denoising laboratory"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = library default)");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a noisy multi-frame dataset");
    std::string synth_out, synth_noise = "gaussian", synth_clean_dir;
    double synth_sigma = 25.0, synth_lambda = 30.0, synth_looks = 4.0;
    int synth_frames = 8, synth_count = 8, synth_size = 64;
    std::uint64_t synth_seed = 1;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--noise", synth_noise, "gaussian | poisson | speckle");
    auto* opt_sigma = synth->add_option("--sigma", synth_sigma, "gaussian std, 8-bit units");
    auto* opt_lambda = synth->add_option("--lambda", synth_lambda, "poisson photon scale");
    auto* opt_looks = synth->add_option("--looks", synth_looks, "speckle look count");
    synth->add_option("--frames", synth_frames, "frames per sample");
    synth->add_option("--count", synth_count, "sample count");
    synth->add_option("--size", synth_size, "square crop extent");
    synth->add_option("--seed", synth_seed, "master seed");
    synth->add_option("--clean-dir", synth_clean_dir, "PNG source directory");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train a denoiser on a dataset");
    std::string train_data, train_strategy, train_ckpt = "model.opd", train_log;
    opd_train_params tp;
    opd_train_params_init(&tp);
    std::int64_t train_steps = 2000, train_log_every = 50, train_val_every = 500;
    int train_batch = 4;
    double train_lr = 1e-3, train_val_fraction = 0.1;
    std::uint64_t train_seed = 1;
    bool train_full_pairs = false;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--strategy", train_strategy, "n2c | n2n | opd-rc | opd-al")->required();
    train->add_option("--steps", train_steps, "optimizer steps");
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_option("--batch", train_batch, "samples per step");
    train->add_option("--out", train_ckpt, "checkpoint path");
    train->add_option("--log", train_log, "CSV log path");
    train->add_option("--log-every", train_log_every, "training-row cadence");
    train->add_option("--val-every", train_val_every, "validation cadence");
    train->add_option("--val-fraction", train_val_fraction, "validation split fraction");
    train->add_flag("--full-pairs", train_full_pairs, "use all coupled pairs per step");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "score a model or the frame-average baseline");
    std::string eval_data, eval_model, eval_method, eval_report, eval_mode = "per-frame";
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--model", eval_model, "checkpoint path");
    eval->add_option("--method", eval_method, "aar (frame averaging)");
    eval->add_option("--report", eval_report, "JSON report path");
    eval->add_option("--mode", eval_mode, "per-frame | fused");

    // ---- denoise ----
    auto* den = app.add_subcommand("denoise", "write denoised estimates for a stack");
    std::string den_model, den_input, den_output, den_mode = "per-frame";
    den->add_option("--model", den_model, "checkpoint path")->required();
    den->add_option("--input", den_input, "dataset or sample directory")->required();
    den->add_option("--output", den_output, "output directory")->required();
    den->add_option("--mode", den_mode, "per-frame | fused");

    // ---- compare ----
    auto* cmp = app.add_subcommand("compare", "train and score several strategies");
    std::string cmp_data, cmp_out = "compare_report.json", cmp_curves;
    std::vector<std::string> cmp_strategies = {"n2n", "opd-rc", "opd-al"};
    int cmp_seeds = 3, cmp_batch = 4;
    std::int64_t cmp_steps = 2000;
    std::uint64_t cmp_seed = 1;
    double cmp_lr = 1e-3;
    cmp->add_option("--data", cmp_data, "dataset directory")->required();
    cmp->add_option("--strategies", cmp_strategies, "strategy list");
    cmp->add_option("--seeds", cmp_seeds, "seeds per strategy");
    cmp->add_option("--steps", cmp_steps, "optimizer steps per cell");
    cmp->add_option("--seed", cmp_seed, "base seed");
    cmp->add_option("--batch", cmp_batch, "samples per step");
    cmp->add_option("--lr", cmp_lr, "learning rate");
    cmp->add_option("--out", cmp_out, "JSON report path");
    cmp->add_option("--curves-dir", cmp_curves, "directory for per-cell CSV curves");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    if (threads > 0) opd_set_num_threads(threads);

    if (synth->parsed()) {
        opd_synth_params p;
        opd_synth_params_init(&p);
        if (synth_noise == "gaussian") p.kind = OPD_NOISE_GAUSSIAN;
        else if (synth_noise == "poisson") p.kind = OPD_NOISE_POISSON;
        else if (synth_noise == "speckle") p.kind = OPD_NOISE_SPECKLE;
        else {
            std::fprintf(stderr, "error: unknown noise kind '%s'\n", synth_noise.c_str());
            return kExitUsage;
        }
        const bool sigma_ok = p.kind == OPD_NOISE_GAUSSIAN;
        const bool lambda_ok = p.kind == OPD_NOISE_POISSON;
        const bool looks_ok = p.kind == OPD_NOISE_SPECKLE;
        if ((opt_sigma->count() && !sigma_ok) || (opt_lambda->count() && !lambda_ok) ||
            (opt_looks->count() && !looks_ok)) {
            std::fprintf(stderr,
                         "error: noise parameter does not match --noise %s "
                         "(--sigma is gaussian, --lambda poisson, --looks speckle)\n",
                         synth_noise.c_str());
            return kExitUsage;
        }
        p.sigma = synth_sigma;
        p.lambda = synth_lambda;
        p.looks = synth_looks;
        p.frames = synth_frames;
        p.count = synth_count;
        p.size = synth_size;
        p.seed = synth_seed;
        if (!synth_clean_dir.empty()) p.clean_dir = synth_clean_dir.c_str();
        if (opd_status s = opd_synth_dataset(&p, synth_out.c_str()); s != OPD_OK) return fail(s);

        DatasetHandle h;
        if (opd_status s = opd_dataset_open(synth_out.c_str(), &h.ds); s != OPD_OK) return fail(s);
        opd_dataset_info info;
        opd_dataset_info_get(h.ds, &info);
        std::printf("wrote %s/manifest.json: %d samples, m=%d, %dx%d, %s noise\n",
                    synth_out.c_str(), info.samples, info.frames_per_sample, info.height,
                    info.width, synth_noise.c_str());
        return kExitOk;
    }

    if (train->parsed()) {
        DatasetHandle data;
        if (opd_status s = opd_dataset_open(train_data.c_str(), &data.ds); s != OPD_OK) {
            return fail(s);
        }
        ModelHandle model;
        if (opd_status s = opd_model_create(train_seed, &model.m); s != OPD_OK) return fail(s);

        tp.strategy = train_strategy.c_str();
        tp.steps = train_steps;
        tp.batch_samples = train_batch;
        tp.learning_rate = train_lr;
        tp.seed = train_seed;
        tp.validation_fraction = train_val_fraction;
        tp.log_every = train_log_every;
        tp.val_every = train_val_every;
        tp.full_pairs = train_full_pairs ? 1 : 0;

        opd_train_result res;
        opd_status s =
            opd_train(model.m, data.ds, &tp, train_log.empty() ? nullptr : train_log.c_str(),
                      print_progress_row, nullptr, &res);
        if (s != OPD_OK) return fail(s);
        if (opd_status sv = opd_model_save(model.m, train_ckpt.c_str()); sv != OPD_OK) {
            return fail(sv);
        }
        std::printf("done in %.1fs: final val psnr %.3f dB (input %.3f dB), checkpoint %s\n",
                    res.seconds, res.final_val_psnr, res.input_psnr, train_ckpt.c_str());
        return kExitOk;
    }

    if (eval->parsed()) {
        if (eval_model.empty() == eval_method.empty()) {
            std::fprintf(stderr, "error: pass exactly one of --model or --method aar\n");
            return kExitUsage;
        }
        if (!eval_method.empty() && eval_method != "aar") {
            std::fprintf(stderr, "error: unknown method '%s'\n", eval_method.c_str());
            return kExitUsage;
        }
        if (eval_mode != "per-frame" && eval_mode != "fused") {
            std::fprintf(stderr, "error: --mode must be per-frame or fused\n");
            return kExitUsage;
        }
        DatasetHandle data;
        if (opd_status s = opd_dataset_open(eval_data.c_str(), &data.ds); s != OPD_OK) {
            return fail(s);
        }
        opd_metrics m;
        if (!eval_method.empty()) {
            if (opd_status s = opd_evaluate_aar(data.ds, &m); s != OPD_OK) return fail(s);
        } else {
            ModelHandle model;
            if (opd_status s = opd_model_load(eval_model.c_str(), &model.m); s != OPD_OK) {
                return fail(s);
            }
            const opd_infer_mode mode =
                eval_mode == "fused" ? OPD_INFER_FUSED : OPD_INFER_PER_FRAME;
            if (opd_status s = opd_evaluate_model(model.m, data.ds, mode, &m); s != OPD_OK) {
                return fail(s);
            }
        }
        std::printf("psnr %.4f dB  ssim %.5f  rmse %.6f  (%lld images%s)\n", m.psnr, m.ssim,
                    m.rmse, static_cast<long long>(m.images),
                    m.proxy_reference ? ", proxy reference" : "");
        if (m.psnr_inf_excluded > 0) {
            std::printf("note: %lld identical pairs excluded from the psnr mean\n",
                        static_cast<long long>(m.psnr_inf_excluded));
        }
        if (!eval_report.empty()) {
            ordered_json j;
            j["version"] = 1;
            j["kind"] = "eval";
            j["data"] = eval_data;
            j["method"] = eval_method.empty() ? "model" : "aar";
            if (!eval_model.empty()) j["model"] = eval_model;
            j["mode"] = eval_mode;
            j["metrics"] = metrics_json(m);
            write_json(eval_report, j);
            std::printf("report written to %s\n", eval_report.c_str());
        }
        return kExitOk;
    }

    if (den->parsed()) {
        if (den_mode != "per-frame" && den_mode != "fused") {
            std::fprintf(stderr, "error: --mode must be per-frame or fused\n");
            return kExitUsage;
        }
        DatasetHandle data;
        if (opd_status s = opd_dataset_open(den_input.c_str(), &data.ds); s != OPD_OK) {
            return fail(s);
        }
        ModelHandle model;
        if (opd_status s = opd_model_load(den_model.c_str(), &model.m); s != OPD_OK) {
            return fail(s);
        }
        const opd_infer_mode mode = den_mode == "fused" ? OPD_INFER_FUSED : OPD_INFER_PER_FRAME;
        if (opd_status s = opd_denoise(model.m, data.ds, den_output.c_str(), mode); s != OPD_OK) {
            return fail(s);
        }
        opd_dataset_info info;
        opd_dataset_info_get(data.ds, &info);
        std::printf("denoised %d sample(s) into %s\n", info.samples, den_output.c_str());
        return kExitOk;
    }

    if (cmp->parsed()) {
        DatasetHandle data;
        if (opd_status s = opd_dataset_open(cmp_data.c_str(), &data.ds); s != OPD_OK) {
            return fail(s);
        }
        double in_psnr = 0.0;
        if (opd_status s = opd_input_psnr(data.ds, &in_psnr); s != OPD_OK) return fail(s);

        const auto t0 = std::chrono::steady_clock::now();
        bool any_failed = false;
        ordered_json strategies = ordered_json::array();
        for (const auto& strat : cmp_strategies) {
            ordered_json cells = ordered_json::array();
            std::vector<double> psnrs, ssims, rmses;
            for (int k = 0; k < cmp_seeds; ++k) {
                const std::uint64_t seed = cmp_seed + static_cast<std::uint64_t>(k);
                std::printf("[compare] %s seed %llu: training %lld steps...\n", strat.c_str(),
                            static_cast<unsigned long long>(seed),
                            static_cast<long long>(cmp_steps));
                std::fflush(stdout);

                ModelHandle model;
                if (opd_status s = opd_model_create(seed, &model.m); s != OPD_OK) return fail(s);
                opd_train_params p;
                opd_train_params_init(&p);
                p.strategy = strat.c_str();
                p.steps = cmp_steps;
                p.batch_samples = cmp_batch;
                p.learning_rate = cmp_lr;
                p.seed = seed;

                std::string curve_path;
                if (!cmp_curves.empty()) {
                    curve_path = cmp_curves + "/cell_" + strat + "_" + std::to_string(seed) +
                                 ".csv";
                }
                opd_train_result res;
                opd_status s = opd_train(model.m, data.ds, &p,
                                         curve_path.empty() ? nullptr : curve_path.c_str(),
                                         nullptr, nullptr, &res);
                ordered_json cell;
                cell["seed"] = seed;
                if (s == OPD_OK) {
                    cell["status"] = "ok";
                    cell["psnr"] = res.final_val_psnr;
                    cell["ssim"] = res.final_val_ssim;
                    cell["rmse"] = res.final_val_rmse;
                    cell["seconds"] = res.seconds;
                    psnrs.push_back(res.final_val_psnr);
                    ssims.push_back(res.final_val_ssim);
                    rmses.push_back(res.final_val_rmse);
                    std::printf("[compare] %s seed %llu: val psnr %.3f dB (%.1fs)\n",
                                strat.c_str(), static_cast<unsigned long long>(seed),
                                res.final_val_psnr, res.seconds);
                } else {
                    cell["status"] = opd_status_name(s);
                    cell["error"] = opd_last_error();
                    any_failed = true;
                    std::fprintf(stderr, "[compare] %s seed %llu failed: %s\n", strat.c_str(),
                                 static_cast<unsigned long long>(seed), opd_last_error());
                }
                cells.push_back(cell);
            }
            auto mean_of = [](const std::vector<double>& v) {
                double a = 0;
                for (double x : v) a += x;
                return v.empty() ? 0.0 : a / v.size();
            };
            auto std_of = [&](const std::vector<double>& v) {
                if (v.size() < 2) return 0.0;
                const double mu = mean_of(v);
                double a = 0;
                for (double x : v) a += (x - mu) * (x - mu);
                return std::sqrt(a / (v.size() - 1));
            };
            ordered_json entry;
            entry["name"] = strat;
            entry["cells"] = cells;
            entry["mean"] = {{"psnr", mean_of(psnrs)}, {"ssim", mean_of(ssims)},
                             {"rmse", mean_of(rmses)}};
            entry["std"] = {{"psnr", std_of(psnrs)}, {"ssim", std_of(ssims)},
                            {"rmse", std_of(rmses)}};
            strategies.push_back(entry);
        }

        ordered_json report;
        report["version"] = 1;
        report["kind"] = "compare";
        report["data"] = cmp_data;
        report["steps"] = cmp_steps;
        report["batch_samples"] = cmp_batch;
        report["learning_rate"] = cmp_lr;
        report["base_seed"] = cmp_seed;
        report["seeds"] = cmp_seeds;
        report["input_psnr"] = in_psnr;
        report["strategies"] = strategies;
        report["runtime_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_json(cmp_out, report);

        std::printf("\ninput psnr %.3f dB\n", in_psnr);
        for (const auto& s : strategies) {
            std::printf("%-8s mean psnr %.3f +- %.3f dB  ssim %.4f  rmse %.5f\n",
                        s["name"].get<std::string>().c_str(), s["mean"]["psnr"].get<double>(),
                        s["std"]["psnr"].get<double>(), s["mean"]["ssim"].get<double>(),
                        s["mean"]["rmse"].get<double>());
        }
        std::printf("report written to %s\n", cmp_out.c_str());
        return any_failed ? kExitPartial : kExitOk;
    }

    return kExitUsage;
}
