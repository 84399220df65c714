#include "core/metrics.hpp"

#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace opd {

Tensor<float> aar(const std::vector<Tensor<float>>& frames) {
    if (frames.empty()) throw std::invalid_argument("aar: empty frame stack");
    Tensor<float> out(frames[0].shape());
    const std::int64_t n = out.numel();
    for (const auto& f : frames) {
        if (f.shape() != out.shape()) throw std::invalid_argument("aar: frame shape mismatch");
    }
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& f : frames) acc += static_cast<double>(f.data()[i]);
        out.data()[i] = static_cast<float>(acc / static_cast<double>(frames.size()));
    }
    return out;
}

namespace {

double mse_double(const Tensor<float>& a, const Tensor<float>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
    double acc = 0.0;
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

}  // namespace

double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak) {
    const double mse = mse_double(a, b, "psnr");
    if (mse == 0.0) return kPsnrInf;
    return 10.0 * std::log10(peak * peak / mse);
}

double rmse(const Tensor<float>& a, const Tensor<float>& b) {
    return std::sqrt(mse_double(a, b, "rmse"));
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

const std::vector<double>& ssim_kernel() {
    static const std::vector<double> g = [] {
        std::vector<double> k(kSsimWindow);
        const int half = kSsimWindow / 2;
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - half;
            k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += k[i];
        }
        for (auto& v : k) v /= sum;
        return k;
    }();
    return g;
}

// separable 'valid' filter with the normalized Gaussian window
std::vector<double> filter_valid(const std::vector<double>& img, int H, int W) {
    const auto& g = ssim_kernel();
    const int Ho = H - kSsimWindow + 1, Wo = W - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(H) * Wo);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < Wo; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                acc += g[t] * img[static_cast<std::size_t>(y) * W + x + t];
            rows[static_cast<std::size_t>(y) * Wo + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(Ho) * Wo);
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                acc += g[t] * rows[static_cast<std::size_t>(y + t) * Wo + x];
            out[static_cast<std::size_t>(y) * Wo + x] = acc;
        }
    return out;
}

}  // namespace

double ssim(const Tensor<float>& a, const Tensor<float>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("ssim: shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    int H, W;
    if (a.rank() == 4) {
        if (a.dim(0) != 1 || a.dim(1) != 1) {
            throw std::invalid_argument("ssim: expected a single-channel image");
        }
        H = a.dim(2);
        W = a.dim(3);
    } else if (a.rank() == 2) {
        H = a.dim(0);
        W = a.dim(1);
    } else {
        throw std::invalid_argument("ssim: expected (H,W) or (1,1,H,W), got " +
                                    shape_str(a.shape()));
    }
    if (H < kSsimWindow || W < kSsimWindow) {
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    }

    const std::int64_t n = a.numel();
    std::vector<double> va(n), vb(n), vaa(n), vbb(n), vab(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = a.data()[i], y = b.data()[i];
        va[i] = x;
        vb[i] = y;
        vaa[i] = x * x;
        vbb[i] = y * y;
        vab[i] = x * y;
    }
    const auto mu_a = filter_valid(va, H, W);
    const auto mu_b = filter_valid(vb, H, W);
    const auto e_aa = filter_valid(vaa, H, W);
    const auto e_bb = filter_valid(vbb, H, W);
    const auto e_ab = filter_valid(vab, H, W);

    constexpr double c1 = kSsimK1 * kSsimK1;  // peak = 1
    constexpr double c2 = kSsimK2 * kSsimK2;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double sa = e_aa[i] - ma * ma;
        const double sb = e_bb[i] - mb * mb;
        const double sab = e_ab[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * sab + c2)) /
               ((ma * ma + mb * mb + c1) * (sa + sb + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

Tensor<float> clip01(const Tensor<float>& t) {
    Tensor<float> out = t.clone_detached();
    for (auto& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

namespace {

std::vector<int> resolve_indices(const Dataset& data, const std::vector<int>& wanted) {
    if (!wanted.empty()) return wanted;
    std::vector<int> all(data.sample_count());
    for (int i = 0; i < data.sample_count(); ++i) all[i] = i;
    return all;
}

struct Accum {
    std::vector<double> psnr_vals, ssim_vals, rmse_vals;
    std::int64_t images = 0;
    std::int64_t inf_excluded = 0;

    void add_sample(const std::vector<Tensor<float>>& preds, const Tensor<float>& ref) {
        double psum = 0.0, ssum = 0.0, rsum = 0.0;
        int pcount = 0;
        for (const auto& p : preds) {
            const double pv = psnr(p, ref);
            if (std::isinf(pv)) {
                ++inf_excluded;
            } else {
                psum += pv;
                ++pcount;
            }
            ssum += ssim(p, ref);
            rsum += rmse(p, ref);
            ++images;
        }
        psnr_vals.push_back(pcount > 0 ? psum / pcount : kPsnrInf);
        ssim_vals.push_back(ssum / static_cast<double>(preds.size()));
        rmse_vals.push_back(rsum / static_cast<double>(preds.size()));
    }

    MetricsReport finish(bool proxy) const {
        MetricsReport r;
        r.per_sample_psnr = psnr_vals;
        r.per_sample_ssim = ssim_vals;
        r.per_sample_rmse = rmse_vals;
        double psum = 0.0;
        std::int64_t pn = 0;
        for (double v : psnr_vals) {
            if (!std::isinf(v)) {
                psum += v;
                ++pn;
            }
        }
        r.mean_psnr = pn > 0 ? psum / pn : kPsnrInf;
        double ssum = 0.0, rsum = 0.0;
        for (double v : ssim_vals) ssum += v;
        for (double v : rmse_vals) rsum += v;
        r.mean_ssim = ssim_vals.empty() ? 0.0 : ssum / ssim_vals.size();
        r.mean_rmse = rmse_vals.empty() ? 0.0 : rsum / rmse_vals.size();
        r.images = images;
        r.psnr_inf_excluded = inf_excluded;
        r.proxy_reference = proxy;
        return r;
    }
};

Tensor<float> reference_for(const FrameStack& stack, bool& proxy) {
    if (stack.has_clean()) return stack.clean;
    proxy = true;
    return aar(stack.frames);
}

}  // namespace

MetricsReport evaluate_model(const DenoiserNet<float>& net, const Dataset& data,
                             InferenceMode mode, const std::vector<int>& sample_indices) {
    const auto indices = resolve_indices(data, sample_indices);
    Accum acc;
    bool proxy = false;
    for (int si : indices) {
        const FrameStack& stack = data.stacks.at(si);
        const int m = stack.frame_count();
        const int H = stack.frames[0].dim(2), W = stack.frames[0].dim(3);

        Tensor<float> batch(Shape{m, 1, H, W});
        const std::size_t plane = static_cast<std::size_t>(H) * W;
        for (int j = 0; j < m; ++j) {
            std::memcpy(batch.data() + j * plane, stack.frames[j].data(), sizeof(float) * plane);
        }
        Tape<float> tape;
        tape.set_recording(false);
        Tensor<float> out = net.forward(tape, batch);

        std::vector<Tensor<float>> preds;
        preds.reserve(m);
        for (int j = 0; j < m; ++j) {
            Tensor<float> p(Shape{1, 1, H, W});
            std::memcpy(p.data(), out.data() + j * plane, sizeof(float) * plane);
            preds.push_back(std::move(p));
        }
        const Tensor<float> ref = reference_for(stack, proxy);
        if (mode == InferenceMode::fused) {
            acc.add_sample({clip01(aar(preds))}, ref);
        } else {
            for (auto& p : preds) p = clip01(p);
            acc.add_sample(preds, ref);
        }
    }
    return acc.finish(proxy);
}

MetricsReport evaluate_aar(const Dataset& data, const std::vector<int>& sample_indices) {
    const auto indices = resolve_indices(data, sample_indices);
    Accum acc;
    bool proxy = false;
    for (int si : indices) {
        const FrameStack& stack = data.stacks.at(si);
        const Tensor<float> ref = reference_for(stack, proxy);
        acc.add_sample({clip01(aar(stack.frames))}, ref);
    }
    return acc.finish(proxy);
}

double input_psnr(const Dataset& data, const std::vector<int>& sample_indices) {
    const auto indices = resolve_indices(data, sample_indices);
    double sum = 0.0;
    std::int64_t n = 0;
    for (int si : indices) {
        const FrameStack& stack = data.stacks.at(si);
        bool proxy = false;
        const Tensor<float> ref = reference_for(stack, proxy);
        for (const auto& f : stack.frames) {
            const double v = psnr(f, ref);
            if (!std::isinf(v)) {
                sum += v;
                ++n;
            }
        }
    }
    return n > 0 ? sum / n : kPsnrInf;
}

}  // namespace opd
