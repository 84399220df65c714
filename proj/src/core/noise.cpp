#include "core/noise.hpp"

#include "core/dataset.hpp"
#include "core/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace fs = std::filesystem;

namespace opd {

const char* noise_kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::poisson: return "poisson";
        case NoiseKind::speckle: return "speckle";
    }
    return "?";
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "poisson") return NoiseKind::poisson;
    if (name == "speckle") return NoiseKind::speckle;
    throw std::invalid_argument("unknown noise kind: " + name);
}

void NoiseSpec::validate() const {
    if (kind == NoiseKind::gaussian && sigma255 < 0) {
        throw std::invalid_argument("gaussian sigma must be >= 0");
    }
    if (kind == NoiseKind::poisson && lambda <= 0) {
        throw std::invalid_argument("poisson lambda must be > 0");
    }
    if (kind == NoiseKind::speckle && looks < 1) {
        throw std::invalid_argument("speckle looks must be >= 1");
    }
}

double NoiseSpec::active_parameter() const {
    switch (kind) {
        case NoiseKind::gaussian: return sigma255;
        case NoiseKind::poisson: return lambda;
        case NoiseKind::speckle: return looks;
    }
    return 0;
}

Tensor<float> add_gaussian(const Tensor<float>& clean, double sigma255, RngStream& rng) {
    if (sigma255 < 0) throw std::invalid_argument("add_gaussian: sigma must be >= 0");
    const double s = sigma255 / 255.0;
    Tensor<float> out = clean.clone_detached();
    if (sigma255 == 0) return out;
    for (auto& v : out.values()) v = static_cast<float>(v + s * rng.normal());
    return out;
}

Tensor<float> add_poisson(const Tensor<float>& clean, double lambda, RngStream& rng) {
    if (lambda <= 0) throw std::invalid_argument("add_poisson: lambda must be > 0");
    Tensor<float> out = clean.clone_detached();
    for (auto& v : out.values()) {
        if (v < 0.0f || v > 1.0f) {
            throw std::invalid_argument("add_poisson: clean values must lie in [0,1]");
        }
        v = static_cast<float>(static_cast<double>(rng.poisson(lambda * v)) / lambda);
    }
    return out;
}

Tensor<float> add_speckle(const Tensor<float>& clean, double looks, RngStream& rng) {
    if (looks < 1) throw std::invalid_argument("add_speckle: looks must be >= 1");
    Tensor<float> out = clean.clone_detached();
    for (auto& v : out.values()) v = static_cast<float>(v * rng.gamma(looks, 1.0 / looks));
    return out;
}

Tensor<float> apply_noise(const Tensor<float>& clean, const NoiseSpec& spec, RngStream& rng) {
    spec.validate();
    switch (spec.kind) {
        case NoiseKind::gaussian: return add_gaussian(clean, spec.sigma255, rng);
        case NoiseKind::poisson: return add_poisson(clean, spec.lambda, rng);
        case NoiseKind::speckle: return add_speckle(clean, spec.looks, rng);
    }
    throw std::logic_error("unreachable");
}

FrameStack make_stack(const Tensor<float>& clean, const NoiseSpec& spec, int m,
                      std::uint64_t master_seed, std::int64_t sample_index) {
    if (m < 2) throw std::invalid_argument("make_stack: m must be >= 2");
    FrameStack stack;
    stack.clean = clean.clone_detached();
    stack.frames.reserve(m);
    for (int j = 0; j < m; ++j) {
        RngStream rng(derive_seed(master_seed, seed_tag::noise,
                                  static_cast<std::uint64_t>(sample_index),
                                  static_cast<std::uint64_t>(j)));
        stack.frames.push_back(apply_noise(clean, spec, rng));
    }
    return stack;
}

namespace {

// Bilinear upsample of a coarse random grid: a cheap band-limited field.
void add_smooth_field(std::vector<float>& img, int S, int cells, float weight, RngStream& rng) {
    const int G = cells + 1;
    std::vector<float> grid(static_cast<std::size_t>(G) * G);
    for (auto& g : grid) g = static_cast<float>(rng.uniform01());
    for (int y = 0; y < S; ++y) {
        const float fy = static_cast<float>(y) * cells / S;
        const int gy = std::min(static_cast<int>(fy), cells - 1);
        const float ty = fy - gy;
        for (int x = 0; x < S; ++x) {
            const float fx = static_cast<float>(x) * cells / S;
            const int gx = std::min(static_cast<int>(fx), cells - 1);
            const float tx = fx - gx;
            const float v00 = grid[gy * G + gx], v01 = grid[gy * G + gx + 1];
            const float v10 = grid[(gy + 1) * G + gx], v11 = grid[(gy + 1) * G + gx + 1];
            img[static_cast<std::size_t>(y) * S + x] +=
                weight * ((1 - ty) * ((1 - tx) * v00 + tx * v01) +
                          ty * ((1 - tx) * v10 + tx * v11));
        }
    }
}

}  // namespace

Tensor<float> procedural_clean(int size, std::uint64_t seed, std::int64_t sample_index) {
    if (size < 8) throw std::invalid_argument("procedural_clean: size must be >= 8");
    RngStream rng(derive_seed(seed, seed_tag::clean_gen,
                              static_cast<std::uint64_t>(sample_index)));
    const int S = size;
    std::vector<float> img(static_cast<std::size_t>(S) * S, 0.0f);
    add_smooth_field(img, S, 4, 0.6f, rng);
    add_smooth_field(img, S, 8, 0.4f, rng);

    float lo = img[0], hi = img[0];
    for (float v : img) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = std::max(hi - lo, 1e-6f);
    for (auto& v : img) v = 0.15f + 0.7f * (v - lo) / span;

    const int n_shapes = 2 + static_cast<int>(rng.below(4));
    for (int si = 0; si < n_shapes; ++si) {
        const float fill = static_cast<float>(0.05 + 0.9 * rng.uniform01());
        const float alpha = static_cast<float>(0.55 + 0.45 * rng.uniform01());
        const int kind = static_cast<int>(rng.below(3));
        if (kind == 0) {  // rectangle
            const int w = S / 8 + static_cast<int>(rng.below(S / 2));
            const int h = S / 8 + static_cast<int>(rng.below(S / 2));
            const int x0 = static_cast<int>(rng.below(std::max(1, S - w)));
            const int y0 = static_cast<int>(rng.below(std::max(1, S - h)));
            for (int y = y0; y < std::min(S, y0 + h); ++y)
                for (int x = x0; x < std::min(S, x0 + w); ++x) {
                    float& p = img[static_cast<std::size_t>(y) * S + x];
                    p = (1 - alpha) * p + alpha * fill;
                }
        } else if (kind == 1) {  // disc
            const int r = S / 10 + static_cast<int>(rng.below(S / 4));
            const int cx = static_cast<int>(rng.below(S));
            const int cy = static_cast<int>(rng.below(S));
            for (int y = std::max(0, cy - r); y < std::min(S, cy + r + 1); ++y)
                for (int x = std::max(0, cx - r); x < std::min(S, cx + r + 1); ++x) {
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > r * r) continue;
                    float& p = img[static_cast<std::size_t>(y) * S + x];
                    p = (1 - alpha) * p + alpha * fill;
                }
        } else {  // striped patch, horizontal or vertical
            const int w = S / 4 + static_cast<int>(rng.below(S / 2));
            const int h = S / 4 + static_cast<int>(rng.below(S / 2));
            const int x0 = static_cast<int>(rng.below(std::max(1, S - w)));
            const int y0 = static_cast<int>(rng.below(std::max(1, S - h)));
            const bool horiz = rng.below(2) == 0;
            const double freq = 2.0 * M_PI * (2.0 + rng.uniform01() * 4.0) / 16.0;
            const double phase = rng.uniform01() * 2.0 * M_PI;
            for (int y = y0; y < std::min(S, y0 + h); ++y)
                for (int x = x0; x < std::min(S, x0 + w); ++x) {
                    const double t = horiz ? y : x;
                    const float s =
                        static_cast<float>(0.5 + 0.35 * std::sin(freq * t + phase));
                    float& p = img[static_cast<std::size_t>(y) * S + x];
                    p = (1 - alpha) * p + alpha * s;
                }
        }
    }

    Tensor<float> out(Shape{1, 1, S, S});
    for (std::size_t i = 0; i < img.size(); ++i) {
        out.values()[i] = std::clamp(img[i], 0.0f, 1.0f);
    }
    return out;
}

namespace {

// Snap to the 8-bit grid so the stored clean.png equals the clean used
// for synthesis bit for bit.
void quantize8(Tensor<float>& t) {
    for (auto& v : t.values()) {
        v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
    }
}

Tensor<float> center_crop(const GrayImageF& im, int size) {
    const int y0 = (im.h - size) / 2, x0 = (im.w - size) / 2;
    Tensor<float> out(Shape{1, 1, size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            out.values()[static_cast<std::size_t>(y) * size + x] =
                im.v[static_cast<std::size_t>(y0 + y) * im.w + (x0 + x)];
    return out;
}

}  // namespace

std::string synth_dataset(const SynthParams& params, const std::string& out_dir) {
    params.noise.validate();
    if (params.frames < 2) throw std::invalid_argument("synth_dataset: frames must be >= 2");
    if (params.size < 8 || params.size % 2 != 0) {
        throw std::invalid_argument("synth_dataset: size must be even and >= 8");
    }

    std::vector<Tensor<float>> cleans;
    if (!params.clean_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(params.clean_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".png") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            if (params.count > 0 && static_cast<int>(cleans.size()) >= params.count) break;
            try {
                GrayImageF im = read_png_gray(f.string());
                if (im.h < params.size || im.w < params.size) {
                    std::fprintf(stderr, "warning: %s is smaller than %dx%d, skipped\n",
                                 f.string().c_str(), params.size, params.size);
                    continue;
                }
                cleans.push_back(center_crop(im, params.size));
            } catch (const std::exception& ex) {
                std::fprintf(stderr, "warning: cannot read %s (%s), skipped\n",
                             f.string().c_str(), ex.what());
            }
        }
    } else {
        if (params.count < 1) throw std::invalid_argument("synth_dataset: count must be >= 1");
        for (int i = 0; i < params.count; ++i) {
            cleans.push_back(procedural_clean(params.size, params.seed, i));
        }
    }
    if (cleans.empty()) {
        throw std::runtime_error("synth_dataset: no usable clean images");
    }

    fs::create_directories(out_dir);
    std::vector<ManifestSample> entries;
    for (std::size_t i = 0; i < cleans.size(); ++i) {
        quantize8(cleans[i]);
        FrameStack stack = make_stack(cleans[i], params.noise, params.frames, params.seed,
                                      static_cast<std::int64_t>(i));
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "sample_%04zu", i);
        stack.id = idbuf;
        write_sample_dir(out_dir, stack);
        entries.push_back(ManifestSample{stack.id, params.size, params.size, true});
    }

    DatasetMeta meta;
    meta.noise = params.noise;
    meta.m = params.frames;
    meta.seed = params.seed;
    return write_manifest(out_dir, meta, entries);
}

}  // namespace opd
