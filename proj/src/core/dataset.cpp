#include "core/dataset.hpp"

#include "core/png_io.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace opd {

namespace {

constexpr char kFramesMagic[4] = {'O', 'P', 'D', 'F'};

void write_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("frames binary truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(sizeof(float) == 4);

}  // namespace

bool Dataset::all_have_clean() const {
    for (const auto& s : stacks) {
        if (!s.has_clean()) return false;
    }
    return !stacks.empty();
}

void write_frames_bin(const std::string& path, const std::vector<Tensor<float>>& frames) {
    if (frames.empty()) throw std::invalid_argument("write_frames_bin: no frames");
    const int H = frames[0].dim(2), W = frames[0].dim(3);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kFramesMagic, 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(frames.size()));
    write_u32(os, static_cast<std::uint32_t>(H));
    write_u32(os, static_cast<std::uint32_t>(W));
    for (const auto& f : frames) {
        if (f.dim(2) != H || f.dim(3) != W) {
            throw std::invalid_argument("write_frames_bin: inconsistent frame shapes");
        }
        // x86 is little-endian; floats go out as stored
        os.write(reinterpret_cast<const char*>(f.data()),
                 static_cast<std::streamsize>(f.numel() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Tensor<float>> read_frames_bin(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kFramesMagic, 4) != 0) {
        throw std::runtime_error("bad magic in " + path);
    }
    const std::uint32_t version = read_u32(is);
    if (version != 1) throw std::runtime_error("unsupported frames version in " + path);
    const std::uint32_t m = read_u32(is);
    const std::uint32_t H = read_u32(is);
    const std::uint32_t W = read_u32(is);
    if (m == 0 || H == 0 || W == 0) throw std::runtime_error("empty frames binary: " + path);
    std::vector<Tensor<float>> frames;
    frames.reserve(m);
    for (std::uint32_t j = 0; j < m; ++j) {
        Tensor<float> f(Shape{1, 1, static_cast<int>(H), static_cast<int>(W)});
        is.read(reinterpret_cast<char*>(f.data()),
                static_cast<std::streamsize>(f.numel() * sizeof(float)));
        if (!is) throw std::runtime_error("frames binary truncated: " + path);
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_sample_dir(const std::string& dataset_dir, const FrameStack& stack) {
    const fs::path dir = fs::path(dataset_dir) / stack.id;
    fs::create_directories(dir);
    const int H = stack.frames[0].dim(2), W = stack.frames[0].dim(3);
    for (std::size_t j = 0; j < stack.frames.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%02zu.png", j);
        write_png_gray8((dir / name).string(), stack.frames[j].data(), H, W);
    }
    if (stack.has_clean()) {
        write_png_gray8((dir / "clean.png").string(), stack.clean.data(), H, W);
    }
    write_frames_bin((dir / "frames_f32.bin").string(), stack.frames);
}

std::string write_manifest(const std::string& dataset_dir, const DatasetMeta& meta,
                           const std::vector<ManifestSample>& samples) {
    ordered_json noise;
    noise["kind"] = noise_kind_name(meta.noise.kind);
    switch (meta.noise.kind) {
        case NoiseKind::gaussian: noise["sigma"] = meta.noise.sigma255; break;
        case NoiseKind::poisson: noise["lambda"] = meta.noise.lambda; break;
        case NoiseKind::speckle: noise["looks"] = meta.noise.looks; break;
    }
    ordered_json root;
    root["version"] = meta.version;
    root["noise"] = noise;
    root["m"] = meta.m;
    root["seed"] = meta.seed;
    root["samples"] = ordered_json::array();
    for (const auto& s : samples) {
        root["samples"].push_back(
            ordered_json{{"id", s.id}, {"h", s.h}, {"w", s.w}, {"has_clean", s.has_clean}});
    }
    const std::string path = (fs::path(dataset_dir) / "manifest.json").string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write manifest: " + path);
    os << root.dump(2) << "\n";
    return path;
}

Dataset load_dataset(const std::string& dataset_dir) {
    const fs::path mpath = fs::path(dataset_dir) / "manifest.json";
    std::ifstream is(mpath);
    if (!is) throw std::runtime_error("no manifest.json in " + dataset_dir);
    ordered_json root;
    try {
        is >> root;
    } catch (const std::exception& ex) {
        throw std::runtime_error("manifest parse error: " + std::string(ex.what()));
    }

    Dataset ds;
    ds.meta.version = root.at("version").get<int>();
    const auto& noise = root.at("noise");
    ds.meta.noise.kind = parse_noise_kind(noise.at("kind").get<std::string>());
    switch (ds.meta.noise.kind) {
        case NoiseKind::gaussian: ds.meta.noise.sigma255 = noise.at("sigma").get<double>(); break;
        case NoiseKind::poisson: ds.meta.noise.lambda = noise.at("lambda").get<double>(); break;
        case NoiseKind::speckle: ds.meta.noise.looks = noise.at("looks").get<double>(); break;
    }
    ds.meta.m = root.at("m").get<int>();
    ds.meta.seed = root.at("seed").get<std::uint64_t>();

    for (const auto& s : root.at("samples")) {
        FrameStack stack;
        stack.id = s.at("id").get<std::string>();
        const fs::path dir = fs::path(dataset_dir) / stack.id;
        stack.frames = read_frames_bin((dir / "frames_f32.bin").string());
        if (s.at("has_clean").get<bool>()) {
            GrayImageF im = read_png_gray((dir / "clean.png").string());
            Tensor<float> clean(Shape{1, 1, im.h, im.w});
            std::copy(im.v.begin(), im.v.end(), clean.values().begin());
            stack.clean = clean;
        }
        if (static_cast<int>(stack.frames.size()) != ds.meta.m) {
            throw std::runtime_error("sample " + stack.id + " has " +
                                     std::to_string(stack.frames.size()) + " frames, expected " +
                                     std::to_string(ds.meta.m));
        }
        ds.stacks.push_back(std::move(stack));
    }
    if (ds.stacks.empty()) throw std::runtime_error("dataset has no samples");
    ds.height = ds.stacks[0].frames[0].dim(2);
    ds.width = ds.stacks[0].frames[0].dim(3);
    return ds;
}

Dataset load_sample_dir(const std::string& sample_dir) {
    const fs::path dir(sample_dir);
    Dataset ds;
    FrameStack stack;
    stack.id = dir.filename().string();
    stack.frames = read_frames_bin((dir / "frames_f32.bin").string());
    if (fs::exists(dir / "clean.png")) {
        GrayImageF im = read_png_gray((dir / "clean.png").string());
        Tensor<float> clean(Shape{1, 1, im.h, im.w});
        std::copy(im.v.begin(), im.v.end(), clean.values().begin());
        stack.clean = clean;
    }
    ds.meta.m = static_cast<int>(stack.frames.size());
    ds.height = stack.frames[0].dim(2);
    ds.width = stack.frames[0].dim(3);
    ds.stacks.push_back(std::move(stack));
    return ds;
}

}  // namespace opd
