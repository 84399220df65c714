#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace opd {

namespace {

constexpr char kMagic[4] = {'O', 'P', 'D', '1'};

std::string header_text(const DenoiserNet<float>& net) {
    const auto& plan = denoiser_plan();
    std::ostringstream os;
    os << "format=opd-checkpoint-v1\n";
    os << "arch=" << kArchId << "\n";
    os << "seed=" << net.seed() << "\n";
    os << "strategy=" << net.trained_strategy() << "\n";
    os << "steps=" << net.trained_steps() << "\n";
    os << "layers=" << plan.size() << "\n";
    for (const auto& l : plan) {
        os << "layer=" << l.name << " w=" << l.out_channels << "," << l.in_channels << ","
           << l.kernel << "," << l.kernel << " b=" << l.out_channels << "\n";
    }
    return os.str();
}

}  // namespace

void save_checkpoint(const std::string& path, const DenoiserNet<float>& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const std::string header = header_text(net);
    const std::uint32_t hlen = static_cast<std::uint32_t>(header.size());
    os.write(kMagic, 4);
    const unsigned char lenb[4] = {static_cast<unsigned char>(hlen & 0xff),
                                   static_cast<unsigned char>((hlen >> 8) & 0xff),
                                   static_cast<unsigned char>((hlen >> 16) & 0xff),
                                   static_cast<unsigned char>((hlen >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(lenb), 4);
    os.write(header.data(), static_cast<std::streamsize>(header.size()));

    for (const auto& p : net.parameters()) {
        if (p.rank() == 4) {
            const int O = p.dim(0), C = p.dim(1), kh = p.dim(2), kw = p.dim(3);
            std::vector<float> buf;
            buf.reserve(p.numel());
            for (int o = 0; o < O; ++o)
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) buf.push_back(p.at4(o, c, ky, kx));
            os.write(reinterpret_cast<const char*>(buf.data()),
                     static_cast<std::streamsize>(buf.size() * sizeof(float)));
        } else {
            os.write(reinterpret_cast<const char*>(p.data()),
                     static_cast<std::streamsize>(p.numel() * sizeof(float)));
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

DenoiserNet<float> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw CheckpointError(CheckpointError::Kind::bad_magic,
                              "not a checkpoint (bad magic): " + path);
    }
    unsigned char lenb[4];
    is.read(reinterpret_cast<char*>(lenb), 4);
    if (!is) throw CheckpointError(CheckpointError::Kind::truncated, "truncated header: " + path);
    const std::uint32_t hlen = static_cast<std::uint32_t>(lenb[0]) |
                               (static_cast<std::uint32_t>(lenb[1]) << 8) |
                               (static_cast<std::uint32_t>(lenb[2]) << 16) |
                               (static_cast<std::uint32_t>(lenb[3]) << 24);
    std::string header(hlen, '\0');
    is.read(header.data(), hlen);
    if (!is) throw CheckpointError(CheckpointError::Kind::truncated, "truncated header: " + path);

    std::uint64_t seed = 0;
    std::string strategy = "none";
    std::int64_t steps = 0;
    std::string arch;
    std::vector<std::string> layer_lines;
    std::istringstream hs(header);
    std::string line;
    while (std::getline(hs, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "arch") arch = val;
            else if (key == "seed") seed = std::stoull(val);
            else if (key == "strategy") strategy = val;
            else if (key == "steps") steps = std::stoll(val);
            else if (key == "layer") layer_lines.push_back(val);
        } catch (const std::exception&) {
            throw CheckpointError(CheckpointError::Kind::parse, "bad header field: " + line);
        }
    }
    if (arch != kArchId) {
        throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                              "architecture mismatch: checkpoint has '" + arch + "', expected '" +
                                  kArchId + "'");
    }
    const auto& plan = denoiser_plan();
    if (layer_lines.size() != plan.size()) {
        throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                              "layer count mismatch in " + path);
    }
    for (std::size_t i = 0; i < plan.size(); ++i) {
        std::ostringstream expect;
        expect << plan[i].name << " w=" << plan[i].out_channels << "," << plan[i].in_channels
               << "," << plan[i].kernel << "," << plan[i].kernel << " b=" << plan[i].out_channels;
        if (layer_lines[i] != expect.str()) {
            throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                                  "layer " + std::to_string(i) + " mismatch: checkpoint '" +
                                      layer_lines[i] + "' vs expected '" + expect.str() + "'");
        }
    }

    DenoiserNet<float> net(seed);
    net.set_training_provenance(strategy, steps);
    for (auto& p : net.parameters()) {
        std::vector<float> buf(static_cast<std::size_t>(p.numel()));
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!is) {
            throw CheckpointError(CheckpointError::Kind::truncated,
                                  "truncated payload: " + path);
        }
        if (p.rank() == 4) {
            const int O = p.dim(0), C = p.dim(1), kh = p.dim(2), kw = p.dim(3);
            std::size_t idx = 0;
            for (int o = 0; o < O; ++o)
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) p.at4(o, c, ky, kx) = buf[idx++];
        } else {
            std::copy(buf.begin(), buf.end(), p.values().begin());
        }
    }
    char extra;
    if (is.read(&extra, 1)) {
        throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                              "payload longer than the declared architecture: " + path);
    }
    return net;
}

}  // namespace opd
