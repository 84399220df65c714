#include "core/model.hpp"

#include "core/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace opd {

template <typename T>
Tensor<T> he_init(const Shape& weight_shape, RngStream& rng) {
    if (weight_shape.size() != 4) {
        throw std::invalid_argument("he_init: expected a conv weight shape (O,C,k,k), got " +
                                    shape_str(weight_shape));
    }
    const int O = weight_shape[0], C = weight_shape[1], kh = weight_shape[2], kw = weight_shape[3];
    const double stddev = std::sqrt(2.0 / (static_cast<double>(C) * kh * kw));
    Tensor<T> w(weight_shape);
    for (int o = 0; o < O; ++o)
        for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                    w.at4(o, c, ky, kx) = static_cast<T>(rng.normal() * stddev);
    return w;
}

const std::vector<ConvLayerPlan>& denoiser_plan() {
    static const std::vector<ConvLayerPlan> plan = {
        {"enc1a", 1, 16, 3, 1, 1, true},
        {"enc1b", 16, 16, 3, 1, 1, true},
        {"down", 16, 32, 3, 2, 1, true},
        {"enc2", 32, 32, 3, 1, 1, true},
        {"up_conv", 32, 16, 3, 1, 1, true},
        {"skip_conv", 32, 16, 3, 1, 1, true},
        {"head", 16, 1, 3, 1, 1, false},
    };
    return plan;
}

std::int64_t denoiser_param_count() {
    std::int64_t n = 0;
    for (const auto& l : denoiser_plan()) {
        n += static_cast<std::int64_t>(l.out_channels) * l.in_channels * l.kernel * l.kernel;
        n += l.out_channels;
    }
    return n;
}

template <typename T>
DenoiserNet<T>::DenoiserNet(std::uint64_t seed) : seed_(seed) {
    const auto& plan = denoiser_plan();
    layers_.reserve(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& p = plan[i];
        RngStream rng(derive_seed(seed, seed_tag::init, i));
        Layer layer{he_init<T>(Shape{p.out_channels, p.in_channels, p.kernel, p.kernel}, rng),
                    Tensor<T>(Shape{p.out_channels}, T(0)), p};
        layer.w.set_requires_grad(true);
        layer.b.set_requires_grad(true);
        layers_.push_back(std::move(layer));
    }
}

template <typename T>
Tensor<T> DenoiserNet<T>::forward(Tape<T>& tape, const Tensor<T>& batch) const {
    if (batch.rank() != 4 || batch.dim(1) != 1) {
        throw std::invalid_argument("denoiser forward: expected (B,1,H,W), got " +
                                    shape_str(batch.shape()));
    }
    if (batch.dim(2) % 2 != 0 || batch.dim(3) % 2 != 0) {
        throw std::invalid_argument("denoiser forward: H and W must be even (pad the input), got " +
                                    shape_str(batch.shape()));
    }

    auto conv_of = [&](int i, const Tensor<T>& x) {
        const Layer& l = layers_[i];
        Tensor<T> y = conv2d(tape, x, l.w, l.b, l.plan.stride, l.plan.padding);
        return l.plan.relu_after ? relu(tape, y) : y;
    };

    Tensor<T> t = conv_of(0, batch);
    Tensor<T> enc1 = conv_of(1, t);
    Tensor<T> t2 = conv_of(2, enc1);
    Tensor<T> t3 = conv_of(3, t2);
    Tensor<T> up = upsample_nearest_2x(tape, t3);
    Tensor<T> t4 = conv_of(4, up);
    Tensor<T> merged = concat_channels(tape, enc1, t4);
    Tensor<T> t5 = conv_of(5, merged);
    return conv_of(6, t5);
}

template <typename T>
std::vector<Tensor<T>> DenoiserNet<T>::parameters() const {
    std::vector<Tensor<T>> out;
    out.reserve(layers_.size() * 2);
    for (const auto& l : layers_) {
        out.push_back(l.w);
        out.push_back(l.b);
    }
    return out;
}

template <typename T>
std::int64_t DenoiserNet<T>::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers_) n += l.w.numel() + l.b.numel();
    return n;
}

template Tensor<float> he_init<float>(const Shape&, RngStream&);
template Tensor<double> he_init<double>(const Shape&, RngStream&);
template class DenoiserNet<float>;
template class DenoiserNet<double>;

}  // namespace opd
