#include "core/ops.hpp"

#include "core/conv_kernels.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace opd {

namespace {

int g_max_threads = 0;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
}

template <typename T>
bool wants_grad(const Tensor<T>& t) {
    return t.requires_grad();
}

// Padded NHWC copy of one frame: (H x W x C) -> (H+2p x W+2p x C).
// Only the border band is zeroed; the interior is a straight row copy.
template <typename T>
void pad_frame(const T* frame, int H, int W, int C, int p, T* out) {
    const int Wp = W + 2 * p;
    const std::size_t row = static_cast<std::size_t>(Wp) * C;
    if (p > 0) {
        std::fill(out, out + static_cast<std::size_t>(p) * row, T(0));
        std::fill(out + static_cast<std::size_t>(H + p) * row,
                  out + static_cast<std::size_t>(H + 2 * p) * row, T(0));
    }
    for (int y = 0; y < H; ++y) {
        T* dst = out + static_cast<std::size_t>(y + p) * row;
        if (p > 0) {
            std::fill(dst, dst + static_cast<std::size_t>(p) * C, T(0));
            std::fill(dst + (static_cast<std::size_t>(p) + W) * C,
                      dst + static_cast<std::size_t>(Wp) * C, T(0));
        }
        std::memcpy(dst + static_cast<std::size_t>(p) * C,
                    frame + static_cast<std::size_t>(y) * W * C, sizeof(T) * W * C);
    }
}

// Per-thread scratch reused across conv calls; sidesteps repeated
// allocation and the zero-fill of freshly grown vectors.
template <typename T>
T* pad_arena(std::size_t n) {
    thread_local std::vector<T> buf;
    if (buf.size() < n) buf.resize(n);
    return buf.data();
}

// weight (O,C,k,k) -> tap-major (ky,kx,c,o)
template <typename T>
std::vector<T> weight_taps(const Tensor<T>& w) {
    const int O = w.dim(0), C = w.dim(1), k = w.dim(2);
    std::vector<T> taps(static_cast<std::size_t>(k) * k * C * O);
    for (int o = 0; o < O; ++o)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
                for (int c = 0; c < C; ++c)
                    taps[((static_cast<std::size_t>(ky) * k + kx) * C + c) * O + o] =
                        w.at4(o, c, ky, kx);
    return taps;
}

// Spatially flipped, channel-transposed taps for the input gradient:
// (ky,kx,o,c) with taps reversed.
template <typename T>
std::vector<T> weight_taps_flipped(const Tensor<T>& w) {
    const int O = w.dim(0), C = w.dim(1), k = w.dim(2);
    std::vector<T> taps(static_cast<std::size_t>(k) * k * C * O);
    for (int o = 0; o < O; ++o)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
                for (int c = 0; c < C; ++c)
                    taps[((static_cast<std::size_t>(k - 1 - ky) * k + (k - 1 - kx)) * O + o) * C +
                         c] = w.at4(o, c, ky, kx);
    return taps;
}

}  // namespace

void set_max_threads(int n) {
    g_max_threads = n > 0 ? n : 0;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

int max_threads() { return g_max_threads; }

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
    if (input.rank() != 4 || weight.rank() != 4) {
        throw std::invalid_argument("conv2d: input and weight must be rank 4, got " +
                                    shape_str(input.shape()) + " and " + shape_str(weight.shape()));
    }
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int O = weight.dim(0), k = weight.dim(2);
    if (weight.dim(3) != k) {
        throw std::invalid_argument("conv2d: kernel must be square, got " +
                                    shape_str(weight.shape()));
    }
    if (k % 2 == 0) {
        throw std::invalid_argument("conv2d: kernel extent must be odd, got k=" + std::to_string(k));
    }
    if (weight.dim(1) != C) {
        throw std::invalid_argument("conv2d: input channels C=" + std::to_string(C) +
                                    " do not match weight channels C=" +
                                    std::to_string(weight.dim(1)) + "; input " +
                                    shape_str(input.shape()) + ", weight " +
                                    shape_str(weight.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != O) {
        throw std::invalid_argument("conv2d: bias must have shape (" + std::to_string(O) +
                                    "), got " + shape_str(bias.shape()));
    }
    if (stride < 1 || padding < 0) {
        throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
    }
    const int Ho = (H + 2 * padding - k) / stride + 1;
    const int Wo = (W + 2 * padding - k) / stride + 1;
    if (H + 2 * padding < k || W + 2 * padding < k || Ho < 1 || Wo < 1) {
        throw std::invalid_argument("conv2d: nonpositive output extent for input " +
                                    shape_str(input.shape()) + " with k=" + std::to_string(k) +
                                    " stride=" + std::to_string(stride) +
                                    " padding=" + std::to_string(padding));
    }

    Tensor<T> out(Shape{B, O, Ho, Wo});
    const std::vector<T> w_tap = weight_taps(weight);
    const int Hp = H + 2 * padding, Wp = W + 2 * padding;
    kern::ConvDims dims{Hp, Wp, C, k, O, stride, Ho, Wo};

    const std::size_t in_frame = static_cast<std::size_t>(C) * H * W;
    const std::size_t out_frame = static_cast<std::size_t>(O) * Ho * Wo;

#pragma omp parallel for schedule(static) if (B > 1)
    for (int b = 0; b < B; ++b) {
        T* inpad = pad_arena<T>(static_cast<std::size_t>(Hp) * Wp * C);
        pad_frame(input.data() + b * in_frame, H, W, C, padding, inpad);
        kern::conv_forward(dims, inpad, w_tap.data(), bias.data(),
                           out.data() + b * out_frame);
    }

    const bool need_dx = wants_grad(input);
    const bool need_dw = wants_grad(weight) || wants_grad(bias);
    if (tape.recording_enabled() && (need_dx || need_dw)) {
        out.set_requires_grad(true);
        Tensor<T> x = input, w = weight, bvec = bias;
        Tensor<T> y = out;
        tape.record(
            [x, w, bvec, y, stride, padding, dims, in_frame, out_frame]() mutable {
                const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
                const int O = w.dim(0), k = w.dim(2);
                const T* dout = y.grad().data();

                if (w.requires_grad() || bvec.requires_grad()) {
                    const std::size_t wln = static_cast<std::size_t>(k) * k * C * O;
                    std::vector<T> dw_all(static_cast<std::size_t>(B) * wln, T(0));
                    std::vector<T> db_all(static_cast<std::size_t>(B) * O, T(0));
#pragma omp parallel for schedule(static) if (B > 1)
                    for (int b = 0; b < B; ++b) {
                        kern::conv_grad_weights(dims, x.data() + b * in_frame, H, W, padding,
                                                dout + b * out_frame, dw_all.data() + b * wln,
                                                db_all.data() + b * O);
                    }
                    // fixed-order reduction keeps results independent of
                    // the worker count
                    std::vector<T> dw(wln, T(0));
                    std::vector<T> db(O, T(0));
                    for (int b = 0; b < B; ++b) {
                        const T* s = dw_all.data() + b * wln;
                        for (std::size_t i = 0; i < wln; ++i) dw[i] += s[i];
                        const T* sb = db_all.data() + b * O;
                        for (int o = 0; o < O; ++o) db[o] += sb[o];
                    }
                    if (w.requires_grad()) {
                        auto& wg = w.grad();
                        for (int o = 0; o < O; ++o)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx)
                                    for (int c = 0; c < C; ++c)
                                        wg[w.index4(o, c, ky, kx)] +=
                                            dw[((static_cast<std::size_t>(ky) * k + kx) * C + c) *
                                                   O +
                                               o];
                    }
                    if (bvec.requires_grad()) {
                        auto& bg = bvec.grad();
                        for (int o = 0; o < O; ++o) bg[o] += db[o];
                    }
                }

                if (x.requires_grad()) {
                    const std::vector<T> w_flip = weight_taps_flipped(w);
                    auto& xg = x.grad();
                    const int q = k - 1 - padding;
                    if (stride == 1 && q >= 0) {
                        // stride-1 input gradient is itself a conv: run the
                        // forward kernel over q-padded dout with flipped
                        // taps, accumulating straight into the grad buffer
                        const int Hzp = dims.Ho + 2 * q, Wzp = dims.Wo + 2 * q;
                        kern::ConvDims tdims{Hzp, Wzp, O, k, C, 1, H, W};
                        const std::vector<T> zero_bias(C, T(0));
#pragma omp parallel for schedule(static) if (B > 1)
                        for (int b = 0; b < B; ++b) {
                            T* dpad = pad_arena<T>(static_cast<std::size_t>(Hzp) * Wzp * O);
                            pad_frame(dout + b * out_frame, dims.Ho, dims.Wo, O, q, dpad);
                            kern::conv_forward(tdims, dpad, w_flip.data(),
                                               zero_bias.data(), xg.data() + b * in_frame, true);
                        }
                    } else {
#pragma omp parallel for schedule(static) if (B > 1)
                        for (int b = 0; b < B; ++b) {
                            kern::conv_grad_input(dims, H, W, padding, dout + b * out_frame,
                                                  w_flip.data(), xg.data() + b * in_frame);
                        }
                    }
                }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* in = x.data();
    T* o = out.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) o[i] = in[i] > T(0) ? in[i] : T(0);
    if (tape.recording_enabled() && wants_grad(x)) {
        out.set_requires_grad(true);
        Tensor<T> xs = x, y = out;
        tape.record(
            [xs, y]() mutable {
                const T* in = xs.data();
                const T* g = y.grad().data();
                T* xg = xs.grad().data();
                const std::int64_t n = xs.numel();
                for (std::int64_t i = 0; i < n; ++i) {
                    if (in[i] > T(0)) xg[i] += g[i];
                }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> upsample_nearest_2x(Tape<T>& tape, const Tensor<T>& x) {
    if (x.rank() != 4) {
        throw std::invalid_argument("upsample_nearest_2x: expected rank 4, got " +
                                    shape_str(x.shape()));
    }
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor<T> out(Shape{B, C, 2 * H, 2 * W});
    const T* in = x.data();
    T* o = out.data();
    for (int b = 0; b < B; ++b)
        for (int y = 0; y < 2 * H; ++y)
            for (int xq = 0; xq < 2 * W; ++xq) {
                const T* src =
                    in + ((static_cast<std::size_t>(b) * H + y / 2) * W + xq / 2) * C;
                T* dst = o + ((static_cast<std::size_t>(b) * 2 * H + y) * 2 * W + xq) * C;
                std::memcpy(dst, src, sizeof(T) * C);
            }
    if (tape.recording_enabled() && wants_grad(x)) {
        out.set_requires_grad(true);
        Tensor<T> xs = x, y = out;
        tape.record(
            [xs, y]() mutable {
                const int B = xs.dim(0), C = xs.dim(1), H = xs.dim(2), W = xs.dim(3);
                const T* g = y.grad().data();
                T* xg = xs.grad().data();
                for (int b = 0; b < B; ++b)
                    for (int yy = 0; yy < 2 * H; ++yy)
                        for (int xx = 0; xx < 2 * W; ++xx) {
                            const T* gv =
                                g + ((static_cast<std::size_t>(b) * 2 * H + yy) * 2 * W + xx) * C;
                            T* dst =
                                xg + ((static_cast<std::size_t>(b) * H + yy / 2) * W + xx / 2) * C;
                            for (int c = 0; c < C; ++c) dst[c] += gv[c];
                        }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 4 || b.rank() != 4) {
        throw std::invalid_argument("concat_channels: expected rank 4 inputs");
    }
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        throw std::invalid_argument("concat_channels: batch/spatial extents differ: " +
                                    shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const int B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
    Tensor<T> out(Shape{B, Ca + Cb, H, W});
    const std::int64_t pixels = static_cast<std::int64_t>(B) * H * W;
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (std::int64_t i = 0; i < pixels; ++i) {
        std::memcpy(po + i * (Ca + Cb), pa + i * Ca, sizeof(T) * Ca);
        std::memcpy(po + i * (Ca + Cb) + Ca, pb + i * Cb, sizeof(T) * Cb);
    }
    if (tape.recording_enabled() && (wants_grad(a) || wants_grad(b))) {
        out.set_requires_grad(true);
        Tensor<T> as = a, bs = b, y = out;
        tape.record(
            [as, bs, y]() mutable {
                const int Ca = as.dim(1), Cb = bs.dim(1);
                const std::int64_t pixels =
                    static_cast<std::int64_t>(as.dim(0)) * as.dim(2) * as.dim(3);
                const T* g = y.grad().data();
                if (as.requires_grad()) {
                    T* ga = as.grad().data();
                    for (std::int64_t i = 0; i < pixels; ++i)
                        for (int c = 0; c < Ca; ++c) ga[i * Ca + c] += g[i * (Ca + Cb) + c];
                }
                if (bs.requires_grad()) {
                    T* gb = bs.grad().data();
                    for (std::int64_t i = 0; i < pixels; ++i)
                        for (int c = 0; c < Cb; ++c) gb[i * Cb + c] += g[i * (Ca + Cb) + Ca + c];
                }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> mean_squared_diff(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mean_squared_diff");
    const std::int64_t n = a.numel();
    const T* pa = a.data();
    const T* pb = b.data();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        acc += d * d;
    }
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
    if (tape.recording_enabled() && (wants_grad(a) || wants_grad(b))) {
        out.set_requires_grad(true);
        Tensor<T> as = a, bs = b, y = out;
        tape.record(
            [as, bs, y]() mutable {
                const std::int64_t n = as.numel();
                const T g = y.grad()[0];
                const T f = g * T(2) / static_cast<T>(n);
                const T* pa = as.data();
                const T* pb = bs.data();
                if (as.requires_grad()) {
                    T* ga = as.grad().data();
                    for (std::int64_t i = 0; i < n; ++i) ga[i] += f * (pa[i] - pb[i]);
                }
                if (bs.requires_grad()) {
                    T* gb = bs.grad().data();
                    for (std::int64_t i = 0; i < n; ++i) gb[i] -= f * (pa[i] - pb[i]);
                }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> out(a.shape());
    const std::int64_t n = a.numel();
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    if (tape.recording_enabled() && (wants_grad(a) || wants_grad(b))) {
        out.set_requires_grad(true);
        Tensor<T> as = a, bs = b, y = out;
        tape.record(
            [as, bs, y]() mutable {
                const std::int64_t n = as.numel();
                const T* g = y.grad().data();
                if (as.requires_grad()) {
                    T* ga = as.grad().data();
                    for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
                }
                if (bs.requires_grad()) {
                    T* gb = bs.grad().data();
                    for (std::int64_t i = 0; i < n; ++i) gb[i] += g[i];
                }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T factor) {
    Tensor<T> out(a.shape());
    const std::int64_t n = a.numel();
    const T* pa = a.data();
    T* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * factor;
    if (tape.recording_enabled() && wants_grad(a)) {
        out.set_requires_grad(true);
        Tensor<T> as = a, y = out;
        tape.record(
            [as, y, factor]() mutable {
                const std::int64_t n = as.numel();
                const T* g = y.grad().data();
                T* ga = as.grad().data();
                for (std::int64_t i = 0; i < n; ++i) ga[i] += factor * g[i];
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> sum_all(Tape<T>& tape, const Tensor<T>& x) {
    double acc = 0.0;
    const T* p = x.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) acc += static_cast<double>(p[i]);
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc));
    if (tape.recording_enabled() && wants_grad(x)) {
        out.set_requires_grad(true);
        Tensor<T> xs = x, y = out;
        tape.record(
            [xs, y]() mutable {
                const T g = y.grad()[0];
                T* xg = xs.grad().data();
                const std::int64_t n = xs.numel();
                for (std::int64_t i = 0; i < n; ++i) xg[i] += g;
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> slice_batch(Tape<T>& tape, const Tensor<T>& x, int start, int count) {
    if (x.rank() != 4) {
        throw std::invalid_argument("slice_batch: expected rank 4, got " + shape_str(x.shape()));
    }
    if (start < 0 || count < 1 || start + count > x.dim(0)) {
        throw std::invalid_argument("slice_batch: range [" + std::to_string(start) + ", " +
                                    std::to_string(start + count) + ") out of batch extent " +
                                    std::to_string(x.dim(0)));
    }
    const std::size_t frame = static_cast<std::size_t>(x.dim(1)) * x.dim(2) * x.dim(3);
    Tensor<T> out(Shape{count, x.dim(1), x.dim(2), x.dim(3)});
    std::memcpy(out.data(), x.data() + start * frame, sizeof(T) * frame * count);
    if (tape.recording_enabled() && wants_grad(x)) {
        out.set_requires_grad(true);
        Tensor<T> xs = x, y = out;
        tape.record(
            [xs, y, start, frame, count]() mutable {
                const T* g = y.grad().data();
                T* xg = xs.grad().data() + start * frame;
                const std::size_t n = frame * count;
                for (std::size_t i = 0; i < n; ++i) xg[i] += g[i];
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> sum_scalars(Tape<T>& tape, const std::vector<Tensor<T>>& terms) {
    if (terms.empty()) throw std::invalid_argument("sum_scalars: empty term list");
    std::vector<T> vals(terms.size());
    bool any_grad = false;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        vals[i] = terms[i].scalar_value();
        any_grad = any_grad || wants_grad(terms[i]);
    }
    std::sort(vals.begin(), vals.end());
    double acc = 0.0;
    for (T v : vals) acc += static_cast<double>(v);
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc));
    if (tape.recording_enabled() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor<T>> ts = terms;
        Tensor<T> y = out;
        tape.record(
            [ts, y]() mutable {
                const T g = y.grad()[0];
                for (auto& t : ts) {
                    if (t.requires_grad()) t.grad()[0] += g;
                }
            },
            out);
    }
    return out;
}

template <typename T>
Tensor<T> mean_stack(Tape<T>& tape, const std::vector<Tensor<T>>& stack) {
    if (stack.empty()) throw std::invalid_argument("mean_stack: empty stack");
    for (const auto& t : stack) require_same_shape(stack[0], t, "mean_stack");
    const std::size_t m = stack.size();
    const std::int64_t n = stack[0].numel();
    Tensor<T> out(stack[0].shape());
    std::vector<T> buf(m);
    T* po = out.data();
    bool any_grad = false;
    for (const auto& t : stack) any_grad = any_grad || wants_grad(t);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) buf[j] = stack[j].data()[i];
        std::sort(buf.begin(), buf.end());
        double acc = 0.0;
        for (T v : buf) acc += static_cast<double>(v);
        po[i] = static_cast<T>(acc / static_cast<double>(m));
    }
    if (tape.recording_enabled() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor<T>> ts = stack;
        Tensor<T> y = out;
        tape.record(
            [ts, y]() mutable {
                const std::int64_t n = ts[0].numel();
                const T f = T(1) / static_cast<T>(ts.size());
                const T* g = y.grad().data();
                for (auto& t : ts) {
                    if (!t.requires_grad()) continue;
                    T* tg = t.grad().data();
                    for (std::int64_t i = 0; i < n; ++i) tg[i] += f * g[i];
                }
            },
            out);
    }
    return out;
}

template <typename T>
void backward(Tape<T>& tape, const Tensor<T>& loss) {
    tape.run_backward(loss);
}

#define OPD_INSTANTIATE_OPS(T)                                                                \
    template Tensor<T> conv2d<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                 const Tensor<T>&, int, int);                                 \
    template Tensor<T> relu<T>(Tape<T>&, const Tensor<T>&);                                  \
    template Tensor<T> upsample_nearest_2x<T>(Tape<T>&, const Tensor<T>&);                   \
    template Tensor<T> concat_channels<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);     \
    template Tensor<T> mean_squared_diff<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);   \
    template Tensor<T> add<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> scale<T>(Tape<T>&, const Tensor<T>&, T);                              \
    template Tensor<T> sum_all<T>(Tape<T>&, const Tensor<T>&);                               \
    template Tensor<T> slice_batch<T>(Tape<T>&, const Tensor<T>&, int, int);                 \
    template Tensor<T> sum_scalars<T>(Tape<T>&, const std::vector<Tensor<T>>&);              \
    template Tensor<T> mean_stack<T>(Tape<T>&, const std::vector<Tensor<T>>&);               \
    template void backward<T>(Tape<T>&, const Tensor<T>&);

OPD_INSTANTIATE_OPS(float)
OPD_INSTANTIATE_OPS(double)
#undef OPD_INSTANTIATE_OPS

}  // namespace opd
