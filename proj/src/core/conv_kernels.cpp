#include "core/conv_kernels.hpp"

#include <cstddef>
#include <vector>

// Direct NHWC convolution. The float fast paths below are shaped for the
// denoiser's layer set (k = 3, channel counts 1/16/32) and keep the
// accumulator block inside the vector register file; gcc turns the
// innermost channel loops into packed FMAs. Accumulation order is fixed,
// so results are bit-reproducible for a given binary regardless of
// threading at higher levels.

namespace opd::kern {

namespace {

// output range [o0, o1) for which tap offset kq stays inside the
// unpadded input extent
inline void tap_range(int kq, int p, int s, int in_extent, int out_extent, int& o0, int& o1) {
    const int lo = p - kq;
    o0 = lo > 0 ? (lo + s - 1) / s : 0;
    const int hi = in_extent - 1 + p - kq;
    o1 = hi < 0 ? 0 : (hi / s + 1 < out_extent ? hi / s + 1 : out_extent);
    if (o1 < o0) o1 = o0;
}

template <typename T>
void forward_generic(const ConvDims& d, const T* inpad, const T* w_tap, const T* bias, T* out,
                     bool accumulate) {
    const int C = d.C, O = d.O, k = d.k, s = d.stride, Wp = d.Wp;
    std::vector<T> acc(O);
    for (int y = 0; y < d.Ho; ++y) {
        for (int x = 0; x < d.Wo; ++x) {
            T* op = acc.data();
            for (int o = 0; o < O; ++o) op[o] = bias[o];
            for (int ky = 0; ky < k; ++ky) {
                const T* iprow = inpad + (static_cast<std::size_t>(y * s + ky) * Wp + x * s) * C;
                const T* wrow = w_tap + static_cast<std::size_t>(ky) * k * C * O;
                for (int kx = 0; kx < k; ++kx) {
                    for (int c = 0; c < C; ++c) {
                        const T v = iprow[static_cast<std::size_t>(kx) * C + c];
                        const T* wv = wrow + (static_cast<std::size_t>(kx) * C + c) * O;
                        for (int o = 0; o < O; ++o) op[o] += v * wv[o];
                    }
                }
            }
            T* dst = out + (static_cast<std::size_t>(y) * d.Wo + x) * O;
            if (accumulate) {
                for (int o = 0; o < O; ++o) dst[o] += op[o];
            } else {
                for (int o = 0; o < O; ++o) dst[o] = op[o];
            }
        }
    }
}

template <typename T>
void grad_weights_generic(const ConvDims& d, const T* in, int H, int W, int padding,
                          const T* dout, T* dw_tap, T* db) {
    const int C = d.C, O = d.O, k = d.k, s = d.stride;
    for (int ky = 0; ky < k; ++ky) {
        int y0, y1;
        tap_range(ky, padding, s, H, d.Ho, y0, y1);
        for (int kx = 0; kx < k; ++kx) {
            int x0, x1;
            tap_range(kx, padding, s, W, d.Wo, x0, x1);
            T* dw = dw_tap + (static_cast<std::size_t>(ky) * k + kx) * C * O;
            for (int y = y0; y < y1; ++y) {
                const T* iprow =
                    in + (static_cast<std::size_t>(y * s + ky - padding) * W + kx - padding) * C;
                const T* drow = dout + static_cast<std::size_t>(y) * d.Wo * O;
                for (int x = x0; x < x1; ++x) {
                    const T* iv = iprow + static_cast<std::size_t>(x) * s * C;
                    const T* dv = drow + static_cast<std::size_t>(x) * O;
                    for (int c = 0; c < C; ++c) {
                        const T v = iv[c];
                        T* dwc = dw + static_cast<std::size_t>(c) * O;
                        for (int o = 0; o < O; ++o) dwc[o] += v * dv[o];
                    }
                }
            }
        }
    }
    for (int y = 0; y < d.Ho; ++y) {
        const T* drow = dout + static_cast<std::size_t>(y) * d.Wo * O;
        for (int x = 0; x < d.Wo; ++x) {
            const T* dv = drow + static_cast<std::size_t>(x) * O;
            for (int o = 0; o < O; ++o) db[o] += dv[o];
        }
    }
}

template <typename T>
void grad_input_generic(const ConvDims& d, int H, int W, int padding, const T* dout,
                        const T* w_flip, T* din) {
    const int C = d.C, O = d.O, k = d.k, s = d.stride;
    for (int iy = 0; iy < H; ++iy) {
        for (int ix = 0; ix < W; ++ix) {
            T* dv = din + (static_cast<std::size_t>(iy) * W + ix) * C;
            for (int kyf = 0; kyf < k; ++kyf) {
                const int ty = iy + padding - k + 1 + kyf;
                if (ty < 0 || ty % s != 0 || ty / s >= d.Ho) continue;
                for (int kxf = 0; kxf < k; ++kxf) {
                    const int tx = ix + padding - k + 1 + kxf;
                    if (tx < 0 || tx % s != 0 || tx / s >= d.Wo) continue;
                    const T* gv =
                        dout + (static_cast<std::size_t>(ty / s) * d.Wo + tx / s) * O;
                    const T* wf =
                        w_flip + (static_cast<std::size_t>(kyf) * k + kxf) * O * C;
                    for (int o = 0; o < O; ++o) {
                        const T g = gv[o];
                        const T* wrow = wf + static_cast<std::size_t>(o) * C;
                        for (int c = 0; c < C; ++c) dv[c] += g * wrow[c];
                    }
                }
            }
        }
    }
}

// k = 3 fast path. XB output pixels share one weight fetch; acc stays in
// registers (XB*O floats).
template <int C, int O, int XB, bool Acc>
void forward3_f32(const ConvDims& d, const float* __restrict inpad, const float* __restrict w_tap,
                  const float* __restrict bias, float* __restrict out) {
    const int s = d.stride, Wp = d.Wp;
    for (int y = 0; y < d.Ho; ++y) {
        int x = 0;
        for (; x + XB <= d.Wo; x += XB) {
            float acc[XB][O];
            for (int xi = 0; xi < XB; ++xi)
                for (int o = 0; o < O; ++o) acc[xi][o] = bias[o];
            for (int ky = 0; ky < 3; ++ky) {
                const float* iprow =
                    inpad + (static_cast<std::size_t>(y * s + ky) * Wp + x * s) * C;
                const float* wrow = w_tap + static_cast<std::size_t>(ky) * 3 * C * O;
                for (int kx = 0; kx < 3; ++kx) {
                    for (int c = 0; c < C; ++c) {
                        const float* wv = wrow + (static_cast<std::size_t>(kx) * C + c) * O;
                        for (int xi = 0; xi < XB; ++xi) {
                            const float v = iprow[(static_cast<std::size_t>(xi) * s + kx) * C + c];
                            #pragma omp simd
                            for (int o = 0; o < O; ++o) acc[xi][o] += v * wv[o];
                        }
                    }
                }
            }
            float* op = out + (static_cast<std::size_t>(y) * d.Wo + x) * O;
            for (int xi = 0; xi < XB; ++xi)
                for (int o = 0; o < O; ++o) {
                    if constexpr (Acc) op[static_cast<std::size_t>(xi) * O + o] += acc[xi][o];
                    else op[static_cast<std::size_t>(xi) * O + o] = acc[xi][o];
                }
        }
        for (; x < d.Wo; ++x) {
            float acc[O];
            for (int o = 0; o < O; ++o) acc[o] = bias[o];
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const float* iv =
                        inpad + (static_cast<std::size_t>(y * s + ky) * Wp + x * s + kx) * C;
                    const float* wv = w_tap + ((static_cast<std::size_t>(ky) * 3 + kx) * C) * O;
                    for (int c = 0; c < C; ++c) {
                        const float v = iv[c];
                        #pragma omp simd
                        for (int o = 0; o < O; ++o)
                            acc[o] += v * wv[static_cast<std::size_t>(c) * O + o];
                    }
                }
            float* op = out + (static_cast<std::size_t>(y) * d.Wo + x) * O;
            for (int o = 0; o < O; ++o) {
                if constexpr (Acc) op[o] += acc[o];
                else op[o] = acc[o];
            }
        }
    }
}

// single-output-channel head: vectorize over input channels instead and
// reduce at the end of each pixel
template <int C, bool Acc>
void forward3_head_f32(const ConvDims& d, const float* __restrict inpad,
                       const float* __restrict w_tap, const float* __restrict bias,
                       float* __restrict out) {
    const int s = d.stride, Wp = d.Wp;
    for (int y = 0; y < d.Ho; ++y) {
        for (int x = 0; x < d.Wo; ++x) {
            float acc[C] = {};
            for (int ky = 0; ky < 3; ++ky) {
                const float* iprow =
                    inpad + (static_cast<std::size_t>(y * s + ky) * Wp + x * s) * C;
                const float* wrow = w_tap + static_cast<std::size_t>(ky) * 3 * C;
                for (int kx = 0; kx < 3; ++kx) {
                    const float* iv = iprow + static_cast<std::size_t>(kx) * C;
                    const float* wv = wrow + static_cast<std::size_t>(kx) * C;
                    #pragma omp simd
                    for (int c = 0; c < C; ++c) acc[c] += iv[c] * wv[c];
                }
            }
            float total = bias[0];
            for (int c = 0; c < C; ++c) total += acc[c];
            if constexpr (Acc) out[static_cast<std::size_t>(y) * d.Wo + x] += total;
            else out[static_cast<std::size_t>(y) * d.Wo + x] = total;
        }
    }
}

// k = 3 grad-weights fast path; c is blocked so acc[CB][O] fits the
// register file, at the price of CB-many sweeps over the image.
template <int C, int O, int CB>
void grad_weights3_f32(const ConvDims& d, const float* __restrict in, int H, int W, int padding,
                       const float* __restrict dout, float* __restrict dw_tap,
                       float* __restrict db) {
    const int s = d.stride;
    static_assert(C % CB == 0);
    for (int ky = 0; ky < 3; ++ky) {
        int y0, y1;
        tap_range(ky, padding, s, H, d.Ho, y0, y1);
        for (int kx = 0; kx < 3; ++kx) {
            int x0, x1;
            tap_range(kx, padding, s, W, d.Wo, x0, x1);
            for (int c0 = 0; c0 < C; c0 += CB) {
                float acc[CB][O] = {};
                for (int y = y0; y < y1; ++y) {
                    const float* iprow =
                        in +
                        (static_cast<std::size_t>(y * s + ky - padding) * W + kx - padding) * C +
                        c0;
                    const float* drow = dout + static_cast<std::size_t>(y) * d.Wo * O;
                    for (int x = x0; x < x1; ++x) {
                        const float* iv = iprow + static_cast<std::size_t>(x) * s * C;
                        const float* dv = drow + static_cast<std::size_t>(x) * O;
                        for (int c = 0; c < CB; ++c) {
                            const float v = iv[c];
                            #pragma omp simd
                            for (int o = 0; o < O; ++o) acc[c][o] += v * dv[o];
                        }
                    }
                }
                float* dw = dw_tap + ((static_cast<std::size_t>(ky) * 3 + kx) * C + c0) * O;
                for (int c = 0; c < CB; ++c)
                    for (int o = 0; o < O; ++o) dw[static_cast<std::size_t>(c) * O + o] += acc[c][o];
            }
        }
    }
    float bacc[O] = {};
    for (int y = 0; y < d.Ho; ++y) {
        const float* drow = dout + static_cast<std::size_t>(y) * d.Wo * O;
        for (int x = 0; x < d.Wo; ++x) {
            const float* dv = drow + static_cast<std::size_t>(x) * O;
            #pragma omp simd
            for (int o = 0; o < O; ++o) bacc[o] += dv[o];
        }
    }
    for (int o = 0; o < O; ++o) db[o] += bacc[o];
}

// k = 3 grad-input gather: every input pixel pulls from the (at most
// nine) output positions its forward taps fed. The stride is a template
// parameter so the tap-validity tests reduce to cheap comparisons.
template <int O, int C, int S>
void grad_input3_f32(const ConvDims& d, int H, int W, int padding, const float* __restrict dout,
                     const float* __restrict w_flip, float* __restrict din) {
    for (int iy = 0; iy < H; ++iy) {
        for (int ix = 0; ix < W; ++ix) {
            float acc[C] = {};
            for (int kyf = 0; kyf < 3; ++kyf) {
                const int ty = iy + padding - 2 + kyf;
                if (ty < 0) continue;
                if constexpr (S > 1) {
                    if (ty % S != 0) continue;
                }
                if (ty / S >= d.Ho) continue;
                const float* grow = dout + static_cast<std::size_t>(ty / S) * d.Wo * O;
                const float* wrow = w_flip + static_cast<std::size_t>(kyf) * 3 * O * C;
                for (int kxf = 0; kxf < 3; ++kxf) {
                    const int tx = ix + padding - 2 + kxf;
                    if (tx < 0) continue;
                    if constexpr (S > 1) {
                        if (tx % S != 0) continue;
                    }
                    if (tx / S >= d.Wo) continue;
                    const float* gv = grow + static_cast<std::size_t>(tx / S) * O;
                    const float* wf = wrow + static_cast<std::size_t>(kxf) * O * C;
                    for (int o = 0; o < O; ++o) {
                        const float g = gv[o];
                        const float* wr = wf + static_cast<std::size_t>(o) * C;
                        #pragma omp simd
                        for (int c = 0; c < C; ++c) acc[c] += g * wr[c];
                    }
                }
            }
            float* dv = din + (static_cast<std::size_t>(iy) * W + ix) * C;
            for (int c = 0; c < C; ++c) dv[c] += acc[c];
        }
    }
}

template <bool Acc>
bool fast_forward_f32(const ConvDims& d, const float* inpad, const float* w, const float* b,
                      float* out) {
    if (d.k != 3) return false;
    switch (d.C * 1000 + d.O) {
        case 1016: forward3_f32<1, 16, 8, Acc>(d, inpad, w, b, out); return true;
        case 16016: forward3_f32<16, 16, 8, Acc>(d, inpad, w, b, out); return true;
        case 16032: forward3_f32<16, 32, 8, Acc>(d, inpad, w, b, out); return true;
        case 32032: forward3_f32<32, 32, 8, Acc>(d, inpad, w, b, out); return true;
        case 32016: forward3_f32<32, 16, 8, Acc>(d, inpad, w, b, out); return true;
        case 16001: forward3_head_f32<16, Acc>(d, inpad, w, b, out); return true;
        default: return false;
    }
}

bool fast_grad_weights_f32(const ConvDims& d, const float* in, int H, int W, int padding,
                           const float* dout, float* dw, float* db) {
    if (d.k != 3) return false;
    switch (d.C * 1000 + d.O) {
        case 1016: grad_weights3_f32<1, 16, 1>(d, in, H, W, padding, dout, dw, db); return true;
        case 16016: grad_weights3_f32<16, 16, 16>(d, in, H, W, padding, dout, dw, db); return true;
        case 16032: grad_weights3_f32<16, 32, 8>(d, in, H, W, padding, dout, dw, db); return true;
        case 32032: grad_weights3_f32<32, 32, 8>(d, in, H, W, padding, dout, dw, db); return true;
        case 32016: grad_weights3_f32<32, 16, 16>(d, in, H, W, padding, dout, dw, db); return true;
        case 16001: grad_weights3_f32<16, 1, 16>(d, in, H, W, padding, dout, dw, db); return true;
        default: return false;
    }
}

bool fast_grad_input_f32(const ConvDims& d, int H, int W, int padding, const float* dout,
                         const float* w_flip, float* din) {
    // stride-1 input gradients flow through the accumulate forward
    // kernel on padded dout instead; only strided cases land here
    if (d.k != 3 || d.stride != 2) return false;
    switch (d.O * 1000 + d.C) {  // keyed by (dout channels, input channels)
        case 16016: grad_input3_f32<16, 16, 2>(d, H, W, padding, dout, w_flip, din); return true;
        case 32016: grad_input3_f32<32, 16, 2>(d, H, W, padding, dout, w_flip, din); return true;
        case 16032: grad_input3_f32<16, 32, 2>(d, H, W, padding, dout, w_flip, din); return true;
        case 32032: grad_input3_f32<32, 32, 2>(d, H, W, padding, dout, w_flip, din); return true;
        default: return false;
    }
}

}  // namespace

template <typename T>
void conv_forward(const ConvDims& d, const T* inpad, const T* w_tap, const T* bias, T* out,
                  bool accumulate) {
    forward_generic(d, inpad, w_tap, bias, out, accumulate);
}

template <>
void conv_forward<float>(const ConvDims& d, const float* inpad, const float* w_tap,
                         const float* bias, float* out, bool accumulate) {
    const bool done = accumulate ? fast_forward_f32<true>(d, inpad, w_tap, bias, out)
                                 : fast_forward_f32<false>(d, inpad, w_tap, bias, out);
    if (!done) forward_generic(d, inpad, w_tap, bias, out, accumulate);
}

template <typename T>
void conv_grad_weights(const ConvDims& d, const T* in, int H, int W, int padding, const T* dout,
                       T* dw_tap, T* db) {
    grad_weights_generic(d, in, H, W, padding, dout, dw_tap, db);
}

template <>
void conv_grad_weights<float>(const ConvDims& d, const float* in, int H, int W, int padding,
                              const float* dout, float* dw_tap, float* db) {
    if (!fast_grad_weights_f32(d, in, H, W, padding, dout, dw_tap, db)) {
        grad_weights_generic(d, in, H, W, padding, dout, dw_tap, db);
    }
}

template <typename T>
void conv_grad_input(const ConvDims& d, int H, int W, int padding, const T* dout,
                     const T* w_flip, T* din) {
    grad_input_generic(d, H, W, padding, dout, w_flip, din);
}

template <>
void conv_grad_input<float>(const ConvDims& d, int H, int W, int padding, const float* dout,
                            const float* w_flip, float* din) {
    if (!fast_grad_input_f32(d, H, W, padding, dout, w_flip, din)) {
        grad_input_generic(d, H, W, padding, dout, w_flip, din);
    }
}

template void conv_forward<double>(const ConvDims&, const double*, const double*, const double*,
                                   double*, bool);
template void conv_grad_weights<double>(const ConvDims&, const double*, int, int, int,
                                        const double*, double*, double*);
template void conv_grad_input<double>(const ConvDims&, int, int, int, const double*,
                                      const double*, double*);

}  // namespace opd::kern
