#pragma once

namespace opd::kern {

// Geometry of one conv application on a single image in NHWC order.
// Weights are tap-major: w_tap[((ky*k + kx)*C + c)*O + o].
struct ConvDims {
    int Hp = 0, Wp = 0, C = 0;  // padded input extents (forward path)
    int k = 0, O = 0, stride = 1;
    int Ho = 0, Wo = 0;
};

// out = conv(inpad, w_tap) + bias over the padded input (Hp x Wp x C);
// accumulate adds into out instead of overwriting.
template <typename T>
void conv_forward(const ConvDims& d, const T* inpad, const T* w_tap, const T* bias, T* out,
                  bool accumulate = false);

// dw_tap += correlation(input, dout); db += column sums of dout. Reads
// the raw unpadded input (H x W x C); taps outside the image contribute
// nothing, so no padded copy is needed.
template <typename T>
void conv_grad_weights(const ConvDims& d, const T* in, int H, int W, int padding, const T* dout,
                       T* dw_tap, T* db);

// din (H x W x C, unpadded) += transposed conv of dout with the
// spatially flipped, channel-transposed taps w_flip[((ky*k+kx)*O + o)*C + c].
template <typename T>
void conv_grad_input(const ConvDims& d, int H, int W, int padding, const T* dout,
                     const T* w_flip, T* din);

// float goes through shape-specialized kernels
template <>
void conv_forward<float>(const ConvDims&, const float*, const float*, const float*, float*,
                         bool);
template <>
void conv_grad_weights<float>(const ConvDims&, const float*, int, int, int, const float*,
                              float*, float*);
template <>
void conv_grad_input<float>(const ConvDims&, int, int, int, const float*, const float*, float*);

extern template void conv_forward<double>(const ConvDims&, const double*, const double*,
                                          const double*, double*, bool);
extern template void conv_grad_weights<double>(const ConvDims&, const double*, int, int, int,
                                               const double*, double*, double*);
extern template void conv_grad_input<double>(const ConvDims&, int, int, int, const double*,
                                             const double*, double*);

}  // namespace opd::kern
