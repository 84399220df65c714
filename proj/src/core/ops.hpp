#pragma once

#include "core/tensor.hpp"

#include <vector>

namespace opd {

// Differentiable operations. Each op validates shapes, computes its
// forward result, and (when the tape is recording and an input requires
// grad) registers the matching backward rule. Forward results on finite
// inputs are always finite.

// Cross-correlation with bias. input (B,C,H,W), weight (O,C,k,k) with k
// odd, bias (O). Output (B,O,H',W') with H' = (H + 2*padding - k)/stride + 1.
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding);

// Elementwise max(0, v). Backward passes gradient only where v > 0
// (zero exactly at the kink).
template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x);

// Pixel replication: (B,C,H,W) -> (B,C,2H,2W). Backward sums each 2x2
// replica block.
template <typename T>
Tensor<T> upsample_nearest_2x(Tape<T>& tape, const Tensor<T>& x);

// Stacks along the channel axis; a's channels come first.
template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

// (1/n) * sum((a_i - b_i)^2) as a scalar tensor; differentiable in both
// arguments.
template <typename T>
Tensor<T> mean_squared_diff(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> sum_all(Tape<T>& tape, const Tensor<T>& x);

// Copies frames [start, start+count) of the batch axis.
template <typename T>
Tensor<T> slice_batch(Tape<T>& tape, const Tensor<T>& x, int start, int count);

// Sum of scalar tensors. Terms are accumulated in ascending value order,
// which makes the result exactly invariant under permutations of the
// term list.
template <typename T>
Tensor<T> sum_scalars(Tape<T>& tape, const std::vector<Tensor<T>>& terms);

// Pixelwise mean over a list of same-shaped tensors, with the same
// value-ordered accumulation rule per pixel.
template <typename T>
Tensor<T> mean_stack(Tape<T>& tape, const std::vector<Tensor<T>>& stack);

// Runs the tape backward from a scalar loss. Leaf gradients accumulate
// across calls; use zero_grad on the leaves to reset.
template <typename T>
void backward(Tape<T>& tape, const Tensor<T>& loss);

// Caps the worker count used by batched kernels (0 = library default).
void set_max_threads(int n);
int max_threads();

#define OPD_EXTERN_OPS(T)                                                                     \
    extern template Tensor<T> conv2d<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                        const Tensor<T>&, int, int);                         \
    extern template Tensor<T> relu<T>(Tape<T>&, const Tensor<T>&);                           \
    extern template Tensor<T> upsample_nearest_2x<T>(Tape<T>&, const Tensor<T>&);            \
    extern template Tensor<T> concat_channels<T>(Tape<T>&, const Tensor<T>&,                 \
                                                 const Tensor<T>&);                          \
    extern template Tensor<T> mean_squared_diff<T>(Tape<T>&, const Tensor<T>&,               \
                                                   const Tensor<T>&);                        \
    extern template Tensor<T> add<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);          \
    extern template Tensor<T> scale<T>(Tape<T>&, const Tensor<T>&, T);                       \
    extern template Tensor<T> sum_all<T>(Tape<T>&, const Tensor<T>&);                        \
    extern template Tensor<T> slice_batch<T>(Tape<T>&, const Tensor<T>&, int, int);          \
    extern template Tensor<T> sum_scalars<T>(Tape<T>&, const std::vector<Tensor<T>>&);       \
    extern template Tensor<T> mean_stack<T>(Tape<T>&, const std::vector<Tensor<T>>&);        \
    extern template void backward<T>(Tape<T>&, const Tensor<T>&);

OPD_EXTERN_OPS(float)
OPD_EXTERN_OPS(double)
#undef OPD_EXTERN_OPS

}  // namespace opd
