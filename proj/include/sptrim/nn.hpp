#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sptrim/rng.hpp"
#include "sptrim/tensor.hpp"

namespace sptrim {

// Valid (no padding) convolution of input [t, f, C_in] with kernel
// [m, r, C_in, n] and strides (stride_t, stride_f). Output is
// [(t-m+1)/stride_t, (f-r+1)/stride_f, n] with floor division.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                      std::size_t stride_t, std::size_t stride_f);

struct ConvGrads {
  Tensor grad_input;
  Tensor grad_kernel;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                          std::size_t stride_t, std::size_t stride_f,
                          const Tensor& grad_out);

// Non-overlapping max pooling over p x q windows of input [T, F, C];
// trailing rows/columns that do not fill a window are dropped. argmax holds
// the flat input index of each window maximum (first hit in row-major order
// wins ties).
struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;
};

PoolResult maxpool_forward(const Tensor& input, std::size_t p, std::size_t q);

// Routes each grad_out element to its recorded argmax position.
Tensor maxpool_backward(const std::vector<std::size_t>& input_shape,
                        const std::vector<std::size_t>& argmax,
                        const Tensor& grad_out);

// output = input (row vector, length d_in) * weight [d_in, d_out] + bias.
Tensor dense_forward(const Tensor& input, const Tensor& weight,
                     const Tensor& bias);

struct DenseGrads {
  Tensor grad_input;
  Tensor grad_weight;
  Tensor grad_bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weight,
                          const Tensor& grad_out);

// Softmax with max subtraction.
Tensor softmax(const Tensor& logits);

struct XentResult {
  double loss = 0.0;
  Tensor grad_logits;
};

// loss = -log softmax(logits)[label]; grad = softmax(logits) - onehot(label).
XentResult softmax_cross_entropy(const Tensor& logits, std::size_t label);

// Central-difference check of analytic gradients against the loss closure.
// Samples up to samples_per_tensor coordinates from each parameter tensor and
// returns the max of |analytic - numeric| / max(1, |analytic|).
// epsilon must lie in (0, 1e-3].
double finite_difference_check(const std::vector<Tensor*>& params,
                               const std::vector<const Tensor*>& analytic,
                               const std::function<double()>& loss,
                               double epsilon, std::size_t samples_per_tensor,
                               Rng& rng);

}  // namespace sptrim
