#include "sptrim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sptrim {

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& kernel,
                       std::size_t stride_t, std::size_t stride_f) {
  if (input.shape.size() != 3)
    throw DimError("conv2d: input must be [t, f, C_in]");
  if (kernel.shape.size() != 4)
    throw DimError("conv2d: kernel must be [m, r, C_in, n]");
  if (kernel.shape[2] != input.shape[2])
    throw DimError("conv2d: input channels " + std::to_string(input.shape[2]) +
                   " do not match kernel channels " +
                   std::to_string(kernel.shape[2]));
  if (kernel.shape[0] > input.shape[0] || kernel.shape[1] > input.shape[1])
    throw DimError("conv2d: kernel larger than input");
  if (stride_t == 0 || stride_f == 0)
    throw DimError("conv2d: strides must be positive");
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                      std::size_t stride_t, std::size_t stride_f) {
  check_conv_shapes(input, kernel, stride_t, stride_f);
  const std::size_t t = input.shape[0], f = input.shape[1], C = input.shape[2];
  const std::size_t m = kernel.shape[0], r = kernel.shape[1],
                    n = kernel.shape[3];
  const std::size_t out_t = (t - m + 1) / stride_t;
  const std::size_t out_f = (f - r + 1) / stride_f;

  Tensor out({out_t, out_f, n});
  const double* in = input.data.data();
  const double* ker = kernel.data.data();
  double* o = out.data.data();
  for (std::size_t oi = 0; oi < out_t; ++oi) {
    for (std::size_t oj = 0; oj < out_f; ++oj) {
      double* orow = o + (oi * out_f + oj) * n;
      for (std::size_t a = 0; a < m; ++a) {
        const std::size_t ti = oi * stride_t + a;
        for (std::size_t b = 0; b < r; ++b) {
          const std::size_t tj = oj * stride_f + b;
          const double* irow = in + (ti * f + tj) * C;
          const double* krow = ker + (a * r + b) * C * n;
          for (std::size_t c = 0; c < C; ++c) {
            const double x = irow[c];
            const double* kc = krow + c * n;
            for (std::size_t oc = 0; oc < n; ++oc) orow[oc] += x * kc[oc];
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                          std::size_t stride_t, std::size_t stride_f,
                          const Tensor& grad_out) {
  check_conv_shapes(input, kernel, stride_t, stride_f);
  const std::size_t t = input.shape[0], f = input.shape[1], C = input.shape[2];
  const std::size_t m = kernel.shape[0], r = kernel.shape[1],
                    n = kernel.shape[3];
  const std::size_t out_t = (t - m + 1) / stride_t;
  const std::size_t out_f = (f - r + 1) / stride_f;
  if (grad_out.shape != std::vector<std::size_t>{out_t, out_f, n})
    throw DimError("conv2d_backward: grad_out shape mismatch");

  ConvGrads grads{Tensor(input.shape), Tensor(kernel.shape)};
  const double* in = input.data.data();
  const double* ker = kernel.data.data();
  const double* go = grad_out.data.data();
  double* gi = grads.grad_input.data.data();
  double* gk = grads.grad_kernel.data.data();
  for (std::size_t oi = 0; oi < out_t; ++oi) {
    for (std::size_t oj = 0; oj < out_f; ++oj) {
      const double* gorow = go + (oi * out_f + oj) * n;
      for (std::size_t a = 0; a < m; ++a) {
        const std::size_t ti = oi * stride_t + a;
        for (std::size_t b = 0; b < r; ++b) {
          const std::size_t tj = oj * stride_f + b;
          const double* irow = in + (ti * f + tj) * C;
          double* girow = gi + (ti * f + tj) * C;
          const std::size_t koff = (a * r + b) * C * n;
          for (std::size_t c = 0; c < C; ++c) {
            const double x = irow[c];
            const double* kc = ker + koff + c * n;
            double* gkc = gk + koff + c * n;
            double acc = 0.0;
            for (std::size_t oc = 0; oc < n; ++oc) {
              acc += kc[oc] * gorow[oc];
              gkc[oc] += x * gorow[oc];
            }
            girow[c] += acc;
          }
        }
      }
    }
  }
  return grads;
}

PoolResult maxpool_forward(const Tensor& input, std::size_t p, std::size_t q) {
  if (input.shape.size() != 3) throw DimError("maxpool: input must be [T, F, C]");
  const std::size_t T = input.shape[0], F = input.shape[1], C = input.shape[2];
  if (p == 0 || q == 0 || p > T || q > F)
    throw DimError("maxpool: window does not fit the input");
  const std::size_t out_t = T / p, out_f = F / q;

  PoolResult res{Tensor({out_t, out_f, C}), {}};
  res.argmax.resize(res.output.size());
  const double* in = input.data.data();
  for (std::size_t oi = 0; oi < out_t; ++oi) {
    for (std::size_t oj = 0; oj < out_f; ++oj) {
      for (std::size_t c = 0; c < C; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t a = 0; a < p; ++a) {
          for (std::size_t b = 0; b < q; ++b) {
            const std::size_t idx = ((oi * p + a) * F + (oj * q + b)) * C + c;
            if (in[idx] > best) {  // first hit in row-major order wins ties
              best = in[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t out_idx = (oi * out_f + oj) * C + c;
        res.output[out_idx] = best;
        res.argmax[out_idx] = best_idx;
      }
    }
  }
  return res;
}

Tensor maxpool_backward(const std::vector<std::size_t>& input_shape,
                        const std::vector<std::size_t>& argmax,
                        const Tensor& grad_out) {
  if (argmax.size() != grad_out.size())
    throw DimError("maxpool_backward: argmax/grad_out length mismatch");
  Tensor grad_input(input_shape);
  for (std::size_t k = 0; k < grad_out.size(); ++k)
    grad_input[argmax[k]] += grad_out[k];
  return grad_input;
}

Tensor dense_forward(const Tensor& input, const Tensor& weight,
                     const Tensor& bias) {
  if (weight.shape.size() != 2)
    throw DimError("dense: weight must be [d_in, d_out]");
  const std::size_t d_in = weight.shape[0], d_out = weight.shape[1];
  if (input.size() != d_in)
    throw DimError("dense: input length " + std::to_string(input.size()) +
                   " does not match weight rows " + std::to_string(d_in));
  if (bias.size() != d_out) throw DimError("dense: bias length mismatch");

  Tensor out({d_out});
  for (std::size_t j = 0; j < d_out; ++j) out[j] = bias[j];
  const double* w = weight.data.data();
  for (std::size_t i = 0; i < d_in; ++i) {
    const double x = input[i];
    const double* wrow = w + i * d_out;
    for (std::size_t j = 0; j < d_out; ++j) out[j] += x * wrow[j];
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weight,
                          const Tensor& grad_out) {
  const std::size_t d_in = weight.shape[0], d_out = weight.shape[1];
  if (input.size() != d_in) throw DimError("dense_backward: input mismatch");
  if (grad_out.size() != d_out)
    throw DimError("dense_backward: grad_out mismatch");

  DenseGrads grads{Tensor(input.shape), Tensor(weight.shape), grad_out};
  const double* w = weight.data.data();
  const double* go = grad_out.data.data();
  double* gw = grads.grad_weight.data.data();
  for (std::size_t i = 0; i < d_in; ++i) {
    const double x = input[i];
    const double* wrow = w + i * d_out;
    double* gwrow = gw + i * d_out;
    double acc = 0.0;
    for (std::size_t j = 0; j < d_out; ++j) {
      acc += wrow[j] * go[j];
      gwrow[j] += x * go[j];
    }
    grads.grad_input[i] = acc;
  }
  return grads;
}

Tensor softmax(const Tensor& logits) {
  Tensor p(logits.shape);
  const double mx = *std::max_element(logits.data.begin(), logits.data.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= sum;
  return p;
}

XentResult softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  if (label >= logits.size())
    throw std::out_of_range("softmax_cross_entropy: label " +
                            std::to_string(label) + " out of range");
  const double mx = *std::max_element(logits.data.begin(), logits.data.end());
  double sum = 0.0;
  for (double v : logits.data) sum += std::exp(v - mx);
  XentResult res;
  res.loss = -(logits[label] - mx - std::log(sum));
  res.grad_logits = Tensor(logits.shape);
  for (std::size_t i = 0; i < logits.size(); ++i)
    res.grad_logits[i] = std::exp(logits[i] - mx) / sum;
  res.grad_logits[label] -= 1.0;
  return res;
}

double finite_difference_check(const std::vector<Tensor*>& params,
                               const std::vector<const Tensor*>& analytic,
                               const std::function<double()>& loss,
                               double epsilon, std::size_t samples_per_tensor,
                               Rng& rng) {
  if (!(epsilon > 0.0) || epsilon > 1e-3)
    throw ConfigError("finite_difference_check: epsilon must be in (0, 1e-3]");
  if (params.size() != analytic.size())
    throw DimError("finite_difference_check: params/analytic mismatch");

  double max_err = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = *params[k];
    const Tensor& g = *analytic[k];
    if (!w.same_shape(g))
      throw DimError("finite_difference_check: gradient shape mismatch");
    const std::size_t n = w.size();
    for (std::size_t s = 0; s < std::min(samples_per_tensor, n); ++s) {
      const std::size_t i = n <= samples_per_tensor ? s : rng.index(n);
      const double saved = w[i];
      w[i] = saved + epsilon;
      const double up = loss();
      w[i] = saved - epsilon;
      const double down = loss();
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double err =
          std::fabs(g[i] - numeric) / std::max(1.0, std::fabs(g[i]));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace sptrim
