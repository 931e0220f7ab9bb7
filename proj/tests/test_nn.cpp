#include <doctest.h>

#include <cmath>

#include "sptrim/nn.hpp"
#include "sptrim/rng.hpp"

using namespace sptrim;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("conv2d output shape follows the size formula") {
  // 98x40 input, 8x20 kernel, 64 filters, stride 1 -> 91x21x64.
  Tensor input({98, 40, 1});
  Tensor kernel({8, 20, 1, 64});
  Tensor out = conv2d_forward(input, kernel, 1, 1);
  CHECK(out.shape == std::vector<std::size_t>{91, 21, 64});

  // Non-divisible strides floor-divide.
  Tensor in2({9, 9, 1});
  Tensor k2({2, 2, 1, 3});
  Tensor out2 = conv2d_forward(in2, k2, 2, 3);
  CHECK(out2.shape == std::vector<std::size_t>{4, 2, 3});
}

TEST_CASE("conv2d identity kernel") {
  Rng rng(7);
  Tensor input = random_tensor({5, 4, 1}, rng);
  Tensor kernel({1, 1, 1, 1});
  kernel[0] = 1.0;
  Tensor out = conv2d_forward(input, kernel, 1, 1);
  REQUIRE(out.size() == input.size());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == input[i]);
}

TEST_CASE("conv2d single patch dot product") {
  Tensor input({2, 2, 1}, {1, 2, 3, 4});
  Tensor kernel({2, 2, 1, 1}, {1, 0, 0, 1});
  Tensor out = conv2d_forward(input, kernel, 1, 1);
  REQUIRE(out.shape == std::vector<std::size_t>{1, 1, 1});
  CHECK(out[0] == doctest::Approx(5.0));
}

TEST_CASE("conv2d channel mismatch is a dimension error") {
  Tensor input({4, 4, 2});
  Tensor kernel({2, 2, 3, 1});
  CHECK_THROWS_AS(conv2d_forward(input, kernel, 1, 1), DimError);
  Tensor big_kernel({5, 5, 2, 1});
  CHECK_THROWS_AS(conv2d_forward(input, big_kernel, 1, 1), DimError);
}

TEST_CASE("conv2d backward zero grad_out and scalar case") {
  Rng rng(3);
  Tensor input = random_tensor({3, 3, 2}, rng);
  Tensor kernel = random_tensor({2, 2, 2, 2}, rng);
  Tensor grad_out({2, 2, 2});
  ConvGrads g = conv2d_backward(input, kernel, 1, 1, grad_out);
  for (double v : g.grad_input.data) CHECK(v == 0.0);
  for (double v : g.grad_kernel.data) CHECK(v == 0.0);

  // 1x1 conv: grad_kernel = x * grad_out.
  Tensor x({1, 1, 1}, {3.0});
  Tensor w({1, 1, 1, 1}, {0.5});
  Tensor go({1, 1, 1}, {2.0});
  ConvGrads sg = conv2d_backward(x, w, 1, 1, go);
  CHECK(sg.grad_kernel[0] == doctest::Approx(6.0));
  CHECK(sg.grad_input[0] == doctest::Approx(1.0));
}

TEST_CASE("conv2d backward matches finite differences") {
  Rng rng(11);
  Tensor input = random_tensor({4, 4, 1}, rng);
  Tensor kernel = random_tensor({2, 2, 1, 1}, rng);
  // Scalar loss: sum of outputs.
  auto loss = [&]() {
    Tensor out = conv2d_forward(input, kernel, 1, 1);
    double s = 0.0;
    for (double v : out.data) s += v;
    return s;
  };
  Tensor ones({3, 3, 1});
  ones.fill(1.0);
  ConvGrads g = conv2d_backward(input, kernel, 1, 1, ones);
  std::vector<Tensor*> params{&input, &kernel};
  std::vector<const Tensor*> analytic{&g.grad_input, &g.grad_kernel};
  double err = finite_difference_check(params, analytic, loss, 1e-5, 50, rng);
  CHECK(err < 1e-6);
}

TEST_CASE("maxpool forward examples") {
  Tensor a({2, 2, 1}, {1, 2, 3, 4});
  PoolResult pr = maxpool_forward(a, 2, 2);
  REQUIRE(pr.output.shape == std::vector<std::size_t>{1, 1, 1});
  CHECK(pr.output[0] == 4.0);

  Tensor c({4, 4, 1});
  c.fill(2.5);
  PoolResult pc = maxpool_forward(c, 2, 2);
  for (double v : pc.output.data) CHECK(v == 2.5);

  // Ramp 1..16: windows max out at 6, 8, 14, 16.
  Tensor ramp({4, 4, 1});
  for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<double>(i + 1);
  PoolResult pres = maxpool_forward(ramp, 2, 2);
  CHECK(pres.output.data == std::vector<double>{6, 8, 14, 16});
}

TEST_CASE("maxpool window larger than input is a dimension error") {
  Tensor a({2, 2, 1});
  CHECK_THROWS_AS(maxpool_forward(a, 3, 1), DimError);
  CHECK_THROWS_AS(maxpool_forward(a, 1, 3), DimError);
}

TEST_CASE("maxpool ties go to the first index in row-major window order") {
  Tensor a({2, 2, 1});
  a.fill(1.0);
  PoolResult pr = maxpool_forward(a, 2, 2);
  CHECK(pr.argmax[0] == 0);
}

TEST_CASE("maxpool backward routes gradient only to argmax positions") {
  Rng rng(5);
  Tensor input = random_tensor({6, 4, 3}, rng);
  PoolResult pr = maxpool_forward(input, 2, 2);
  Tensor grad_out = random_tensor(pr.output.shape, rng);
  Tensor gi = maxpool_backward(input.shape, pr.argmax, grad_out);
  double sum_in = 0.0, sum_out = 0.0;
  for (double v : gi.data) sum_in += v;
  for (double v : grad_out.data) sum_out += v;
  CHECK(sum_in == doctest::Approx(sum_out).epsilon(1e-12));
  // Nonzero entries only at recorded argmax positions.
  std::vector<bool> is_argmax(input.size(), false);
  for (std::size_t idx : pr.argmax) is_argmax[idx] = true;
  for (std::size_t i = 0; i < gi.size(); ++i)
    if (!is_argmax[i]) CHECK(gi[i] == 0.0);
}

TEST_CASE("dense forward conventions") {
  // Row vector times matrix: [1,1] * [[1,2],[3,4]] = [4,6].
  Tensor w({2, 2}, {1, 2, 3, 4});
  Tensor x({2}, {1, 1});
  Tensor b({2}, {0, 0});
  Tensor out = dense_forward(x, w, b);
  CHECK(out.data == std::vector<double>{4, 6});

  // Identity weight, zero bias.
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor out2 = dense_forward(x, eye, b);
  CHECK(out2.data == x.data);

  // Zero weight -> bias.
  Tensor zero({2, 2});
  Tensor bias({2}, {0.5, -0.5});
  Tensor out3 = dense_forward(x, zero, bias);
  CHECK(out3.data == bias.data);

  Tensor bad({3}, {1, 1, 1});
  CHECK_THROWS_AS(dense_forward(bad, w, b), DimError);
}

TEST_CASE("dense backward matches finite differences") {
  Rng rng(13);
  Tensor x = random_tensor({5}, rng);
  Tensor w = random_tensor({5, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  auto loss = [&]() {
    Tensor out = dense_forward(x, w, b);
    double s = 0.0;
    for (double v : out.data) s += v * v;
    return s;
  };
  Tensor out = dense_forward(x, w, b);
  Tensor grad_out({3});
  for (std::size_t i = 0; i < 3; ++i) grad_out[i] = 2.0 * out[i];
  DenseGrads g = dense_backward(x, w, grad_out);
  std::vector<Tensor*> params{&x, &w, &b};
  std::vector<const Tensor*> analytic{&g.grad_input, &g.grad_weight,
                                      &g.grad_bias};
  double err = finite_difference_check(params, analytic, loss, 1e-5, 30, rng);
  CHECK(err < 1e-6);
}

TEST_CASE("softmax cross entropy") {
  SUBCASE("uniform logits") {
    Tensor logits({4});
    XentResult r = softmax_cross_entropy(logits, 2);
    CHECK(r.loss == doctest::Approx(std::log(4.0)));
    for (std::size_t k = 0; k < 4; ++k) {
      double expect = 0.25 - (k == 2 ? 1.0 : 0.0);
      CHECK(r.grad_logits[k] == doctest::Approx(expect));
    }
  }
  SUBCASE("large logit gap is stable") {
    Tensor logits({2}, {1000.0, 0.0});
    XentResult r = softmax_cross_entropy(logits, 0);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(0.0));
  }
  SUBCASE("direct evaluation") {
    Tensor logits({3}, {1.0, 2.0, 3.0});
    XentResult r = softmax_cross_entropy(logits, 2);
    CHECK(r.loss == doctest::Approx(0.40760596444438).epsilon(1e-10));
  }
  SUBCASE("label out of range") {
    Tensor logits({3});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, 3), std::out_of_range);
  }
  SUBCASE("softmax sums to one") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor logits = random_tensor({6}, rng);
      Tensor p = softmax(logits);
      double sum = 0.0;
      for (double v : p.data) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("finite_difference_check rejects bad epsilon") {
  Rng rng(1);
  Tensor w({2}, {1, 2});
  Tensor g({2}, {1, 1});
  auto loss = [&]() { return w[0] + w[1]; };
  std::vector<Tensor*> params{&w};
  std::vector<const Tensor*> analytic{&g};
  CHECK_THROWS_AS(
      finite_difference_check(params, analytic, loss, 0.0, 2, rng),
      ConfigError);
  CHECK_THROWS_AS(
      finite_difference_check(params, analytic, loss, 1e-2, 2, rng),
      ConfigError);
  // Linear loss: central differences are exact to machine precision.
  double err = finite_difference_check(params, analytic, loss, 1e-5, 2, rng);
  CHECK(err < 1e-9);
}

TEST_CASE("forward and backward keep values finite on finite input") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor input = random_tensor({6, 6, 2}, rng);
    Tensor kernel = random_tensor({3, 3, 2, 4}, rng);
    Tensor out = conv2d_forward(input, kernel, 1, 1);
    CHECK(all_finite(out));
    PoolResult pr = maxpool_forward(out, 2, 2);
    CHECK(all_finite(pr.output));
    Tensor go = random_tensor(out.shape, rng);
    ConvGrads g = conv2d_backward(input, kernel, 1, 1, go);
    CHECK(all_finite(g.grad_input));
    CHECK(all_finite(g.grad_kernel));
  }
}
