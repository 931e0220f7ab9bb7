#include "sptrim/tensor.hpp"

#include <cmath>

namespace sptrim {

bool all_finite(const Tensor& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

double squared_distance(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimError("squared_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double norm2(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data) s += v * v;
  return std::sqrt(s);
}

}  // namespace sptrim
