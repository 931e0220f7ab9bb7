#include "sptrim/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sptrim {

double Rng::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  double u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::restore(const std::string& s) {
  std::istringstream is(s);
  is >> gen_;
}

}  // namespace sptrim
