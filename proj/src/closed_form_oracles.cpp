#include "coalsfs/closed_form_oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace coalsfs {

double expected_two_sided_exit(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("expected_two_sided_exit: a, b must be > 0");
  return a * b;
}

double expected_external_branch(double x, double y, double z) {
  if (!(x <= y) || !(y <= z)) throw std::invalid_argument("expected_external_branch: need x <= y <= z");
  return (z - y) * (y - x);
}

double expected_interior_branch(int n, int m) {
  if (m < 1 || n < m + 2) throw std::invalid_argument("expected_interior_branch: need n >= m + 2");
  return 1.0 / (static_cast<double>(n) * n);
}

double cone_exit_exponent(ConeSpec spec) {
  if (!(spec.theta > 0.0) || spec.theta > 2.0 * std::numbers::pi) {
    throw std::invalid_argument("cone_exit_exponent: theta must be in (0, 2 pi]");
  }
  return std::numbers::pi / (2.0 * spec.theta);
}

std::pair<double, double> phi_transform(double x, double y) {
  return {std::sqrt(2.0 / 3.0) * (x + 0.5 * y), std::sqrt(0.5) * y};
}

}  // namespace coalsfs
