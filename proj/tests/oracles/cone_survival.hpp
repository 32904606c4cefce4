#pragma once

// Survival function of the first meeting time among three independent unit
// Brownian particles, from the eigenfunction expansion of the heat kernel in
// a planar wedge. Independent of the engine; used as ground truth.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

// log of 1F1(a; b; -z) for b > a > 0, z >= 0, through Kummer's transform
// e^{-z} 1F1(b - a; b; z), whose series has positive terms.
inline double log_kummer_neg(double a, double b, double z) {
  if (z == 0.0) return 0.0;
  const double c = b - a;
  std::vector<double> logs{0.0};
  double lt = 0.0, peak = 0.0;
  for (int k = 0; k < 100000; ++k) {
    lt += std::log((c + k) / (b + k) * z / (k + 1));
    logs.push_back(lt);
    peak = std::max(peak, lt);
    if (lt < peak - 40.0) break;
  }
  double s = 0.0;
  for (double l : logs) s += std::exp(l - peak);
  return peak + std::log(s) - z;
}

// P(T > t) for standard planar Brownian motion started at polar (r, phi0)
// inside the wedge 0 < phi < theta.
inline double wedge_survival(double theta, double r, double phi0, double t) {
  const double z = r * r / (2.0 * t);
  if (z > 400.0) return 1.0;
  double sum = 0.0;
  int quiet = 0;
  for (int n = 1; n < 4000; n += 2) {
    const double nu = n * std::numbers::pi / theta;
    const double log_scale = std::lgamma(nu / 2.0 + 1.0) - std::lgamma(nu + 1.0) + (nu / 2.0) * std::log(z);
    const double term =
        4.0 / (n * std::numbers::pi) * std::sin(nu * phi0) * std::exp(log_scale + log_kummer_neg(nu / 2.0, nu + 1.0, z));
    sum += term;
    quiet = std::abs(term) < 1e-13 ? quiet + 1 : 0;
    if (quiet >= 4) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// Particles at x < y < z; gaps have variance rate 2 and covariance -1.
inline double triple_meeting_survival(double x, double y, double z, double t) {
  const double g1 = y - x;
  const double g2 = z - y;
  const double u = std::sqrt(2.0 / 3.0) * (g1 + 0.5 * g2);
  const double v = std::sqrt(0.5) * g2;
  return wedge_survival(std::numbers::pi / 3.0, std::hypot(u, v), std::atan2(v, u), t);
}

}  // namespace oracle
