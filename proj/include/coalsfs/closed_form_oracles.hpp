#pragma once

#include <utility>

namespace coalsfs {

struct ConeSpec {
  double theta = 0.0;  // opening angle in (0, 2*pi]
};

// E[T_a ^ T_{-b}] for standard Brownian motion started at 0.
double expected_two_sided_exit(double a, double b);

/// E[tau_{x,y} ^ tau_{y,z}] for three independent unit Brownian particles
/// started at x <= y <= z: (z - y)(y - x).
double expected_external_branch(double x, double y, double z);

/// Mean length of an interior branch supporting m leaves on the line:
/// 1/n^2 for every 2 <= i <= n - m.
double expected_interior_branch(int n, int m);

// Tail exponent pi / (2 theta) of the exit time of a planar cone.
double cone_exit_exponent(ConeSpec spec);

/// Linear map sending the gap pair (variance 2 each, covariance -1) to
/// independent unit coordinates.
std::pair<double, double> phi_transform(double x, double y);

}  // namespace coalsfs
