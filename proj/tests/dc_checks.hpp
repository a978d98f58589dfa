#pragma once

// Randomized property checks for DC decompositions, shared by the unit and
// acceptance suites.

#include "ptm/dc.hpp"

#include <Eigen/Core>

#include <random>

namespace ptm::testing {

inline Eigen::VectorXd random_point(const ParamDomain& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd x(d.dim());
  for (int k = 0; k < d.dim(); ++k) x[k] = d.lo(k) + d.width(k) * u(rng);
  return x;
}

struct IdentityReport {
  int samples = 0;
  int failures = 0;
  double worst = 0.0;  // max |g - h - f| / max(|f|, scale)
};

/// Compares g - h against the independent evaluation of f.
inline IdentityReport check_identity(const DcFunction& f, int samples, double tol, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  IdentityReport r;
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd x = random_point(f.domain(), rng);
    const double direct = f.value(x);
    const double dc = f.f(x).to_double();
    const double err = std::abs(dc - direct) / std::max(std::abs(direct), scale);
    r.worst = std::max(r.worst, err);
    ++r.samples;
    if (!(err <= tol)) ++r.failures;
  }
  return r;
}

struct ConvexityReport {
  int segments = 0;
  int violations = 0;
  int negative_parts = 0;
};

/// Midpoint convexity of g and h on random segments, plus nonnegativity of
/// the parts when the function declares it.
inline ConvexityReport check_convexity(const DcFunction& f, int segments, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ConvexityReport r;
  for (int i = 0; i < segments; ++i) {
    Eigen::VectorXd a = random_point(f.domain(), rng), b = random_point(f.domain(), rng);
    // Half of the segments are short, where curvature errors would show.
    if (i % 2 == 1) b = a + 1e-3 * (b - a);
    Eigen::VectorXd m = 0.5 * (a + b);
    const DcValue pa = f.parts(a), pb = f.parts(b), pm = f.parts(m);
    auto bad = [&](Wide va, Wide vb, Wide vm) {
      const Wide mid = 0.5 * (va + vb);
      const double slack = tol * (1.0 + std::abs(va.to_double()) + std::abs(vb.to_double()));
      return (vm - mid).to_double() > slack;
    };
    if (bad(pa.g, pb.g, pm.g)) ++r.violations;
    if (bad(pa.h, pb.h, pm.h)) ++r.violations;
    if (f.parts_nonnegative() && (pm.g < Wide(0.0) || pm.h < Wide(0.0))) ++r.negative_parts;
    ++r.segments;
  }
  return r;
}

}  // namespace ptm::testing
