#pragma once

// Mother functions, parametric atoms and sparse patterns evaluable anywhere
// on the plane.

#include "ptm/geometry.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ptm {

enum class MotherKind { Gaussian, InverseMultiquadric };

struct MotherFunction {
  MotherKind kind = MotherKind::Gaussian;
  double mu = -3.0;  // inverse multiquadric exponent, must be negative

  static MotherFunction gaussian() { return {MotherKind::Gaussian, -3.0}; }
  static MotherFunction inverse_multiquadric(double mu = -3.0);

  /// Value at the origin (the maximum of both kinds).
  double peak() const;
  /// Value as a function of the squared radius r2 = x^2 + y^2.
  double of_r2(double r2) const;

  friend bool operator==(const MotherFunction&, const MotherFunction&) = default;
};

std::string to_string(const MotherFunction& m);
MotherKind mother_kind_from_string(std::string_view name);

double eval_mother(const MotherFunction& m, double x, double y);
double eval_atom(const MotherFunction& m, const AtomParams& gamma, double x, double y);

struct Atom {
  AtomParams params;
  double coefficient = 0.0;
};

/// p = sum_j c_j phi_{gamma_j}. Atoms with a zero coefficient are dropped.
class Pattern {
 public:
  Pattern() = default;
  explicit Pattern(MotherFunction mother) : mother_(mother) {}
  Pattern(MotherFunction mother, const std::vector<Atom>& atoms);

  const MotherFunction& mother() const { return mother_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  /// Returns false when the atom was dropped.
  bool add(const Atom& atom);

  Pattern scaled(double factor) const;

 private:
  MotherFunction mother_;
  std::vector<Atom> atoms_;
};

double eval_pattern(const Pattern& p, double x, double y);

}  // namespace ptm
