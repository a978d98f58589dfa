#include "ptm/dictionary.hpp"

#include "ptm/error.hpp"

#include <cmath>

namespace ptm {

namespace {
const double kGaussPeak = std::sqrt(2.0 / kPi);
}

MotherFunction MotherFunction::inverse_multiquadric(double mu) {
  if (!(mu < 0.0) || !std::isfinite(mu)) throw DomainError("inverse multiquadric exponent must be negative");
  return {MotherKind::InverseMultiquadric, mu};
}

double MotherFunction::peak() const { return kind == MotherKind::Gaussian ? kGaussPeak : 1.0; }

double MotherFunction::of_r2(double r2) const {
  if (kind == MotherKind::Gaussian) return kGaussPeak * std::exp(-r2);
  return std::pow(1.0 + r2, mu);
}

std::string to_string(const MotherFunction& m) {
  return m.kind == MotherKind::Gaussian ? "gaussian" : "imq";
}

MotherKind mother_kind_from_string(std::string_view name) {
  if (name == "gaussian") return MotherKind::Gaussian;
  if (name == "imq") return MotherKind::InverseMultiquadric;
  throw DomainError("unknown mother function '" + std::string(name) + "'");
}

double eval_mother(const MotherFunction& m, double x, double y) { return m.of_r2(x * x + y * y); }

double eval_atom(const MotherFunction& m, const AtomParams& gamma, double x, double y) {
  Point2 p = atom_inverse_map(gamma, x, y);
  return eval_mother(m, p.x, p.y);
}

Pattern::Pattern(MotherFunction mother, const std::vector<Atom>& atoms) : mother_(mother) {
  for (const Atom& a : atoms) add(a);
}

bool Pattern::add(const Atom& atom) {
  if (!std::isfinite(atom.coefficient)) throw DomainError("atom coefficient is not finite");
  if (atom.coefficient == 0.0) return false;
  atoms_.push_back(atom);
  return true;
}

Pattern Pattern::scaled(double factor) const {
  Pattern out(mother_);
  for (const Atom& a : atoms_) out.add({a.params, a.coefficient * factor});
  return out;
}

double eval_pattern(const Pattern& p, double x, double y) {
  double s = 0.0;
  for (const Atom& a : p.atoms()) s += a.coefficient * eval_atom(p.mother(), a.params, x, y);
  return s;
}

}  // namespace ptm
