#include "ptm/selection.hpp"

#include "ptm/error.hpp"

#include <algorithm>
#include <cmath>

namespace ptm {

ParamDomain SelectionSetup::joint_domain() const {
  return gamma_domain.concat(ParamDomain(Eigen::VectorXd::Constant(1, c_lo), Eigen::VectorXd::Constant(1, c_hi)));
}

AtomParams atom_of(const Eigen::VectorXd& x) { return AtomParams::from_vector(x.head(AtomParams::kDim)); }

namespace {

struct Moments {
  double s0 = 0.0;  // sum w |v|^2
  double s1 = 0.0;  // sum w <v, a>
  double s2 = 0.0;  // sum w |a|^2
};

Moments moments(const std::vector<WeightedResidual>& terms, const SelectionSetup& s, const AtomParams& gamma) {
  Moments m;
  Eigen::VectorXd a(s.grid.size());
  for (const WeightedResidual& t : terms) {
    a.setZero();
    accumulate_atom(s.mother, gamma, 1.0, t.lambda, s.grid, a);
    m.s0 += t.weight * t.v.squaredNorm();
    m.s1 += t.weight * t.v.dot(a);
    m.s2 += t.weight * a.squaredNorm();
  }
  return m;
}

double quad(const Moments& m, double c) { return m.s0 - 2.0 * c * m.s1 + c * c * m.s2; }

}  // namespace

double weighted_error_value(const std::vector<WeightedResidual>& terms, const SelectionSetup& s,
                            const AtomParams& gamma, double c) {
  double e = 0.0;
  Eigen::VectorXd r(s.grid.size());
  for (const WeightedResidual& t : terms) {
    r = t.v;
    accumulate_atom(s.mother, gamma, -c, t.lambda, s.grid, r);
    e += t.weight * r.squaredNorm();
  }
  return e;
}

ProfiledError profiled_error(const std::vector<WeightedResidual>& terms, const SelectionSetup& s,
                             const AtomParams& gamma) {
  const Moments m = moments(terms, s, gamma);
  double best_c = 0.0;
  if (m.s2 > 0.0) {
    best_c = std::clamp(m.s1 / m.s2, s.c_lo, s.c_hi);
  } else {
    // Concave or linear in c: an endpoint wins.
    best_c = quad(m, s.c_lo) <= quad(m, s.c_hi) ? s.c_lo : s.c_hi;
  }
  if (s.c_lo <= 0.0 && s.c_hi >= 0.0 && quad(m, 0.0) <= quad(m, best_c)) best_c = 0.0;
  return {quad(m, best_c), best_c};
}

DcStages run_dc_stages(const std::vector<WeightedResidual>& terms, const SelectionSetup& s) {
  DcStages out;
  const ParamDomain joint = s.joint_domain();

  Objective profiled = [&](const Eigen::VectorXd& g) { return profiled_error(terms, s, atom_of(g)).value; };
  SearchResult coarse = coarse_search(profiled, s.gamma_domain, s.coarse_points);
  out.x0 = Eigen::VectorXd(joint.dim());
  out.x0 << coarse.x, profiled_error(terms, s, atom_of(coarse.x)).c;
  out.e0 = weighted_error_value(terms, s, atom_of(out.x0), out.x0[AtomParams::kDim]);

  DcFunction f = dc_weighted_error(s.mother, terms, s.grid, s.gamma_domain, s.c_lo, s.c_hi);
  out.cutting_plane = cutting_plane_min(f, joint, out.x0, s.dc_options);
  out.x1 = out.cutting_plane.x;
  out.e1 = weighted_error_value(terms, s, atom_of(out.x1), out.x1[AtomParams::kDim]);
  if (out.e1 > out.e0) {
    // The solver compares in extended precision; keep the direct ordering too.
    out.x1 = out.x0;
    out.e1 = out.e0;
  }
  return out;
}

Objective tangent_objective(const IncrementalTangentError& err) {
  return [&err](const Eigen::VectorXd& x) { return err.value(atom_of(x), x[AtomParams::kDim]); };
}

}  // namespace ptm
