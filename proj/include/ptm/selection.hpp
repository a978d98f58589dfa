#pragma once

// Two-stage search for one new atom, shared by the single- and multi-class
// learners. Stage 0 scans the atom box with the coefficient solved in closed
// form, stage 1 runs the cutting-plane solver on the DC error, stage 2 refines
// with descent on the tangent-distance error.

#include "ptm/dc.hpp"
#include "ptm/manifold.hpp"
#include "ptm/optimize.hpp"

#include <vector>

namespace ptm {

struct SelectionSetup {
  MotherFunction mother;
  SamplingGrid grid;
  ParamDomain gamma_domain;
  double c_lo = -1.0;
  double c_hi = 1.0;
  TransformModel model = TransformModel::Full5;
  ParamDomain lambda_domain;
  int coarse_points = 5;
  SolverOptions dc_options;
  SolverOptions gd_options;

  /// gamma_domain x [c_lo, c_hi].
  ParamDomain joint_domain() const;
};

/// sum_i w_i |v_i - c U_{lambda_i}(phi_gamma)|^2, evaluated directly.
double weighted_error_value(const std::vector<WeightedResidual>& terms, const SelectionSetup& s,
                            const AtomParams& gamma, double c);

struct ProfiledError {
  double value = 0.0;
  double c = 0.0;
};

/// Minimum over c in [c_lo, c_hi] of the weighted error at fixed gamma.
ProfiledError profiled_error(const std::vector<WeightedResidual>& terms, const SelectionSetup& s,
                             const AtomParams& gamma);

struct DcStages {
  Eigen::VectorXd x0;  // stage 0 point (gamma, c)
  double e0 = 0.0;
  Eigen::VectorXd x1;  // stage 1 point
  double e1 = 0.0;
  CuttingPlaneResult cutting_plane;
};

DcStages run_dc_stages(const std::vector<WeightedResidual>& terms, const SelectionSetup& s);

/// Candidate-pattern tangent error as a function of x = (gamma, c).
Objective tangent_objective(const IncrementalTangentError& err);

AtomParams atom_of(const Eigen::VectorXd& x);

struct SelectionAudit {
  double e_tilde_stage0 = 0.0;
  double e_tilde_stage1 = 0.0;
  double e_hat_stage1 = 0.0;
  double e_hat_stage2 = 0.0;
  int dc_iterations = 0;
  StopReason dc_reason = StopReason::MaxIters;
  int gd_iterations = 0;
};

struct AtomChoice {
  AtomParams gamma;
  double c = 0.0;
  SelectionAudit audit;
};

}  // namespace ptm
