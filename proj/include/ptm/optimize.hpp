#pragma once

// Minimizers for atom selection: lattice search, an outer-approximation
// cutting-plane method for DC objectives, and projected descent.

#include "ptm/dc.hpp"
#include "ptm/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>

namespace ptm {

struct SolverOptions {
  int max_iters = 60;
  int vertex_budget = 500;
  double tol_f = 1e-6;
  double fd_step = 1e-4;  // relative to the width of each dimension
  int max_ls_steps = 30;

  void validate() const;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct SearchResult {
  Eigen::VectorXd x;
  double f = 0.0;
};

/// Best point of a lattice with pts_per_dim points per free dimension
/// (endpoints included). Ties keep the lexicographically first point.
SearchResult coarse_search(const Objective& objective, const ParamDomain& domain, int pts_per_dim);

enum class StopReason { Converged, Feasible, VertexBudget, MaxIters };
std::string to_string(StopReason r);

struct CuttingPlaneResult {
  Eigen::VectorXd x;
  Wide f;              // g - h at x
  Wide lower_bound;    // of min f over the box, valid when the cuts are exact
  int iterations = 0;
  int vertices = 0;
  StopReason reason = StopReason::MaxIters;
};

/// Minimizes f = g - h over `domain` (a sub-box of f's domain). The epigraph
/// of g is approximated from outside by tangent cuts; the concave function
/// t - h is minimized over the vertices of the resulting polytope. Never
/// returns a point worse than x0.
CuttingPlaneResult cutting_plane_min(const DcFunction& f, const ParamDomain& domain, const Eigen::VectorXd& x0,
                                     const SolverOptions& opts = {});

struct DescentResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
};

/// Projected descent with central-difference gradients in coordinates
/// normalized to the box, and Armijo backtracking (constant 1e-4).
DescentResult gradient_descent(const Objective& objective, const Eigen::VectorXd& x0, const ParamDomain& domain,
                               const SolverOptions& opts = {});

/// Central-difference gradient with the same step rule as gradient_descent,
/// in raw coordinates. Pinned dimensions get zero.
Eigen::VectorXd fd_gradient(const Objective& objective, const Eigen::VectorXd& x, const ParamDomain& domain,
                            double fd_step);

}  // namespace ptm
