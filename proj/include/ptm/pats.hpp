#pragma once

// Greedy learning of one pattern transformation manifold: atoms are added
// one at a time and all images are re-projected after every addition.

#include "ptm/selection.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ptm {

enum class ReferenceKind { CentroidNearest, CentroidFarthest, Index };

struct ReferenceSelection {
  ReferenceKind kind = ReferenceKind::CentroidNearest;
  int index = 0;
};

struct PatsConfig {
  int max_atoms = 15;
  TransformModel model = TransformModel::Full5;
  ParamDomain lambda_domain;  // empty: default box for the grid
  ParamDomain gamma_domain;   // empty: default box for the grid
  std::optional<std::pair<double, double>> c_range;  // empty: derived from the image norms
  MotherFunction mother = MotherFunction::gaussian();
  int coarse_points = 5;
  SolverOptions dc_options{5, 300, 1e-6, 1e-4, 30};
  SolverOptions gd_options{20, 500, 1e-6, 1e-4, 30};
  double tol_E = 1e-3;
  ReferenceSelection reference;
  ProjectOptions projection{7, 3, 0.10, 1e-5, 12, 16};

  void validate() const;
};

/// Boxes actually used for a grid and image set.
struct ResolvedDomains {
  ParamDomain lambda;
  ParamDomain gamma;
  double c_lo = 0.0;
  double c_hi = 0.0;
};

ResolvedDomains resolve_domains(const PatsConfig& cfg, const std::vector<Image>& images);

struct TracePoint {
  int atoms = 0;
  double value = 0.0;
};

enum class PatsStop { MaxAtoms, Converged, Rejected };
std::string to_string(PatsStop s);

struct LearnedModel {
  Pattern pattern;
  TransformModel model = TransformModel::Full5;
  ParamDomain lambda_domain;
  SamplingGrid grid;
  std::vector<TransformParams> projections;
  std::vector<TracePoint> error_trace;  // (atom count, normalized E), accepted states
  PatsStop stop = PatsStop::MaxAtoms;
  std::vector<SelectionAudit> audits;   // one per attempted iteration
};

/// E / sum |u_i|^2, or 0 when every image is zero.
double normalized_error(double E, const std::vector<Image>& images);

/// Index of the reference image.
int select_reference(const std::vector<Image>& images, const ReferenceSelection& sel);

std::vector<TransformParams> initialize_projections(const std::vector<Image>& images, const PatsConfig& cfg);

AtomChoice select_atom(const std::vector<Image>& images, const std::vector<TransformParams>& lambdas,
                       const Pattern& current, const PatsConfig& cfg);

struct PatsHooks {
  /// Called with the iteration number (from 1) and the selected atom; may
  /// replace it.
  std::function<void(int, AtomParams&, double&)> override_atom;
  std::function<void(const std::string&)> progress;
};

LearnedModel run_pats(const std::vector<Image>& images, const PatsConfig& cfg, const PatsHooks& hooks = {});

}  // namespace ptm
