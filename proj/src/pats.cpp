#include "ptm/pats.hpp"

#include "ptm/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ptm {

void PatsConfig::validate() const {
  if (max_atoms < 1) throw DomainError("max_atoms must be at least 1");
  if (!(tol_E > 0.0)) throw DomainError("tol_E must be positive");
  if (coarse_points < 2) throw DomainError("coarse_points must be at least 2");
  if (c_range && !(c_range->first <= c_range->second)) throw DomainError("coefficient range is reversed");
  if (!lambda_domain.empty() && lambda_domain.dim() != model_dimension(model))
    throw DomainError("transform domain does not match the model");
  if (!gamma_domain.empty() && gamma_domain.dim() != AtomParams::kDim)
    throw DomainError("atom domain must have five dimensions");
  if (!gamma_domain.empty() && !(gamma_domain.lo(3) > 0.0 && gamma_domain.lo(4) > 0.0))
    throw DomainError("atom scales must be bounded away from zero");
  dc_options.validate();
  gd_options.validate();
}

std::string to_string(PatsStop s) {
  switch (s) {
    case PatsStop::MaxAtoms: return "max_atoms";
    case PatsStop::Converged: return "converged";
    case PatsStop::Rejected: return "rejected";
  }
  return "?";
}

namespace {

const SamplingGrid& shared_grid(const std::vector<Image>& images) {
  if (images.empty()) throw DomainError("image set is empty");
  for (const Image& u : images)
    if (!(u.grid == images.front().grid)) throw DomainError("images do not share one grid");
  return images.front().grid;
}

double total_energy(const std::vector<Image>& images) {
  double s = 0.0;
  for (const Image& u : images) s += u.values.squaredNorm();
  return s;
}

SelectionSetup make_setup(const PatsConfig& cfg, const ResolvedDomains& dom, const SamplingGrid& grid) {
  SelectionSetup s;
  s.mother = cfg.mother;
  s.grid = grid;
  s.gamma_domain = dom.gamma;
  s.c_lo = dom.c_lo;
  s.c_hi = dom.c_hi;
  s.model = cfg.model;
  s.lambda_domain = dom.lambda;
  s.coarse_points = cfg.coarse_points;
  s.dc_options = cfg.dc_options;
  s.gd_options = cfg.gd_options;
  return s;
}

}  // namespace

ResolvedDomains resolve_domains(const PatsConfig& cfg, const std::vector<Image>& images) {
  const SamplingGrid& grid = shared_grid(images);
  ResolvedDomains d;
  d.lambda = cfg.lambda_domain.empty() ? default_transform_domain(cfg.model, grid.width(), grid.height())
                                       : cfg.lambda_domain;
  d.gamma = cfg.gamma_domain.empty() ? default_atom_domain(grid.width(), grid.height()) : cfg.gamma_domain;
  if (cfg.c_range) {
    d.c_lo = cfg.c_range->first;
    d.c_hi = cfg.c_range->second;
  } else {
    double mx = 0.0;
    for (const Image& u : images) mx = std::max(mx, u.norm());
    d.c_hi = 3.0 * mx / cfg.mother.peak();
    d.c_lo = -d.c_hi;
  }
  return d;
}

double normalized_error(double E, const std::vector<Image>& images) {
  const double total = total_energy(images);
  return total > 0.0 ? E / total : 0.0;
}

int select_reference(const std::vector<Image>& images, const ReferenceSelection& sel) {
  shared_grid(images);
  const int n = static_cast<int>(images.size());
  if (sel.kind == ReferenceKind::Index) {
    if (sel.index < 0 || sel.index >= n) throw DomainError("reference index out of range");
    return sel.index;
  }
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(images.front().values.size());
  for (const Image& u : images) centroid += u.values;
  centroid /= n;
  int best = 0;
  double best_d = (images[0].values - centroid).squaredNorm();
  for (int i = 1; i < n; ++i) {
    const double d = (images[i].values - centroid).squaredNorm();
    const bool better = sel.kind == ReferenceKind::CentroidNearest ? d < best_d : d > best_d;
    if (better) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

std::vector<TransformParams> initialize_projections(const std::vector<Image>& images, const PatsConfig& cfg) {
  cfg.validate();
  const ResolvedDomains dom = resolve_domains(cfg, images);
  const int ref = select_reference(images, cfg.reference);
  RenderFn surrogate = bilinear_renderer(images[static_cast<std::size_t>(ref)]);
  std::vector<TransformParams> out;
  out.reserve(images.size());
  for (const Projection& pr : project_all(images, surrogate, cfg.model, dom.lambda, cfg.projection))
    out.push_back(pr.lambda);
  return out;
}

AtomChoice select_atom(const std::vector<Image>& images, const std::vector<TransformParams>& lambdas,
                       const Pattern& current, const PatsConfig& cfg) {
  if (images.size() != lambdas.size()) throw ContractError("one transform per image is required");
  const ResolvedDomains dom = resolve_domains(cfg, images);
  const SamplingGrid& grid = images.front().grid;
  const SelectionSetup setup = make_setup(cfg, dom, grid);

  std::vector<WeightedResidual> terms;
  std::vector<IncrementalTangentError::Term> tterms;
  terms.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    terms.push_back({images[i].values - render_values(current, lambdas[i], grid), lambdas[i], 1.0});
    tterms.push_back({&images[i], lambdas[i], 1.0});
  }

  DcStages dc = run_dc_stages(terms, setup);

  IncrementalTangentError hat(current, std::move(tterms), cfg.model, dom.lambda);
  Objective obj = tangent_objective(hat);
  const double e_hat1 = obj(dc.x1);
  DescentResult gd = gradient_descent(obj, dc.x1, setup.joint_domain(), cfg.gd_options);

  AtomChoice out;
  out.gamma = atom_of(gd.x);
  out.c = gd.x[AtomParams::kDim];
  out.audit.e_tilde_stage0 = dc.e0;
  out.audit.e_tilde_stage1 = dc.e1;
  out.audit.e_hat_stage1 = e_hat1;
  out.audit.e_hat_stage2 = gd.f;
  out.audit.dc_iterations = dc.cutting_plane.iterations;
  out.audit.dc_reason = dc.cutting_plane.reason;
  out.audit.gd_iterations = gd.iterations;
  return out;
}

LearnedModel run_pats(const std::vector<Image>& images, const PatsConfig& cfg, const PatsHooks& hooks) {
  cfg.validate();
  const SamplingGrid& grid = shared_grid(images);
  const ResolvedDomains dom = resolve_domains(cfg, images);
  auto say = [&](const std::string& s) {
    if (hooks.progress) hooks.progress(s);
  };

  LearnedModel out;
  out.pattern = Pattern(cfg.mother);
  out.model = cfg.model;
  out.lambda_domain = dom.lambda;
  out.grid = grid;
  out.projections = initialize_projections(images, cfg);

  double E = total_energy(images);
  out.error_trace.push_back({0, normalized_error(E, images)});
  out.stop = PatsStop::MaxAtoms;

  for (int iter = 1; static_cast<int>(out.pattern.size()) < cfg.max_atoms; ++iter) {
    AtomChoice choice = select_atom(images, out.projections, out.pattern, cfg);
    out.audits.push_back(choice.audit);
    if (hooks.override_atom) hooks.override_atom(iter, choice.gamma, choice.c);

    Pattern candidate = out.pattern;
    if (!candidate.add(Atom{choice.gamma, choice.c})) {
      out.stop = PatsStop::Converged;
      break;
    }
    std::vector<TransformParams> lambdas(images.size());
    double E_new = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      Projection pr = project(images[i], candidate, cfg.model, dom.lambda, out.projections[i], cfg.projection);
      lambdas[i] = pr.lambda;
      E_new += pr.distance * pr.distance;
    }
    std::ostringstream msg;
    msg << "iteration " << iter << ": E " << normalized_error(E_new, images) << " (was "
        << normalized_error(E, images) << ")";
    say(msg.str());
    if (E_new > E) {
      out.stop = PatsStop::Rejected;
      break;
    }
    out.pattern = std::move(candidate);
    out.projections = std::move(lambdas);
    out.error_trace.push_back({static_cast<int>(out.pattern.size()), normalized_error(E_new, images)});
    const double rel = E > 0.0 ? (E - E_new) / E : 0.0;
    E = E_new;
    if (rel < cfg.tol_E) {
      out.stop = PatsStop::Converged;
      break;
    }
  }
  return out;
}

}  // namespace ptm
