#include "ptm/jpats.hpp"

#include "ptm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ptm {

double sigmoid(double f, double beta) {
  if (!(beta > 0.0)) throw DomainError("sigmoid slope must be positive");
  const double x = beta * f;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double eta(double f0, double beta) {
  const double d = beta * sigmoid(f0, beta) * sigmoid(-f0, beta);
  return std::max(d, std::numeric_limits<double>::min());
}

double estimate_beta(const std::vector<double>& f0, const std::vector<int>& flags, double previous) {
  if (f0.empty()) throw DomainError("no samples for the slope fit");
  if (f0.size() != flags.size()) throw ContractError("one flag per sample is required");
  const bool any0 = std::find(flags.begin(), flags.end(), 0) != flags.end();
  const bool any1 = std::find_if(flags.begin(), flags.end(), [](int v) { return v != 0; }) != flags.end();
  if (!any0 || !any1) return previous;

  auto loss = [&](double log_beta) {
    const double b = std::exp(log_beta);
    double s = 0.0;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      const double r = sigmoid(f0[i], b) - (flags[i] ? 1.0 : 0.0);
      s += r * r;
    }
    return s;
  };

  const double lo = std::log(1e-2), hi = std::log(1e4);
  const int n = 61;
  const double step = (hi - lo) / (n - 1);
  int best = 0;
  double best_f = loss(lo);
  for (int q = 1; q < n; ++q) {
    const double f = loss(lo + q * step);
    if (f < best_f) {
      best_f = f;
      best = q;
    }
  }
  double best_x = lo + best * step;

  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = loss(x1), f2 = loss(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = loss(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = loss(x2);
    }
  }
  if (std::min(f1, f2) < best_f) best_x = f1 <= f2 ? x1 : x2;
  return std::exp(best_x);
}

double AlphaSchedule::operator()(int iteration) const {
  return start + (end - start) / (1.0 + std::exp(-slope * (iteration - center)));
}

void AlphaSchedule::validate() const {
  if (!(start >= 0.0) || !(end >= 0.0)) throw DomainError("alpha values must be nonnegative");
  if (!std::isfinite(center) || !std::isfinite(slope)) throw DomainError("alpha schedule is not finite");
}

void JpatsConfig::validate() const {
  base.validate();
  alpha.validate();
  if (!(beta.value > 0.0)) throw DomainError("beta must be positive");
  if (!(coef_significance >= 0.0)) throw DomainError("coefficient significance must be nonnegative");
  if (patience < 1) throw DomainError("patience must be at least 1");
}

std::vector<std::vector<int>> misclassified(const CrossTable& cross) {
  std::vector<std::vector<int>> out(cross.distance.size());
  for (std::size_t k = 0; k < cross.distance.size(); ++k)
    for (const std::vector<double>& d : cross.distance[k]) {
      double rival = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < d.size(); ++m)
        if (m != k) rival = std::min(rival, d[m]);
      out[k].push_back(d[k] < rival ? 0 : 1);
    }
  return out;
}

int classification_error(const CrossTable& cross) {
  int s = 0;
  for (const auto& cls : misclassified(cross))
    for (int v : cls) s += v;
  return s;
}

double approximation_error(const CrossTable& cross) {
  double s = 0.0;
  for (std::size_t k = 0; k < cross.distance.size(); ++k)
    for (const std::vector<double>& d : cross.distance[k]) s += d[k] * d[k];
  return s;
}

WeightState update_rivals_and_weights(const CrossTable& cross, double beta) {
  const int M = static_cast<int>(cross.distance.size());
  if (M < 2) throw DomainError("at least two classes are required");
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  WeightState w;
  w.beta = beta;
  w.f0.resize(M);
  w.eta.resize(M);
  w.rival.resize(M);
  w.R.assign(M, {});
  for (int k = 0; k < M; ++k) {
    const int n = static_cast<int>(cross.distance[k].size());
    for (int i = 0; i < n; ++i) {
      const std::vector<double>& d = cross.distance[k][i];
      int r = -1;
      for (int m = 0; m < M; ++m)
        if (m != k && (r < 0 || d[m] < d[r])) r = m;
      const double f = d[k] * d[k] - d[r] * d[r];
      w.rival[k].push_back(r);
      w.f0[k].push_back(f);
      w.eta[k].push_back(eta(f, beta));
      w.R[r].push_back({i, k});
    }
  }
  return w;
}

namespace {

std::vector<Image> flatten(const LabeledSet& images) {
  std::vector<Image> out;
  for (const auto& cls : images) out.insert(out.end(), cls.begin(), cls.end());
  return out;
}

void check_set(const LabeledSet& images, bool need_two) {
  if (need_two && images.size() < 2) throw DomainError("at least two classes are required");
  if (images.empty()) throw DomainError("no classes given");
  for (const auto& cls : images)
    if (cls.empty()) throw DomainError("every class needs at least one image");
  const SamplingGrid& g = images.front().front().grid;
  for (const auto& cls : images)
    for (const Image& u : cls)
      if (!(u.grid == g)) throw DomainError("images do not share one grid");
}

// Sum of per-class tangent errors over the concatenated (gamma, c) blocks.
// Blocks whose slice did not move are not re-evaluated.
class JointTangentObjective {
 public:
  explicit JointTangentObjective(std::vector<IncrementalTangentError> blocks)
      : blocks_(std::move(blocks)), last_x_(blocks_.size()), last_v_(blocks_.size(), 0.0) {}

  double operator()(const Eigen::VectorXd& x) {
    constexpr int B = AtomParams::kDim + 1;
    double s = 0.0;
    for (std::size_t m = 0; m < blocks_.size(); ++m) {
      Eigen::VectorXd slice = x.segment(static_cast<Eigen::Index>(m) * B, B);
      if (last_x_[m].size() != B || slice != last_x_[m]) {
        last_v_[m] = blocks_[m].value(atom_of(slice), slice[AtomParams::kDim]);
        last_x_[m] = slice;
      }
      s += last_v_[m];
    }
    return s;
  }

  double block_value(std::size_t m, const Eigen::VectorXd& slice) const {
    return blocks_[m].value(atom_of(slice), slice[AtomParams::kDim]);
  }

 private:
  std::vector<IncrementalTangentError> blocks_;
  std::vector<Eigen::VectorXd> last_x_;
  std::vector<double> last_v_;
};

}  // namespace

JointSelection joint_select_atoms(const LabeledSet& images, const ClassModel& models, const WeightState& weights,
                                  double alpha, const JpatsConfig& cfg, const std::vector<bool>& active_in) {
  check_set(images, false);
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  const int M = static_cast<int>(images.size());
  if (models.classes() != M) throw ContractError("one pattern per class is required");
  std::vector<bool> active = active_in.empty() ? std::vector<bool>(M, true) : active_in;
  if (static_cast<int>(active.size()) != M) throw ContractError("one activity flag per class is required");

  const PatsConfig& pc = cfg.base;
  const ResolvedDomains dom = resolve_domains(pc, flatten(images));
  const SamplingGrid& grid = images.front().front().grid;
  SelectionSetup setup;
  setup.mother = pc.mother;
  setup.grid = grid;
  setup.gamma_domain = dom.gamma;
  setup.c_lo = dom.c_lo;
  setup.c_hi = dom.c_hi;
  setup.model = pc.model;
  setup.lambda_domain = dom.lambda;
  setup.coarse_points = pc.coarse_points;
  setup.dc_options = pc.dc_options;
  setup.gd_options = pc.gd_options;

  const auto& lam = models.cross.lambda;
  // Without weights every eta is taken as zero.
  std::vector<std::vector<double>> eta0 = weights.eta;
  if (eta0.empty())
    for (const auto& cls : images) eta0.emplace_back(cls.size(), 0.0);

  JointSelection out;
  out.atoms.assign(M, AtomChoice{});
  out.order.resize(M);
  std::iota(out.order.begin(), out.order.end(), 0);
  if (cfg.block_order == BlockOrder::DescendingError && M > 1) {
    const auto bad = misclassified(models.cross);
    std::vector<int> count(M, 0);
    for (int m = 0; m < M; ++m) count[m] = std::accumulate(bad[m].begin(), bad[m].end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(), [&](int a, int b) { return count[a] > count[b]; });
  }

  // DC stage, one class block at a time.
  std::vector<Eigen::VectorXd> x1(M);
  for (int m : out.order) {
    if (!active[m]) continue;
    JointBlockTerms t;
    for (std::size_t i = 0; i < images[m].size(); ++i) {
      t.own_residuals.push_back(images[m][i].values - render_values(models.patterns[m], lam[m][i][m], grid));
      t.own_lambdas.push_back(lam[m][i][m]);
      t.own_eta.push_back(eta0[m][i]);
    }
    if (m < static_cast<int>(weights.R.size()))
      for (auto [i, k] : weights.R[m]) {
        t.rival_residuals.push_back(images[k][i].values - render_values(models.patterns[m], lam[k][i][m], grid));
        t.rival_lambdas.push_back(lam[k][i][m]);
        t.rival_eta.push_back(weights.eta[k][i]);
      }
    DcStages dc = run_dc_stages(joint_block_weights(t, alpha), setup);
    x1[m] = dc.x1;
    AtomChoice& a = out.atoms[m];
    a.audit.e_tilde_stage0 = dc.e0;
    a.audit.e_tilde_stage1 = dc.e1;
    a.audit.dc_iterations = dc.cutting_plane.iterations;
    a.audit.dc_reason = dc.cutting_plane.reason;
  }

  // Base values refreshed with the candidate atoms at the current transforms.
  std::vector<std::vector<double>> eta_gd = eta0;
  if (cfg.refresh_f0 && alpha > 0.0 && M > 1 && !weights.rival.empty()) {
    std::vector<Pattern> cand = models.patterns;
    for (int m = 0; m < M; ++m)
      if (active[m]) cand[m].add(Atom{atom_of(x1[m]), x1[m][AtomParams::kDim]});
    for (int k = 0; k < M; ++k)
      for (std::size_t i = 0; i < images[k].size(); ++i) {
        const int r = weights.rival[k][i];
        const double dk = (images[k][i].values - render_values(cand[k], lam[k][i][k], grid)).squaredNorm();
        const double dr = (images[k][i].values - render_values(cand[r], lam[k][i][r], grid)).squaredNorm();
        eta_gd[k][i] = eta(dk - dr, weights.beta);
      }
  }

  // Descent on the summed tangent errors of all active blocks.
  std::vector<IncrementalTangentError> blocks;
  std::vector<int> block_class;
  ParamDomain joint_dom;
  Eigen::VectorXd x0;
  for (int m = 0; m < M; ++m) {
    if (!active[m]) continue;
    std::vector<IncrementalTangentError::Term> terms;
    for (std::size_t i = 0; i < images[m].size(); ++i)
      terms.push_back({&images[m][i], lam[m][i][m], 1.0 + alpha * eta_gd[m][i]});
    if (alpha != 0.0 && m < static_cast<int>(weights.R.size()))
      for (auto [i, k] : weights.R[m]) terms.push_back({&images[k][i], lam[k][i][m], -alpha * eta_gd[k][i]});
    blocks.emplace_back(models.patterns[m], std::move(terms), pc.model, dom.lambda);
    block_class.push_back(m);
    joint_dom = joint_dom.empty() ? setup.joint_domain() : joint_dom.concat(setup.joint_domain());
    Eigen::VectorXd nx(x0.size() + x1[m].size());
    nx << x0, x1[m];
    x0 = nx;
  }
  if (blocks.empty()) return out;

  JointTangentObjective joint(std::move(blocks));
  Objective obj = [&joint](const Eigen::VectorXd& x) { return joint(x); };
  constexpr int B = AtomParams::kDim + 1;
  for (std::size_t b = 0; b < block_class.size(); ++b)
    out.atoms[block_class[b]].audit.e_hat_stage1 = joint.block_value(b, x0.segment(b * B, B));
  DescentResult gd = gradient_descent(obj, x0, joint_dom, pc.gd_options);
  for (std::size_t b = 0; b < block_class.size(); ++b) {
    AtomChoice& a = out.atoms[block_class[b]];
    Eigen::VectorXd slice = gd.x.segment(b * B, B);
    a.gamma = atom_of(slice);
    a.c = slice[AtomParams::kDim];
    a.audit.e_hat_stage2 = joint.block_value(b, slice);
    a.audit.gd_iterations = gd.iterations;
  }
  return out;
}

namespace {

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  for (double& x : v) x = std::abs(x);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ClassModel run_jpats(const LabeledSet& images, const JpatsConfig& cfg, const JpatsHooks& hooks) {
  cfg.validate();
  check_set(images, true);
  const int M = static_cast<int>(images.size());
  const PatsConfig& pc = cfg.base;
  const ResolvedDomains dom = resolve_domains(pc, flatten(images));
  auto say = [&](const std::string& s) {
    if (hooks.progress) hooks.progress(s);
  };

  ClassModel model;
  model.patterns.assign(M, Pattern(pc.mother));
  model.model = pc.model;
  model.lambda_domain = dom.lambda;
  model.grid = images.front().front().grid;
  model.cross.lambda.resize(M);
  model.cross.distance.resize(M);
  for (int k = 0; k < M; ++k) {
    model.cross.lambda[k].assign(images[k].size(), std::vector<TransformParams>(M));
    model.cross.distance[k].assign(images[k].size(), std::vector<double>(M));
    for (std::size_t i = 0; i < images[k].size(); ++i)
      for (int m = 0; m < M; ++m) model.cross.distance[k][i][m] = images[k][i].norm();
  }
  // Every image is projected onto the reference manifold of every class.
  for (int m = 0; m < M; ++m) {
    const int ref = select_reference(images[m], pc.reference);
    RenderFn surrogate = bilinear_renderer(images[m][static_cast<std::size_t>(ref)]);
    for (int k = 0; k < M; ++k) {
      std::vector<Projection> pr = project_all(images[k], surrogate, pc.model, dom.lambda, pc.projection);
      for (std::size_t i = 0; i < pr.size(); ++i) model.cross.lambda[k][i][m] = pr[i].lambda;
    }
  }

  double beta = cfg.beta.value;
  int E_c = classification_error(model.cross);
  auto trace_point = [&](int iteration, double alpha) {
    JpatsTracePoint t;
    t.iteration = iteration;
    for (const Pattern& p : model.patterns) t.atoms.push_back(static_cast<int>(p.size()));
    t.E_a = approximation_error(model.cross);
    t.E_c = classification_error(model.cross);
    t.E = t.E_a + alpha * t.E_c;
    t.alpha = alpha;
    t.beta = beta;
    return t;
  };
  model.trace.push_back(trace_point(0, cfg.alpha(0)));

  std::vector<double> accepted_c;
  int unchanged = 0;
  for (int j = 1; unchanged < cfg.patience; ++j) {
    std::vector<bool> active(M);
    bool any = false;
    for (int m = 0; m < M; ++m) any |= (active[m] = static_cast<int>(model.patterns[m].size()) < pc.max_atoms);
    if (!any) break;
    model.iterations = j;

    const double alpha = cfg.alpha(j);
    const WeightState w = update_rivals_and_weights(model.cross, beta);
    JointSelection sel = joint_select_atoms(images, model, w, alpha, cfg, active);
    if (hooks.override_atoms) hooks.override_atoms(j, sel.atoms);

    const double floor = cfg.coef_significance * median_abs(accepted_c);
    std::vector<Pattern> cand = model.patterns;
    std::vector<bool> changed(M, false);
    for (int m = 0; m < M; ++m) {
      const double c = sel.atoms[m].c;
      if (active[m] && c != 0.0 && std::abs(c) >= floor) changed[m] = cand[m].add(Atom{sel.atoms[m].gamma, c});
    }

    CrossTable next = model.cross;
    for (int k = 0; k < M; ++k)
      for (std::size_t i = 0; i < images[k].size(); ++i)
        for (int m = 0; m < M; ++m) {
          if (!changed[m]) continue;
          Projection pr = project(images[k][i], cand[m], pc.model, dom.lambda, next.lambda[k][i][m], pc.projection);
          next.lambda[k][i][m] = pr.lambda;
          next.distance[k][i][m] = pr.distance;
        }
    const int E_c_new = classification_error(next);

    if (cfg.beta.kind == BetaKind::Fitted) {
      std::vector<double> f0;
      std::vector<int> flags;
      const auto bad = misclassified(next);
      for (int k = 0; k < M; ++k)
        for (std::size_t i = 0; i < images[k].size(); ++i) {
          f0.push_back(w.f0[k][i]);
          flags.push_back(bad[k][i]);
        }
      beta = estimate_beta(f0, flags, beta);
    }

    const bool accepted = E_c_new <= E_c;
    std::ostringstream msg;
    msg << "iteration " << j << ": misclassified " << E_c_new << " (was " << E_c << "), alpha " << alpha
        << ", beta " << beta << (accepted ? "" : ", rejected");
    say(msg.str());
    if (accepted) {
      for (int m = 0; m < M; ++m)
        if (changed[m]) accepted_c.push_back(sel.atoms[m].c);
      model.patterns = std::move(cand);
      model.cross = std::move(next);
      model.trace.push_back(trace_point(j, alpha));
    }
    unchanged = accepted && E_c_new < E_c ? 0 : unchanged + 1;
    if (accepted) E_c = E_c_new;
    if (hooks.observe) hooks.observe(j, model, accepted);
  }
  return model;
}

int classify_from_distances(const std::vector<double>& distances, std::optional<double> reject_threshold) {
  if (distances.empty()) throw ContractError("no class distances");
  int best = 0;
  for (int m = 1; m < static_cast<int>(distances.size()); ++m)
    if (distances[m] < distances[best]) best = m;
  if (reject_threshold && distances[best] >= *reject_threshold) return kOutlier;
  return best;
}

Classification classify(const Image& u, const ClassModel& model, std::optional<double> reject_threshold,
                        const ProjectOptions& opts) {
  if (model.patterns.empty()) throw ContractError("class model is empty");
  Classification out;
  for (const Pattern& p : model.patterns)
    out.distances.push_back(project(u, p, model.model, model.lambda_domain, std::nullopt, opts).distance);
  out.label = classify_from_distances(out.distances, reject_threshold);
  return out;
}

std::vector<Classification> classify_all(const std::vector<Image>& images, const ClassModel& model,
                                         std::optional<double> reject_threshold, const ProjectOptions& opts) {
  if (model.patterns.empty()) throw ContractError("class model is empty");
  std::vector<Classification> out(images.size());
  if (images.empty()) return out;
  for (const Pattern& p : model.patterns) {
    if (p.empty()) {
      for (std::size_t i = 0; i < images.size(); ++i) out[i].distances.push_back(images[i].norm());
      continue;
    }
    std::vector<Projection> pr = project_all(images, pattern_renderer(p, images.front().grid), model.model,
                                             model.lambda_domain, opts);
    for (std::size_t i = 0; i < images.size(); ++i) out[i].distances.push_back(pr[i].distance);
  }
  for (Classification& c : out) c.label = classify_from_distances(c.distances, reject_threshold);
  return out;
}

}  // namespace ptm
