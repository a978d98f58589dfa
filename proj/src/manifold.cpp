#include "ptm/manifold.hpp"

#include "ptm/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace ptm {

SamplingGrid::SamplingGrid(double origin_x, double origin_y, double width, double height, int rows, int cols)
    : ox_(origin_x), oy_(origin_y), w_(width), h_(height), rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw DomainError("sampling grid needs at least one row and column");
  if (!(width > 0.0) || !(height > 0.0)) throw DomainError("sampling window must have positive size");
}

SamplingGrid SamplingGrid::centered(int rows, int cols) {
  return SamplingGrid(-0.5 * cols, -0.5 * rows, cols, rows, rows, cols);
}

Image::Image(SamplingGrid g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw DomainError("image length does not match its grid");
  if (!values.allFinite()) throw DomainError("image contains non-finite values");
}

namespace {

// Power (1 + r2)^mu with a fast path for integer exponents.
struct MotherEval {
  explicit MotherEval(const MotherFunction& m) : m_(m) {
    int k = static_cast<int>(std::lround(-m.mu));
    int_pow_ = m.kind == MotherKind::InverseMultiquadric && k >= 1 && k <= 8 && -m.mu == k ? k : 0;
  }
  double operator()(double r2) const {
    if (m_.kind == MotherKind::Gaussian) return m_.of_r2(r2);
    if (int_pow_ > 0) {
      double b = 1.0 + r2, p = b;
      for (int i = 1; i < int_pow_; ++i) p *= b;
      return 1.0 / p;
    }
    return std::pow(1.0 + r2, m_.mu);
  }
  MotherFunction m_;
  int int_pow_ = 0;
};

void transformed_coords(const TransformParams& l, const SamplingGrid& grid, std::vector<double>& nu,
                        std::vector<double>& xi) {
  const int n = grid.size();
  nu.resize(n);
  xi.resize(n);
  const double c = std::cos(l.theta()), s = std::sin(l.theta());
  const double isx = 1.0 / l.sx(), isy = 1.0 / l.sy();
  for (int r = 0; r < grid.rows(); ++r) {
    const double dy = grid.y(r) - l.ty();
    for (int col = 0; col < grid.cols(); ++col) {
      const double dx = grid.x(col) - l.tx();
      const int i = r * grid.cols() + col;
      nu[i] = (c * dx + s * dy) * isx;
      xi[i] = (-s * dx + c * dy) * isy;
    }
  }
}

void accumulate_atom_coords(const MotherEval& phi, const AtomParams& g, double coef, const std::vector<double>& nu,
                            const std::vector<double>& xi, Eigen::VectorXd& out) {
  const double c = std::cos(g.psi()), s = std::sin(g.psi());
  const double isx = 1.0 / g.sigma_x(), isy = 1.0 / g.sigma_y();
  const std::size_t n = nu.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = nu[i] - g.tau_x(), dy = xi[i] - g.tau_y();
    const double a = (c * dx + s * dy) * isx;
    const double b = (-s * dx + c * dy) * isy;
    out[static_cast<Eigen::Index>(i)] += coef * phi(a * a + b * b);
  }
}

}  // namespace

void accumulate_atom(const MotherFunction& m, const AtomParams& gamma, double coef, const TransformParams& lambda,
                     const SamplingGrid& grid, Eigen::VectorXd& out) {
  thread_local std::vector<double> nu, xi;
  transformed_coords(lambda, grid, nu, xi);
  accumulate_atom_coords(MotherEval(m), gamma, coef, nu, xi, out);
}

Eigen::VectorXd render_values(const Pattern& p, const TransformParams& lambda, const SamplingGrid& grid) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  if (p.empty()) return out;
  thread_local std::vector<double> nu, xi;
  transformed_coords(lambda, grid, nu, xi);
  MotherEval phi(p.mother());
  for (const Atom& a : p.atoms()) accumulate_atom_coords(phi, a.params, a.coefficient, nu, xi, out);
  return out;
}

Image render(const Pattern& p, const TransformParams& lambda, const SamplingGrid& grid) {
  return Image(grid, render_values(p, lambda, grid));
}

RenderFn pattern_renderer(const Pattern& p, const SamplingGrid& grid) {
  return [p, grid](const TransformParams& lambda, Eigen::VectorXd& out) { out = render_values(p, lambda, grid); };
}

double BilinearSurface::operator()(double x, double y) const {
  const SamplingGrid& g = img_.grid;
  const double fc = (x - g.origin_x()) / g.dx() - 0.5;
  const double fr = (y - g.origin_y()) / g.dy() - 0.5;
  const double c0f = std::floor(fc), r0f = std::floor(fr);
  if (c0f < -1.0 || r0f < -1.0 || c0f > g.cols() || r0f > g.rows()) return 0.0;
  const int c0 = static_cast<int>(c0f), r0 = static_cast<int>(r0f);
  const double ax = fc - c0f, ay = fr - r0f;
  auto at = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= g.rows() || c >= g.cols()) return 0.0;
    return img_.values[r * g.cols() + c];
  };
  return (1 - ay) * ((1 - ax) * at(r0, c0) + ax * at(r0, c0 + 1)) +
         ay * ((1 - ax) * at(r0 + 1, c0) + ax * at(r0 + 1, c0 + 1));
}

RenderFn bilinear_renderer(const Image& reference) {
  return [surf = BilinearSurface(reference)](const TransformParams& lambda, Eigen::VectorXd& out) {
    const SamplingGrid& g = surf.image().grid;
    out.resize(g.size());
    for (int l = 0; l < g.size(); ++l) {
      Point2 q = g.point(l);
      Point2 p = inverse_map(lambda, q.x, q.y);
      out[l] = surf(p.x, p.y);
    }
  };
}

namespace {

bool full_period(TransformModel model, const ParamDomain& d, int k) {
  return k == angle_index(model) && d.width(k) >= kTwoPi - 1e-9;
}

struct Searcher {
  const Image& u;
  const RenderFn& renderer;
  TransformModel model;
  const ParamDomain& domain;
  Eigen::VectorXd buf;
  int evals = 0;

  double dist(const Eigen::VectorXd& v) {
    renderer(from_vector(model, v), buf);
    ++evals;
    return (u.values - buf).norm();
  }
};

// Scans the lattice prod_k {center_k + offsets} and returns the best point.
void grid_scan(Searcher& s, const std::vector<int>& dims, const std::vector<std::vector<double>>& axis,
               Eigen::VectorXd& best, double& best_f) {
  std::vector<std::size_t> idx(dims.size(), 0);
  Eigen::VectorXd v = best;
  while (true) {
    for (std::size_t j = 0; j < dims.size(); ++j) v[dims[j]] = axis[j][idx[j]];
    double f = s.dist(v);
    if (f < best_f) {
      best_f = f;
      best = v;
    }
    std::size_t j = dims.size();
    while (j > 0) {
      --j;
      if (++idx[j] < axis[j].size()) break;
      idx[j] = 0;
      if (j == 0) return;
    }
    if (dims.empty()) return;
  }
}

}  // namespace

namespace {

// Lattice axes of the initial scan and the bracket radius of each dimension.
void search_axes(TransformModel model, const ParamDomain& domain, const std::vector<int>& dims,
                 const Eigen::VectorXd* hint_vec, const ProjectOptions& opts, std::vector<std::vector<double>>& axis,
                 Eigen::VectorXd& radius) {
  axis.assign(dims.size(), {});
  radius = Eigen::VectorXd::Zero(domain.dim());
  for (std::size_t j = 0; j < dims.size(); ++j) {
    const int k = dims[j];
    const double w = domain.width(k);
    if (!hint_vec) {
      const int N = std::max(2, opts.coarse_points);
      const bool periodic = full_period(model, domain, k);
      for (int q = 0; q < N; ++q)
        axis[j].push_back(periodic ? domain.lo(k) + q * w / N : domain.lo(k) + q * w / (N - 1));
      radius[k] = periodic ? w / N : w / (N - 1);
    } else {
      const int N = std::max(1, opts.local_points);
      const double r = opts.local_radius * w;
      for (int q = 0; q < N; ++q) {
        double off = N == 1 ? 0.0 : -r + 2.0 * r * q / (N - 1);
        axis[j].push_back(std::clamp((*hint_vec)[k] + off, domain.lo(k), domain.hi(k)));
      }
      radius[k] = r;
    }
  }
}

// Cyclic golden-section line searches, shrinking the bracket every sweep.
Projection refine(Searcher& s, const std::vector<int>& dims, Eigen::VectorXd best, double best_f,
                  Eigen::VectorXd radius, const ProjectOptions& opts) {
  const ParamDomain& domain = s.domain;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < opts.max_sweeps && !dims.empty(); ++sweep) {
    const double start_f = best_f;
    for (int k : dims) {
      double a = std::max(domain.lo(k), best[k] - radius[k]);
      double b = std::min(domain.hi(k), best[k] + radius[k]);
      if (!(b > a)) continue;
      Eigen::VectorXd v = best;
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      v[k] = x1;
      double f1 = s.dist(v);
      v[k] = x2;
      double f2 = s.dist(v);
      for (int it = 0; it < opts.golden_iters; ++it) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          v[k] = x1;
          f1 = s.dist(v);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          v[k] = x2;
          f2 = s.dist(v);
        }
      }
      const double xm = f1 <= f2 ? x1 : x2;
      const double fm = std::min(f1, f2);
      if (fm < best_f) {
        best_f = fm;
        best[k] = xm;
      }
      radius[k] *= 0.5;
    }
    if (start_f - best_f <= opts.tol * std::max(start_f, 1e-300)) break;
  }

  Projection out;
  out.lambda = from_vector(s.model, best);
  s.renderer(out.lambda, s.buf);
  out.residual = s.u.values - s.buf;
  out.distance = out.residual.norm();
  return out;
}

void check_domain(TransformModel model, const ParamDomain& domain) {
  if (domain.empty()) throw DomainError("projection domain is empty");
  if (domain.dim() != model_dimension(model)) throw DomainError("projection domain does not match the model");
}

}  // namespace

Projection project(const Image& u, const RenderFn& renderer, TransformModel model, const ParamDomain& domain,
                   const std::optional<TransformParams>& hint, const ProjectOptions& opts) {
  check_domain(model, domain);
  Searcher s{u, renderer, model, domain, Eigen::VectorXd(), 0};
  const std::vector<int> dims = domain.free_dims();

  Eigen::VectorXd best = hint ? domain.clamp(to_vector(model, *hint, domain)) : domain.center();
  double best_f = s.dist(best);

  std::vector<std::vector<double>> axis;
  Eigen::VectorXd radius;
  search_axes(model, domain, dims, hint ? &best : nullptr, opts, axis, radius);
  if (!dims.empty()) grid_scan(s, dims, axis, best, best_f);
  return refine(s, dims, best, best_f, radius, opts);
}

std::vector<Projection> project_all(const std::vector<Image>& images, const RenderFn& renderer,
                                    TransformModel model, const ParamDomain& domain, const ProjectOptions& opts) {
  check_domain(model, domain);
  const std::vector<int> dims = domain.free_dims();
  std::vector<std::vector<double>> axis;
  Eigen::VectorXd radius;
  search_axes(model, domain, dims, nullptr, opts, axis, radius);

  // Same scan as project() without a hint, rendering each lattice point once.
  const std::size_t n = images.size();
  std::vector<Eigen::VectorXd> best(n, domain.center());
  std::vector<double> best_f(n);
  Eigen::VectorXd buf;
  renderer(from_vector(model, domain.center()), buf);
  for (std::size_t i = 0; i < n; ++i) best_f[i] = (images[i].values - buf).norm();
  if (!dims.empty()) {
    std::vector<std::size_t> idx(dims.size(), 0);
    Eigen::VectorXd v = domain.center();
    for (bool more = true; more;) {
      for (std::size_t j = 0; j < dims.size(); ++j) v[dims[j]] = axis[j][idx[j]];
      renderer(from_vector(model, v), buf);
      for (std::size_t i = 0; i < n; ++i) {
        const double f = (images[i].values - buf).norm();
        if (f < best_f[i]) {
          best_f[i] = f;
          best[i] = v;
        }
      }
      more = false;
      for (std::size_t j = dims.size(); j > 0;) {
        --j;
        if (++idx[j] < axis[j].size()) {
          more = true;
          break;
        }
        idx[j] = 0;
      }
    }
  }

  std::vector<Projection> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Searcher s{images[i], renderer, model, domain, Eigen::VectorXd(), 0};
    out.push_back(refine(s, dims, best[i], best_f[i], radius, opts));
  }
  return out;
}

Projection project(const Image& u, const Pattern& p, TransformModel model, const ParamDomain& domain,
                   const std::optional<TransformParams>& hint, const ProjectOptions& opts) {
  if (p.empty()) {
    if (domain.empty()) throw DomainError("projection domain is empty");
    Projection out;
    out.lambda = hint ? *hint : from_vector(model, domain.center());
    out.residual = u.values;
    out.distance = u.values.norm();
    return out;
  }
  return project(u, pattern_renderer(p, u.grid), model, domain, hint, opts);
}

namespace {

struct FdStencil {
  int dim;
  TransformParams plus, minus;
  double denom;
  bool one_sided;
};

std::vector<FdStencil> fd_stencils(TransformModel model, const TransformParams& lambda, const ParamDomain& domain) {
  std::vector<FdStencil> out;
  const Eigen::VectorXd v = to_vector(model, lambda, domain);
  for (int k : domain.free_dims()) {
    const double h = 1e-3 * domain.width(k);
    Eigen::VectorXd vp = v, vm = v;
    bool one = false;
    double denom = 2.0 * h;
    const bool periodic = k == angle_index(model);
    if (!periodic && v[k] + h > domain.hi(k)) {
      vp[k] = v[k];
      vm[k] = v[k] - h;
      denom = h;
      one = true;
    } else if (!periodic && v[k] - h < domain.lo(k)) {
      vp[k] = v[k] + h;
      vm[k] = v[k];
      denom = h;
      one = true;
    } else {
      vp[k] += h;
      vm[k] -= h;
    }
    out.push_back({k, from_vector(model, vp), from_vector(model, vm), denom, one});
  }
  return out;
}

}  // namespace

TangentMatrix tangent_matrix(const RenderFn& renderer, TransformModel model, const TransformParams& lambda,
                             const ParamDomain& domain) {
  TangentMatrix T;
  auto st = fd_stencils(model, lambda, domain);
  Eigen::VectorXd a, b;
  for (std::size_t j = 0; j < st.size(); ++j) {
    renderer(st[j].plus, a);
    renderer(st[j].minus, b);
    if (j == 0) T.columns.resize(a.size(), static_cast<Eigen::Index>(st.size()));
    T.columns.col(static_cast<Eigen::Index>(j)) = (a - b) / st[j].denom;
    T.dims.push_back(st[j].dim);
    T.one_sided = T.one_sided || st[j].one_sided;
  }
  return T;
}

TangentMatrix tangent_matrix(const Pattern& p, const TransformParams& lambda, const SamplingGrid& grid,
                             TransformModel model, const ParamDomain& domain) {
  return tangent_matrix(pattern_renderer(p, grid), model, lambda, domain);
}

TangentResidual tangent_residual_from(const Eigen::VectorXd& w, const Eigen::MatrixXd& T) {
  TangentResidual out;
  if (T.cols() == 0) {
    out.residual = w;
  } else {
    Eigen::MatrixXd G = T.transpose() * T;
    const double eps = 1e-10 * G.trace() / static_cast<double>(T.cols());
    G.diagonal().array() += eps;
    Eigen::VectorXd z = G.ldlt().solve(T.transpose() * w);
    out.residual = w - T * z;
  }
  out.distance = out.residual.norm();
  return out;
}

TangentResidual tangent_residual(const Image& u, const Pattern& p, const TransformParams& lambda,
                                 TransformModel model, const ParamDomain& domain) {
  Eigen::VectorXd w = u.values - render_values(p, lambda, u.grid);
  return tangent_residual_from(w, tangent_matrix(p, lambda, u.grid, model, domain).columns);
}

double total_sq_tangent_error(const std::vector<Image>& images, const Pattern& p,
                              const std::vector<TransformParams>& lambdas, TransformModel model,
                              const ParamDomain& domain) {
  if (images.size() != lambdas.size()) throw ContractError("one transform per image is required");
  double s = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    double d = tangent_residual(images[i], p, lambdas[i], model, domain).distance;
    s += d * d;
  }
  return s;
}

IncrementalTangentError::IncrementalTangentError(const Pattern& base, std::vector<Term> terms, TransformModel model,
                                                 const ParamDomain& domain)
    : mother_(base.mother()), terms_(std::move(terms)), model_(model), domain_(domain) {
  if (terms_.empty()) return;
  grid_ = terms_.front().image->grid;
  cache_.reserve(terms_.size());
  for (const Term& t : terms_) {
    if (!(t.image->grid == grid_)) throw ContractError("images do not share one grid");
    Cache c;
    c.w = t.image->values - render_values(base, t.lambda, grid_);
    c.T = tangent_matrix(base, t.lambda, grid_, model_, domain_).columns;
    cache_.push_back(std::move(c));
  }
}

double IncrementalTangentError::base_value() const {
  double s = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    double d = tangent_residual_from(cache_[i].w, cache_[i].T).distance;
    s += terms_[i].weight * d * d;
  }
  return s;
}

double IncrementalTangentError::value(const AtomParams& gamma, double c) const {
  double s = 0.0;
  const int n = grid_.size();
  Eigen::VectorXd w(n), a(n), b(n);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Cache& cc = cache_[i];
    w = cc.w;
    accumulate_atom(mother_, gamma, -c, terms_[i].lambda, grid_, w);
    Eigen::MatrixXd T = cc.T;
    auto st = fd_stencils(model_, terms_[i].lambda, domain_);
    for (std::size_t j = 0; j < st.size(); ++j) {
      a.setZero();
      b.setZero();
      accumulate_atom(mother_, gamma, c, st[j].plus, grid_, a);
      accumulate_atom(mother_, gamma, c, st[j].minus, grid_, b);
      T.col(static_cast<Eigen::Index>(j)) += (a - b) / st[j].denom;
    }
    double d = tangent_residual_from(w, T).distance;
    s += terms_[i].weight * d * d;
  }
  return s;
}

}  // namespace ptm
