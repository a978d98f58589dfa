#include "ptm/optimize.hpp"

#include "ptm/error.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <map>
#include <vector>

namespace ptm {

void SolverOptions::validate() const {
  if (max_iters < 1 || vertex_budget < 1 || !(tol_f > 0.0) || !(fd_step > 0.0) || max_ls_steps < 1)
    throw DomainError("solver options must be positive");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::Feasible: return "feasible";
    case StopReason::VertexBudget: return "vertex_budget";
    case StopReason::MaxIters: return "max_iters";
  }
  return "?";
}

SearchResult coarse_search(const Objective& objective, const ParamDomain& domain, int pts_per_dim) {
  if (pts_per_dim < 2) throw DomainError("coarse search needs at least two points per dimension");
  if (domain.empty()) throw DomainError("coarse search domain is empty");
  const std::vector<int> dims = domain.free_dims();
  SearchResult best{domain.lo(), std::numeric_limits<double>::infinity()};
  Eigen::VectorXd x = domain.lo();
  std::vector<int> idx(dims.size(), 0);
  while (true) {
    for (std::size_t j = 0; j < dims.size(); ++j)
      x[dims[j]] = domain.lo(dims[j]) + domain.width(dims[j]) * idx[j] / (pts_per_dim - 1);
    const double f = objective(x);
    if (f < best.f) best = {x, f};
    std::size_t j = dims.size();
    bool done = true;
    while (j > 0) {
      --j;
      if (++idx[j] < pts_per_dim) {
        done = false;
        break;
      }
      idx[j] = 0;
    }
    if (done) break;
  }
  if (!std::isfinite(best.f)) best = {domain.lo(), objective(domain.lo())};
  return best;
}

namespace {

constexpr int kMaxConstraints = 128;
using Active = std::bitset<kMaxConstraints>;

struct Vertex {
  Eigen::VectorXd y;  // free coordinates normalized to [-1, 1]
  Wide t;
  Active active;
  DcValue parts;      // at x(y)
};

struct BoxMap {
  std::vector<int> dims;
  Eigen::VectorXd base, center, half;

  Eigen::VectorXd to_x(const Eigen::VectorXd& y) const {
    Eigen::VectorXd x = base;
    for (std::size_t j = 0; j < dims.size(); ++j) {
      const int k = dims[j];
      x[k] = std::clamp(center[k] + half[k] * y[static_cast<Eigen::Index>(j)], center[k] - half[k],
                        center[k] + half[k]);
    }
    return x;
  }
  Eigen::VectorXd to_y(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(dims.size());
    for (std::size_t j = 0; j < dims.size(); ++j) {
      const int k = dims[j];
      y[static_cast<Eigen::Index>(j)] = std::clamp((x[k] - center[k]) / half[k], -1.0, 1.0);
    }
    return y;
  }
};

struct Cut {
  Wide G;
  Eigen::VectorXd a;
  Eigen::VectorXd y0;
  double eps;

  Wide residual(const Eigen::VectorXd& y, Wide t) const {
    Wide s = G;
    for (Eigen::Index k = 0; k < a.size(); ++k) s += Wide(a[k]) * (y[k] - y0[k]);
    return s - t;
  }
};

}  // namespace

CuttingPlaneResult cutting_plane_min(const DcFunction& f, const ParamDomain& domain, const Eigen::VectorXd& x0,
                                     const SolverOptions& opts) {
  opts.validate();
  if (domain.dim() != f.dim()) throw DomainError("solver domain does not match the function");
  if (!domain.contains(x0, 1e-12)) throw DomainError("start point lies outside the domain");

  BoxMap map;
  map.dims = domain.free_dims();
  map.base = domain.clamp(x0);
  map.center = domain.center();
  map.half = 0.5 * domain.widths();
  const int n = static_cast<int>(map.dims.size());
  const int D = n + 1;

  CuttingPlaneResult res;
  res.x = map.base;
  const DcValue p0 = f.parts(res.x);
  res.f = p0.f();
  res.lower_bound = res.f;
  if (n == 0) {
    res.reason = StopReason::Converged;
    return res;
  }
  const int max_cuts = kMaxConstraints - 2 * n - 2;
  if (max_cuts < 1) throw DomainError("too many free dimensions for the cutting-plane solver");
  const int max_iters = std::min(opts.max_iters, max_cuts);

  std::map<std::vector<double>, DcValue> cache;
  auto eval = [&](const Eigen::VectorXd& y) -> DcValue {
    std::vector<double> key(y.data(), y.data() + y.size());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    DcValue v = f.parts(map.to_x(y));
    cache.emplace(std::move(key), v);
    return v;
  };
  auto consider = [&](const Eigen::VectorXd& y, const DcValue& v) {
    if (v.f() < res.f) {
      res.f = v.f();
      res.x = map.to_x(y);
    }
  };

  // Tangent plane of g at y in normalized coordinates.
  const double hstep = 2.0 * opts.fd_step;
  auto make_cut = [&](const Eigen::VectorXd& y, Wide G) {
    Cut c;
    c.G = G;
    c.y0 = y;
    c.a.resize(n);
    Eigen::VectorXd yp = y, ym = y;
    for (int j = 0; j < n; ++j) {
      double up = std::min(1.0, y[j] + hstep), dn = std::max(-1.0, y[j] - hstep);
      yp[j] = up;
      ym[j] = dn;
      const Wide gp = f.parts(map.to_x(yp)).g, gm = f.parts(map.to_x(ym)).g;
      c.a[j] = ((gp - gm) / Wide(up - dn)).to_double();
      yp[j] = y[j];
      ym[j] = y[j];
    }
    c.eps = 1e-12 * (std::abs(G.to_double()) + c.a.cwiseAbs().sum() + 1.0);
    return c;
  };

  // Initial polytope: the box times [t_lo, t_hi].
  const Eigen::VectorXd y0 = map.to_y(res.x);
  const Cut first = make_cut(y0, p0.g);
  Wide t_lo = first.G;
  for (int j = 0; j < n; ++j) t_lo += Wide(std::min(first.a[j] * (-1.0 - y0[j]), first.a[j] * (1.0 - y0[j])));
  t_lo -= 1e-6 * (std::abs(t_lo.to_double()) + 1.0);

  std::vector<Vertex> V;
  Wide t_hi = t_lo;
  const int corners = 1 << n;
  V.reserve(static_cast<std::size_t>(2 * corners));
  for (int m = 0; m < corners; ++m) {
    Vertex v;
    v.y.resize(n);
    for (int j = 0; j < n; ++j) {
      const bool upper = (m >> j) & 1;
      v.y[j] = upper ? 1.0 : -1.0;
      v.active.set(2 * j + (upper ? 1 : 0));
    }
    v.parts = eval(v.y);
    consider(v.y, v.parts);
    if (v.parts.g > t_hi) t_hi = v.parts.g;
    V.push_back(v);
  }
  t_hi += 1e-6 * (std::abs(t_hi.to_double()) + 1.0);
  for (int m = 0; m < corners; ++m) {
    Vertex top = V[m];
    V[m].t = t_lo;
    V[m].active.set(2 * n);
    top.t = t_hi;
    top.active.set(2 * n + 1);
    V.push_back(top);
  }

  int next_constraint = 2 * n + 2;
  auto add_cut = [&](const Cut& cut) {
    const int ci = next_constraint++;
    std::vector<Wide> r(V.size());
    std::vector<int> removed, kept;
    for (std::size_t i = 0; i < V.size(); ++i) {
      r[i] = cut.residual(V[i].y, V[i].t);
      const double rv = r[i].to_double();
      if (rv > cut.eps)
        removed.push_back(static_cast<int>(i));
      else if (rv < -cut.eps)
        kept.push_back(static_cast<int>(i));
      else
        V[i].active.set(ci);
    }
    std::vector<Vertex> fresh;
    for (int ri : removed) {
      for (int ki : kept) {
        const Active I = V[ri].active & V[ki].active;
        if (static_cast<int>(I.count()) < D - 1) continue;
        bool adjacent = true;
        for (std::size_t w = 0; w < V.size() && adjacent; ++w) {
          if (static_cast<int>(w) == ri || static_cast<int>(w) == ki) continue;
          if ((I & ~V[w].active).none()) adjacent = false;
        }
        if (!adjacent) continue;
        const double s = (r[ri] / (r[ri] - r[ki])).to_double();
        Vertex nv;
        nv.y = V[ri].y + s * (V[ki].y - V[ri].y);
        nv.t = V[ri].t + Wide(s) * (V[ki].t - V[ri].t);
        nv.active = I;
        nv.active.set(ci);
        fresh.push_back(std::move(nv));
      }
    }
    std::vector<Vertex> next;
    next.reserve(V.size() - removed.size() + fresh.size());
    std::size_t q = 0;
    for (std::size_t i = 0; i < V.size(); ++i) {
      if (q < removed.size() && removed[q] == static_cast<int>(i)) {
        ++q;
        continue;
      }
      next.push_back(std::move(V[i]));
    }
    for (Vertex& v : fresh) {
      v.parts = eval(v.y);
      consider(v.y, v.parts);
      next.push_back(std::move(v));
    }
    V = std::move(next);
  };

  add_cut(first);
  res.reason = StopReason::MaxIters;
  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;
    std::size_t best = 0;
    Wide best_val = V[0].t - V[0].parts.h;
    for (std::size_t i = 1; i < V.size(); ++i) {
      const Wide val = V[i].t - V[i].parts.h;
      if (val < best_val) {
        best_val = val;
        best = i;
      }
    }
    res.lower_bound = best_val;
    const double ub = res.f.to_double();
    if ((res.f - best_val).to_double() <= opts.tol_f * (1.0 + std::abs(ub))) {
      res.reason = StopReason::Converged;
      break;
    }
    const Vertex& vb = V[best];
    const double gap_t = (vb.parts.g - vb.t).to_double();
    const Cut cut = make_cut(vb.y, vb.parts.g);
    if (gap_t <= cut.eps) {
      res.reason = StopReason::Feasible;
      break;
    }
    if (static_cast<int>(V.size()) >= opts.vertex_budget) {
      res.reason = StopReason::VertexBudget;
      break;
    }
    add_cut(cut);
  }
  res.vertices = static_cast<int>(V.size());
  return res;
}

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

Eigen::VectorXd fd_gradient(const Objective& objective, const Eigen::VectorXd& x, const ParamDomain& domain,
                            double fd_step) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (int k : domain.free_dims()) {
    const double h = fd_step * domain.width(k);
    const double up = std::min(domain.hi(k), x[k] + h), dn = std::max(domain.lo(k), x[k] - h);
    xp[k] = up;
    xm[k] = dn;
    g[k] = (objective(xp) - objective(xm)) / (up - dn);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return g;
}

DescentResult gradient_descent(const Objective& objective, const Eigen::VectorXd& x0, const ParamDomain& domain,
                               const SolverOptions& opts) {
  opts.validate();
  if (!domain.contains(x0, 1e-12)) throw DomainError("start point lies outside the domain");
  const std::vector<int> dims = domain.free_dims();
  const Eigen::VectorXd c = domain.center(), hw = 0.5 * domain.widths();

  DescentResult res{domain.clamp(x0), 0.0, 0};
  res.f = objective(res.x);
  if (dims.empty()) return res;
  const Eigen::Index n = static_cast<Eigen::Index>(dims.size());

  auto to_x = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd x = res.x;
    for (Eigen::Index j = 0; j < n; ++j) x[dims[j]] = c[dims[j]] + hw[dims[j]] * clamp_unit(y[j]);
    return x;
  };
  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) y[j] = clamp_unit((res.x[dims[j]] - c[dims[j]]) / hw[dims[j]]);

  double step = 0.25;
  for (int it = 0; it < opts.max_iters; ++it) {
    res.iterations = it + 1;
    // Gradient in normalized coordinates.
    Eigen::VectorXd grad(n);
    const double h = 2.0 * opts.fd_step;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd yp = y, ym = y;
      yp[j] = clamp_unit(y[j] + h);
      ym[j] = clamp_unit(y[j] - h);
      grad[j] = (objective(to_x(yp)) - objective(to_x(ym))) / (yp[j] - ym[j]);
    }
    // Projected direction: drop components pushing against active bounds.
    Eigen::VectorXd d = -grad;
    for (Eigen::Index j = 0; j < n; ++j)
      if ((y[j] >= 1.0 && d[j] > 0.0) || (y[j] <= -1.0 && d[j] < 0.0)) d[j] = 0.0;
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0) || !std::isfinite(dmax)) break;

    double s = step / dmax;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_ls_steps; ++ls) {
      Eigen::VectorXd yn = (y + s * d).unaryExpr([](double v) { return clamp_unit(v); });
      const double fn = objective(to_x(yn));
      if (fn <= res.f + 1e-4 * grad.dot(yn - y) && fn < res.f) {
        const double drop = res.f - fn;
        y = yn;
        res.x = to_x(y);
        res.f = fn;
        accepted = true;
        step = std::min(1.0, 2.0 * s * dmax);
        if (drop <= opts.tol_f * (1.0 + std::abs(fn))) it = opts.max_iters;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
  }
  return res;
}

}  // namespace ptm
