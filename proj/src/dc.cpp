#include "ptm/dc.hpp"

#include "ptm/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ptm {

DcValue dc_scale(const DcValue& a, double coef) {
  if (coef >= 0.0) return {a.g * coef, a.h * coef};
  return {a.h * (-coef), a.g * (-coef)};
}

DcValue dc_add(const DcValue& a, const DcValue& b) { return {a.g + b.g, a.h + b.h}; }

DcValue dc_mul(const DcValue& a, const DcValue& b) {
  const Wide gg = a.g + b.g, hh = a.h + b.h, gh = a.g + b.h, hg = b.g + a.h;
  return {0.5 * (gg * gg + hh * hh), 0.5 * (gh * gh + hg * hg)};
}

DcValue dc_compose(const DcValue& a, Wide q_of_f, double K) {
  const Wide s = K * (a.g + a.h);
  return {q_of_f + s, s};
}

namespace {

using Vec = Eigen::VectorXd;

// Visits a lattice over the free dimensions of the box with at most `cap`
// points; pinned dimensions stay at their value.
template <class Fn>
void for_each_grid_point(const ParamDomain& d, int per_dim, int cap, Fn&& fn, Vec* spacing = nullptr) {
  const std::vector<int> dims = d.free_dims();
  int m = per_dim;
  if (!dims.empty()) {
    m = static_cast<int>(std::floor(std::pow(static_cast<double>(cap), 1.0 / dims.size()) + 1e-9));
    m = std::clamp(m, 2, per_dim);
  }
  if (spacing) {
    *spacing = Vec::Zero(d.dim());
    for (int k : dims) (*spacing)[k] = d.width(k) / (m - 1);
  }
  Vec x = d.center();
  std::vector<int> idx(dims.size(), 0);
  while (true) {
    for (std::size_t j = 0; j < dims.size(); ++j) x[dims[j]] = d.lo(dims[j]) + d.width(dims[j]) * idx[j] / (m - 1);
    fn(x);
    std::size_t j = dims.size();
    bool done = true;
    while (j > 0) {
      --j;
      if (++idx[j] < m) {
        done = false;
        break;
      }
      idx[j] = 0;
    }
    if (done) return;
  }
}

constexpr int kSampleCap = 4096;

class ConstantNode final : public DcNode {
 public:
  explicit ConstantNode(double v) : v_(v) {}
  DcValue parts(const Vec&) const override { return {std::max(v_, 0.0), std::max(-v_, 0.0)}; }
  double value(const Vec&) const override { return v_; }

 private:
  double v_;
};

class SquareSplitNode final : public DcNode {
 public:
  SquareSplitNode(int k, double center, double half) : k_(k), c_(center), hw_(half) {}
  DcValue parts(const Vec& x) const override {
    if (hw_ == 0.0) {
      const double v = x[k_];
      return {std::max(v, 0.0), std::max(-v, 0.0)};
    }
    const Wide u = (Wide(x[k_]) - c_) / Wide(hw_);
    const Wide up = u + 1.0;
    DcValue out{0.5 * (up * up), 0.5 * (u * u + 1.0)};
    out = dc_scale(out, hw_);
    if (c_ >= 0.0)
      out.g += c_;
    else
      out.h += -c_;
    return out;
  }
  double value(const Vec& x) const override { return x[k_]; }

 private:
  int k_;
  double c_, hw_;
};

class LinearNode final : public DcNode {
 public:
  explicit LinearNode(std::vector<std::pair<double, DcFunction>> terms) : terms_(std::move(terms)) {}
  DcValue parts(const Vec& x) const override {
    DcValue acc{0.0, 0.0};
    for (const auto& [c, f] : terms_) acc = dc_add(acc, dc_scale(f.parts(x), c));
    return acc;
  }
  double value(const Vec& x) const override {
    double s = 0.0;
    for (const auto& [c, f] : terms_) s += c * f.value(x);
    return s;
  }

 private:
  std::vector<std::pair<double, DcFunction>> terms_;
};

class ProductNode final : public DcNode {
 public:
  ProductNode(DcFunction a, DcFunction b) : a_(std::move(a)), b_(std::move(b)) {}
  DcValue parts(const Vec& x) const override { return dc_mul(a_.parts(x), b_.parts(x)); }
  double value(const Vec& x) const override { return a_.value(x) * b_.value(x); }

 private:
  DcFunction a_, b_;
};

class ComposeNode final : public DcNode {
 public:
  ComposeNode(ConvexScalar q, DcFunction f, double K) : q_(std::move(q)), f_(std::move(f)), K_(K) {}
  DcValue parts(const Vec& x) const override {
    DcValue a = f_.parts(x);
    return dc_compose(a, q_.q(a.f().to_double()), K_);
  }
  double value(const Vec& x) const override { return q_.q(f_.value(x)); }

 private:
  ConvexScalar q_;
  DcFunction f_;
  double K_;
};

class ShiftNode final : public DcNode {
 public:
  ShiftNode(DcFunction f, double s) : f_(std::move(f)), s_(s) {}
  DcValue parts(const Vec& x) const override {
    DcValue a = f_.parts(x);
    return {a.g + s_, a.h + s_};
  }
  double value(const Vec& x) const override { return f_.value(x); }

 private:
  DcFunction f_;
  double s_;
};

Vec metric_weights(const ParamDomain& d, QuadraticMetric metric) {
  Vec w = Vec::Zero(d.dim());
  for (int k : d.free_dims()) {
    if (metric == QuadraticMetric::Raw) {
      w[k] = 1.0;
    } else {
      const double hw = 0.5 * d.width(k);
      w[k] = 1.0 / (hw * hw);
    }
  }
  return w;
}

class QuadSplitNode final : public DcNode {
 public:
  QuadSplitNode(ScalarField f, Vec center, Vec weights, double rho, double shift)
      : f_(std::move(f)), c_(std::move(center)), w_(std::move(weights)), rho_(rho), shift_(shift) {}
  DcValue parts(const Vec& x) const override {
    Wide q = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (w_[k] == 0.0) continue;
      const Wide d = Wide(x[k]) - c_[k];
      q += d * d * w_[k];
    }
    const Wide r = 0.5 * rho_ * q + shift_;
    return {Wide(f_(x)) + r, r};
  }
  double value(const Vec& x) const override { return f_(x); }

 private:
  ScalarField f_;
  Vec c_, w_;
  double rho_, shift_;
};

void require_same_domain(const ParamDomain& a, const ParamDomain& b) {
  if (!(a == b)) throw DomainError("DC terms are defined on different domains");
}

// Lower bound of a convex part over the box from grid samples and their
// one-sided slopes toward the nearest sample.
double sampled_lower_bound(const std::function<double(const Vec&)>& part, const ParamDomain& d) {
  Vec sp;
  double lb = std::numeric_limits<double>::infinity();
  const std::vector<int> dims = d.free_dims();
  for_each_grid_point(
      d, 50, kSampleCap,
      [&](const Vec& x) {
        const double v = part(x);
        double slope = 0.0;
        Vec y = x;
        for (int k : dims) {
          const double h = 1e-6 * d.width(k);
          y[k] = x[k] + h;
          const double fp = part(y);
          y[k] = x[k] - h;
          const double fm = part(y);
          y[k] = x[k];
          slope += std::abs(fp - fm) / (2.0 * h) * 0.5 * sp[k];
        }
        if (!std::isfinite(v) || !std::isfinite(slope)) throw NumericalError("non-finite sample of a DC part");
        lb = std::min(lb, v - slope);
      },
      &sp);
  return lb;
}

}  // namespace

DcFunction dc_constant(const ParamDomain& domain, double value) {
  if (!std::isfinite(value)) throw DomainError("constant is not finite");
  return DcFunction(std::make_shared<ConstantNode>(value), domain, true);
}

DcFunction dc_scalar_square_split(const ParamDomain& domain, int k) {
  if (k < 0 || k >= domain.dim()) throw ContractError("coordinate index out of range");
  return DcFunction(std::make_shared<SquareSplitNode>(k, 0.0, 1.0), domain, true);
}

DcFunction dc_affine_coordinate(const ParamDomain& domain, int k) {
  if (k < 0 || k >= domain.dim()) throw ContractError("coordinate index out of range");
  const double hw = 0.5 * domain.width(k);
  return DcFunction(std::make_shared<SquareSplitNode>(k, domain.center()[k], hw), domain, true);
}

DcFunction dc_linear_combination(const std::vector<std::pair<double, DcFunction>>& terms) {
  if (terms.empty()) throw ContractError("linear combination needs at least one term");
  bool nonneg = true;
  for (const auto& [c, f] : terms) {
    require_same_domain(terms.front().second.domain(), f.domain());
    if (!std::isfinite(c)) throw DomainError("coefficient is not finite");
    nonneg = nonneg && f.parts_nonnegative();
  }
  return DcFunction(std::make_shared<LinearNode>(terms), terms.front().second.domain(), nonneg);
}

DcFunction dc_product(const DcFunction& f1, const DcFunction& f2) {
  if (!f1.parts_nonnegative() || !f2.parts_nonnegative())
    throw ContractError("product rule requires nonnegative convex parts");
  require_same_domain(f1.domain(), f2.domain());
  return DcFunction(std::make_shared<ProductNode>(f1, f2), f1.domain(), true);
}

ConvexScalar convex_identity() {
  return {[](double t) { return t; }, [](double) { return 1.0; }, 1.0};
}

ConvexScalar convex_scaled_exp(double a, double r) {
  if (!(a > 0.0) || !(r > 0.0)) throw DomainError("exp factor and rate must be positive");
  return {[a, r](double t) { return a * std::exp(-r * t); }, [a, r](double t) { return -a * r * std::exp(-r * t); },
          a * r};
}

ConvexScalar convex_power(double mu) {
  if (!(mu < 0.0)) throw DomainError("power exponent must be negative");
  return {[mu](double t) { return std::pow(1.0 + t, mu); },
          [mu](double t) { return mu * std::pow(1.0 + t, mu - 1.0); }, -mu};
}

DcFunction dc_compose_convex(const ConvexScalar& q, const DcFunction& f, std::optional<double> K) {
  double k = 0.0;
  if (K) {
    k = *K;
  } else if (q.slope_bound) {
    k = 1.1 * *q.slope_bound;
  } else {
    double m = 0.0;
    for_each_grid_point(f.domain(), 50, kSampleCap, [&](const Vec& x) {
      const double d = q.dq(f.parts(x).f().to_double());
      if (!std::isfinite(d)) throw NumericalError("non-finite derivative while bounding K");
      m = std::max(m, std::abs(d));
    });
    k = 1.1 * m;
  }
  if (!(k > 0.0) || !std::isfinite(k)) k = std::max(k, 1e-12);
  return DcFunction(std::make_shared<ComposeNode>(q, f, k), f.domain(), true);
}

DcFunction dc_shift_nonnegative(const DcFunction& f) {
  const double lg = sampled_lower_bound([&](const Vec& x) { return f.g(x).to_double(); }, f.domain());
  const double lh = sampled_lower_bound([&](const Vec& x) { return f.h(x).to_double(); }, f.domain());
  const double s = std::max(0.0, -std::min(lg, lh)) + 1e-6;
  return DcFunction(std::make_shared<ShiftNode>(f, s), f.domain(), true);
}

double estimate_hessian_bound(const ScalarField& f, const ParamDomain& domain, QuadraticMetric metric, int per_dim) {
  const std::vector<int> dims = domain.free_dims();
  const int d = static_cast<int>(dims.size());
  if (d == 0) return 1e-12;
  // Step in metric coordinates, mapped back to the raw coordinate.
  Vec step(domain.dim());
  for (int k : dims) step[k] = metric == QuadraticMetric::Raw ? 1e-3 * domain.width(k) : 1e-3 * 0.5 * domain.width(k);
  double best = 0.0;
  Eigen::MatrixXd H(d, d);
  for_each_grid_point(domain, per_dim, 20000, [&](const Vec& x0) {
    Vec x = x0;
    const double f0 = f(x);
    for (int a = 0; a < d; ++a) {
      const int ka = dims[a];
      const double ha = step[ka];
      x[ka] = x0[ka] + ha;
      const double fp = f(x);
      x[ka] = x0[ka] - ha;
      const double fm = f(x);
      x[ka] = x0[ka];
      H(a, a) = (fp - 2.0 * f0 + fm) / (ha * ha);
      for (int b = a + 1; b < d; ++b) {
        const int kb = dims[b];
        const double hb = step[kb];
        double s = 0.0;
        for (int sa : {1, -1})
          for (int sb : {1, -1}) {
            x[ka] = x0[ka] + sa * ha;
            x[kb] = x0[kb] + sb * hb;
            s += sa * sb * f(x);
          }
        x[ka] = x0[ka];
        x[kb] = x0[kb];
        H(a, b) = H(b, a) = s / (4.0 * ha * hb);
      }
    }
    if (metric == QuadraticMetric::Normalized) {
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) H(a, b) *= 0.25 * domain.width(dims[a]) * domain.width(dims[b]);
    }
    if (!H.allFinite()) throw NumericalError("non-finite Hessian sample");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues().cwiseAbs().maxCoeff());
  });
  return std::max(1.5 * best, 1e-12);
}

DcFunction dc_smooth_quadratic_split(const ScalarField& f, const ParamDomain& domain, std::optional<double> rho,
                                     QuadraticMetric metric, bool shift_nonnegative) {
  double r = rho ? *rho : estimate_hessian_bound(f, domain, metric);
  if (!(r > 0.0)) throw DomainError("curvature bound must be positive");
  DcFunction out(std::make_shared<QuadSplitNode>(f, domain.center(), metric_weights(domain, metric), r, 0.0), domain,
                 false);
  if (!shift_nonnegative) return out;
  const double lg = sampled_lower_bound([&](const Vec& x) { return out.g(x).to_double(); }, domain);
  const double s = std::max(0.0, -lg) + 1e-6;
  return DcFunction(std::make_shared<QuadSplitNode>(f, domain.center(), metric_weights(domain, metric), r, s), domain,
                    true);
}

// ---------------------------------------------------------------------------
// Pixel kernel. Variables: 0 psi, 1 tau_x, 2 tau_y, 3 sigma_x, 4 sigma_y.

namespace {
constexpr int kTrigScaleVar[4] = {3, 3, 4, 4};
constexpr bool kTrigIsCos[4] = {true, false, true, false};

double trig_value(int which, double psi, double sigma) {
  return (kTrigIsCos[which] ? std::cos(psi) : std::sin(psi)) / sigma;
}
}  // namespace

AtomPixelKernel::AtomPixelKernel(const MotherFunction& mother, const ParamDomain& gamma_domain)
    : mother_(mother), domain_(gamma_domain) {
  if (gamma_domain.dim() != AtomParams::kDim) throw DomainError("atom domain must have five dimensions");
  if (!(gamma_domain.lo(3) > 0.0) || !(gamma_domain.lo(4) > 0.0))
    throw DomainError("atom domain admits non-positive scales");
  center_ = gamma_domain.center();
  half_ = 0.5 * gamma_domain.widths();
  for (int w = 0; w < 4; ++w) {
    const int sv = kTrigScaleVar[w];
    Vec lo(2), hi(2);
    lo << gamma_domain.lo(0), gamma_domain.lo(sv);
    hi << gamma_domain.hi(0), gamma_domain.hi(sv);
    ParamDomain sub(lo, hi);
    rho_[w] = estimate_hessian_bound([w](const Vec& v) { return trig_value(w, v[0], v[1]); }, sub,
                                     QuadraticMetric::Normalized);
    // |cos|, |sin| <= 1, so the term is bounded below by -1/sigma_lo.
    shift_[w] = 1.0 / gamma_domain.lo(sv) + 1e-6;
  }
  if (mother.kind == MotherKind::Gaussian) {
    K1_ = 1.1 * mother.peak();
    K2_ = 1.1 * 2.0 * mother.peak() * mother.peak();
  } else {
    K1_ = 1.1 * std::abs(mother.mu);
    K2_ = 1.1 * 2.0 * std::abs(mother.mu);
  }
}

DcValue AtomPixelKernel::trig(int which, double value, const Vec& gamma) const {
  const int sv = kTrigScaleVar[which];
  Wide q = 0.0;
  for (int k : {0, sv}) {
    if (half_[k] == 0.0) continue;
    const Wide u = (Wide(gamma[k]) - center_[k]) / Wide(half_[k]);
    q += u * u;
  }
  const Wide r = 0.5 * rho_[which] * q + shift_[which];
  return {Wide(value) + r, r};
}

DcValue AtomPixelKernel::coord(int k, double value) const {
  if (half_[k] == 0.0) return {std::max(value, 0.0), std::max(-value, 0.0)};
  const Wide u = (Wide(value) - center_[k]) / Wide(half_[k]);
  const Wide up = u + 1.0;
  DcValue out = dc_scale({0.5 * (up * up), 0.5 * (u * u + 1.0)}, half_[k]);
  if (center_[k] >= 0.0)
    out.g += center_[k];
  else
    out.h += -center_[k];
  return out;
}

AtomPixelKernel::Pre AtomPixelKernel::precompute(const Vec& gamma) const {
  Pre p;
  const double psi = gamma[0];
  p.A1 = trig(0, trig_value(0, psi, gamma[3]), gamma);
  p.A2 = trig(1, trig_value(1, psi, gamma[3]), gamma);
  p.B1 = trig(2, trig_value(2, psi, gamma[4]), gamma);
  p.B2 = trig(3, trig_value(3, psi, gamma[4]), gamma);
  const DcValue tx = coord(1, gamma[1]), ty = coord(2, gamma[2]);
  p.P1 = dc_mul(p.A1, tx);
  p.P2 = dc_mul(p.A2, ty);
  p.P3 = dc_mul(p.B1, ty);
  p.P4 = dc_mul(p.B2, tx);
  return p;
}

DcValue AtomPixelKernel::z(const Pre& p, double nu, double xi) const {
  const DcValue X = dc_add(dc_add(dc_scale(p.A1, nu), dc_scale(p.A2, xi)), dc_scale(dc_add(p.P1, p.P2), -1.0));
  const DcValue Y = dc_add(dc_add(dc_scale(p.B1, xi), dc_scale(p.B2, -nu)), dc_add(dc_scale(p.P3, -1.0), p.P4));
  return dc_add(dc_mul(X, X), dc_mul(Y, Y));
}

DcValue AtomPixelKernel::pixel(const DcValue& z) const {
  const double t = z.f().to_double();
  const double q = mother_.kind == MotherKind::Gaussian ? mother_.peak() * std::exp(-t) : std::pow(1.0 + t, mother_.mu);
  return dc_compose(z, q, K1_);
}

DcValue AtomPixelKernel::pixel_squared(const DcValue& z) const {
  const double t = z.f().to_double();
  const double a = mother_.peak();
  const double q =
      mother_.kind == MotherKind::Gaussian ? a * a * std::exp(-2.0 * t) : std::pow(1.0 + t, 2.0 * mother_.mu);
  return dc_compose(z, q, K2_);
}

namespace {

class AtomPixelNode final : public DcNode {
 public:
  AtomPixelNode(AtomPixelKernel kernel, TransformParams lambda, Point2 pt, bool squared)
      : k_(std::move(kernel)), lambda_(lambda), pt_(pt), squared_(squared) {
    Point2 q = inverse_map(lambda, pt.x, pt.y);
    nu_ = q.x;
    xi_ = q.y;
  }
  DcValue parts(const Vec& x) const override {
    const DcValue z = k_.z(k_.precompute(x), nu_, xi_);
    return squared_ ? k_.pixel_squared(z) : k_.pixel(z);
  }
  double value(const Vec& x) const override {
    const double v = eval_atom(k_.mother(), AtomParams(x[0], x[1], x[2], x[3], x[4]), nu_, xi_);
    return squared_ ? v * v : v;
  }

 private:
  AtomPixelKernel k_;
  TransformParams lambda_;
  Point2 pt_;
  bool squared_;
  double nu_ = 0.0, xi_ = 0.0;
};

class WeightedErrorNode final : public DcNode {
 public:
  WeightedErrorNode(const MotherFunction& m, const std::vector<WeightedResidual>& terms, const SamplingGrid& grid,
                    const ParamDomain& gamma_domain, const ParamDomain& full)
      : k_(m, gamma_domain), grid_(grid), terms_(terms), c_center_(full.center()[5]), c_half_(0.5 * full.width(5)) {
    const int n = grid.size();
    coords_.resize(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i].v.size() != n) throw ContractError("residual length does not match the grid");
      auto& c = coords_[i];
      c.resize(2 * static_cast<std::size_t>(n));
      for (int l = 0; l < n; ++l) {
        Point2 pt = grid.point(l);
        Point2 q = inverse_map(terms[i].lambda, pt.x, pt.y);
        c[2 * l] = q.x;
        c[2 * l + 1] = q.y;
      }
    }
  }

  DcValue parts(const Vec& x) const override {
    const AtomPixelKernel::Pre pre = k_.precompute(x);
    const double c = x[5];
    DcValue C;
    if (c_half_ == 0.0) {
      C = {std::max(c, 0.0), std::max(-c, 0.0)};
    } else {
      const Wide u = (Wide(c) - c_center_) / Wide(c_half_);
      const Wide up = u + 1.0;
      C = dc_scale({0.5 * (up * up), 0.5 * (u * u + 1.0)}, c_half_);
      if (c_center_ >= 0.0)
        C.g += c_center_;
      else
        C.h += -c_center_;
    }
    const Wide cw(c);
    const DcValue C2{cw * cw, 0.0};
    DcValue total{0.0, 0.0};
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& v = terms_[i].v;
      const auto& xy = coords_[i];
      DcValue acc{0.0, 0.0};
      Wide vv = 0.0;
      for (Eigen::Index l = 0; l < v.size(); ++l) {
        const DcValue z = k_.z(pre, xy[2 * l], xy[2 * l + 1]);
        const DcValue cross = dc_scale(dc_mul(C, k_.pixel(z)), -2.0 * v[l]);
        const DcValue sq = dc_mul(C2, k_.pixel_squared(z));
        acc = dc_add(acc, dc_add(cross, sq));
        vv += Wide(v[l]) * v[l];
      }
      acc.g += vv;
      total = dc_add(total, dc_scale(acc, terms_[i].weight));
    }
    return total;
  }

  double value(const Vec& x) const override {
    const AtomParams g(x[0], x[1], x[2], x[3], x[4]);
    double s = 0.0;
    Eigen::VectorXd r;
    for (const WeightedResidual& t : terms_) {
      r = t.v;
      accumulate_atom(k_.mother(), g, -x[5], t.lambda, grid_, r);
      s += t.weight * r.squaredNorm();
    }
    return s;
  }

 private:
  AtomPixelKernel k_;
  SamplingGrid grid_;
  std::vector<WeightedResidual> terms_;
  std::vector<std::vector<double>> coords_;
  double c_center_, c_half_;
};

}  // namespace

DcFunction dc_transformed_atom_pixel(const MotherFunction& m, const TransformParams& lambda, Point2 grid_point,
                                     const ParamDomain& gamma_domain, bool squared) {
  return DcFunction(std::make_shared<AtomPixelNode>(AtomPixelKernel(m, gamma_domain), lambda, grid_point, squared),
                    gamma_domain, true);
}

DcFunction dc_weighted_error(const MotherFunction& m, const std::vector<WeightedResidual>& terms,
                             const SamplingGrid& grid, const ParamDomain& gamma_domain, double c_lo, double c_hi) {
  if (terms.empty()) throw ContractError("error needs at least one image");
  Vec lo(1), hi(1);
  lo << c_lo;
  hi << c_hi;
  ParamDomain full = gamma_domain.concat(ParamDomain(lo, hi));
  bool nonneg = std::all_of(terms.begin(), terms.end(), [](const WeightedResidual& t) { return t.weight >= 0.0; });
  return DcFunction(std::make_shared<WeightedErrorNode>(m, terms, grid, gamma_domain, full), full, nonneg);
}

DcFunction dc_approx_error(const MotherFunction& m, const std::vector<Eigen::VectorXd>& residuals,
                           const std::vector<TransformParams>& lambdas, const SamplingGrid& grid,
                           const ParamDomain& gamma_domain, double c_lo, double c_hi) {
  if (residuals.size() != lambdas.size()) throw ContractError("one transform per residual is required");
  std::vector<WeightedResidual> t;
  for (std::size_t i = 0; i < residuals.size(); ++i) t.push_back({residuals[i], lambdas[i], 1.0});
  return dc_weighted_error(m, t, grid, gamma_domain, c_lo, c_hi);
}

std::vector<WeightedResidual> joint_block_weights(const JointBlockTerms& t, double alpha) {
  if (t.own_residuals.size() != t.own_lambdas.size() || t.own_residuals.size() != t.own_eta.size() ||
      t.rival_residuals.size() != t.rival_lambdas.size() || t.rival_residuals.size() != t.rival_eta.size())
    throw ContractError("joint error term lists differ in length");
  std::vector<WeightedResidual> out;
  for (std::size_t i = 0; i < t.own_residuals.size(); ++i)
    out.push_back({t.own_residuals[i], t.own_lambdas[i], 1.0 + alpha * t.own_eta[i]});
  if (alpha != 0.0)
    for (std::size_t i = 0; i < t.rival_residuals.size(); ++i)
      out.push_back({t.rival_residuals[i], t.rival_lambdas[i], -alpha * t.rival_eta[i]});
  return out;
}

DcFunction dc_joint_error(const MotherFunction& m, const JointBlockTerms& terms, double alpha,
                          const SamplingGrid& grid, const ParamDomain& gamma_domain, double c_lo, double c_hi) {
  return dc_weighted_error(m, joint_block_weights(terms, alpha), grid, gamma_domain, c_lo, c_hi);
}

}  // namespace ptm
