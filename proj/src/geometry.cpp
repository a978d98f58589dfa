#include "ptm/geometry.hpp"

#include "ptm/error.hpp"

#include <algorithm>
#include <cmath>

namespace ptm {

double normalize_angle(double radians) {
  if (!std::isfinite(radians)) throw DomainError("angle is not finite");
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

int model_dimension(TransformModel model) {
  switch (model) {
    case TransformModel::Full5: return 5;
    case TransformModel::Translate2: return 2;
    case TransformModel::Scale2: return 2;
    case TransformModel::Sim4: return 4;
  }
  return 0;
}

std::string to_string(TransformModel model) {
  switch (model) {
    case TransformModel::Full5: return "full5";
    case TransformModel::Translate2: return "translate2";
    case TransformModel::Scale2: return "scale2";
    case TransformModel::Sim4: return "sim4";
  }
  return "?";
}

TransformModel transform_model_from_string(std::string_view name) {
  if (name == "full5") return TransformModel::Full5;
  if (name == "translate2") return TransformModel::Translate2;
  if (name == "scale2") return TransformModel::Scale2;
  if (name == "sim4") return TransformModel::Sim4;
  throw DomainError("unknown transform model '" + std::string(name) + "'");
}

TransformParams::TransformParams(double theta, double tx, double ty, double sx, double sy)
    : theta_(normalize_angle(theta)), tx_(tx), ty_(ty), sx_(sx), sy_(sy) {
  if (!(sx > 0.0) || !(sy > 0.0)) throw DomainError("transform scale must be positive");
  if (!std::isfinite(tx) || !std::isfinite(ty) || !std::isfinite(sx) || !std::isfinite(sy))
    throw DomainError("transform parameter is not finite");
}

AtomParams::AtomParams(double psi, double tau_x, double tau_y, double sigma_x, double sigma_y)
    : psi_(normalize_angle(psi)), tau_x_(tau_x), tau_y_(tau_y), sigma_x_(sigma_x), sigma_y_(sigma_y) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw DomainError("atom scale must be positive");
  if (!std::isfinite(tau_x) || !std::isfinite(tau_y) || !std::isfinite(sigma_x) || !std::isfinite(sigma_y))
    throw DomainError("atom parameter is not finite");
}

Eigen::VectorXd AtomParams::to_vector() const {
  Eigen::VectorXd v(kDim);
  v << psi_, tau_x_, tau_y_, sigma_x_, sigma_y_;
  return v;
}

AtomParams AtomParams::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() < kDim) throw ContractError("atom vector needs five entries");
  return AtomParams(v[0], v[1], v[2], v[3], v[4]);
}

ParamDomain::ParamDomain(Eigen::VectorXd lo, Eigen::VectorXd hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw DomainError("domain bounds differ in dimension");
  for (Eigen::Index k = 0; k < lo_.size(); ++k) {
    if (!std::isfinite(lo_[k]) || !std::isfinite(hi_[k])) throw DomainError("domain bound is not finite");
    if (lo_[k] > hi_[k]) throw DomainError("domain lower bound exceeds upper bound");
  }
}

std::vector<int> ParamDomain::free_dims() const {
  std::vector<int> out;
  for (int k = 0; k < dim(); ++k)
    if (hi_[k] > lo_[k]) out.push_back(k);
  return out;
}

bool ParamDomain::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double slack) const {
  if (x.size() != lo_.size()) return false;
  for (int k = 0; k < dim(); ++k) {
    double s = slack * std::max(1.0, width(k));
    if (x[k] < lo_[k] - s || x[k] > hi_[k] + s) return false;
  }
  return true;
}

Eigen::VectorXd ParamDomain::clamp(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return x.cwiseMax(lo_).cwiseMin(hi_);
}

ParamDomain ParamDomain::concat(const ParamDomain& other) const {
  Eigen::VectorXd lo(dim() + other.dim()), hi(dim() + other.dim());
  lo << lo_, other.lo_;
  hi << hi_, other.hi_;
  return ParamDomain(std::move(lo), std::move(hi));
}

int angle_index(TransformModel model) {
  switch (model) {
    case TransformModel::Full5:
    case TransformModel::Sim4: return 0;
    default: return -1;
  }
}

Eigen::VectorXd to_vector(TransformModel model, const TransformParams& l) {
  Eigen::VectorXd v(model_dimension(model));
  switch (model) {
    case TransformModel::Full5: v << l.theta(), l.tx(), l.ty(), l.sx(), l.sy(); break;
    case TransformModel::Translate2: v << l.tx(), l.ty(); break;
    case TransformModel::Scale2: v << l.sx(), l.sy(); break;
    case TransformModel::Sim4: v << l.theta(), l.tx(), l.ty(), l.sx(); break;
  }
  return v;
}

Eigen::VectorXd to_vector(TransformModel model, const TransformParams& lambda, const ParamDomain& domain) {
  Eigen::VectorXd v = to_vector(model, lambda);
  int a = angle_index(model);
  if (a >= 0 && domain.dim() == v.size()) {
    double lo = domain.lo(a);
    double t = lo + normalize_angle(v[a] - lo);
    // Prefer the representative closest to the box when the window overshoots.
    if (t > domain.hi(a) && (t - kTwoPi) >= lo - (t - domain.hi(a))) t -= kTwoPi;
    v[a] = t;
  }
  return v;
}

TransformParams from_vector(TransformModel model, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != model_dimension(model)) throw ContractError("transform vector has wrong dimension");
  switch (model) {
    case TransformModel::Full5: return TransformParams(v[0], v[1], v[2], v[3], v[4]);
    case TransformModel::Translate2: return TransformParams(0.0, v[0], v[1], 1.0, 1.0);
    case TransformModel::Scale2: return TransformParams(0.0, 0.0, 0.0, v[0], v[1]);
    case TransformModel::Sim4: return TransformParams(v[0], v[1], v[2], v[3], v[3]);
  }
  return {};
}

ParamDomain default_transform_domain(TransformModel model, double width, double height) {
  const double tx = width / 4.0, ty = height / 4.0;
  Eigen::VectorXd lo(model_dimension(model)), hi(model_dimension(model));
  switch (model) {
    case TransformModel::Full5:
      lo << 0.0, -tx, -ty, 0.5, 0.5;
      hi << kTwoPi, tx, ty, 2.0, 2.0;
      break;
    case TransformModel::Translate2:
      lo << -tx, -ty;
      hi << tx, ty;
      break;
    case TransformModel::Scale2:
      lo << 0.5, 0.5;
      hi << 2.0, 2.0;
      break;
    case TransformModel::Sim4:
      lo << 0.0, -tx, -ty, 0.5;
      hi << kTwoPi, tx, ty, 2.0;
      break;
  }
  return ParamDomain(lo, hi);
}

ParamDomain default_atom_domain(double width, double height) {
  Eigen::VectorXd lo(5), hi(5);
  const double smax = std::max(1.5, std::min(width, height) / 6.0);
  lo << 0.0, -width / 4.0, -height / 4.0, 1.0, 1.0;
  hi << kPi, width / 4.0, height / 4.0, smax, smax;
  return ParamDomain(lo, hi);
}

Point2 inverse_map(const TransformParams& l, double x, double y) {
  const double c = std::cos(l.theta()), s = std::sin(l.theta());
  const double dx = x - l.tx(), dy = y - l.ty();
  return {(c * dx + s * dy) / l.sx(), (-s * dx + c * dy) / l.sy()};
}

Point2 forward_map(const TransformParams& l, double xp, double yp) {
  const double c = std::cos(l.theta()), s = std::sin(l.theta());
  const double ux = l.sx() * xp, uy = l.sy() * yp;
  // R(theta)^T (ux, uy) + t
  return {c * ux - s * uy + l.tx(), s * ux + c * uy + l.ty()};
}

Point2 atom_inverse_map(const AtomParams& g, double x, double y) {
  const double c = std::cos(g.psi()), s = std::sin(g.psi());
  const double dx = x - g.tau_x(), dy = y - g.tau_y();
  return {(c * dx + s * dy) / g.sigma_x(), (-s * dx + c * dy) / g.sigma_y()};
}

Point2 composed_map(const AtomParams& gamma, const TransformParams& lambda, double x, double y) {
  Point2 p = inverse_map(lambda, x, y);
  return atom_inverse_map(gamma, p.x, p.y);
}

}  // namespace ptm
