#pragma once

// Transformation parameter spaces and the inverse coordinate maps used to
// warp patterns (a_lambda) and to generate atoms from the mother function
// (b_gamma).
//
// Coordinates: x grows to the right, y grows downward (raster order).

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace ptm {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

/// Maps an angle into [0, 2*pi).
double normalize_angle(double radians);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class TransformModel { Full5, Translate2, Scale2, Sim4 };

int model_dimension(TransformModel model);
std::string to_string(TransformModel model);
TransformModel transform_model_from_string(std::string_view name);

/// lambda = (theta, tx, ty, sx, sy). Scales are strictly positive; theta is
/// kept in [0, 2*pi). Parameters a model does not use stay at identity.
class TransformParams {
 public:
  TransformParams() = default;
  TransformParams(double theta, double tx, double ty, double sx, double sy);

  static TransformParams identity() { return {}; }

  double theta() const { return theta_; }
  double tx() const { return tx_; }
  double ty() const { return ty_; }
  double sx() const { return sx_; }
  double sy() const { return sy_; }

  friend bool operator==(const TransformParams&, const TransformParams&) = default;

 private:
  double theta_ = 0.0;
  double tx_ = 0.0;
  double ty_ = 0.0;
  double sx_ = 1.0;
  double sy_ = 1.0;
};

/// gamma = (psi, tau_x, tau_y, sigma_x, sigma_y) of one dictionary atom.
class AtomParams {
 public:
  AtomParams() = default;
  AtomParams(double psi, double tau_x, double tau_y, double sigma_x, double sigma_y);

  static constexpr int kDim = 5;

  double psi() const { return psi_; }
  double tau_x() const { return tau_x_; }
  double tau_y() const { return tau_y_; }
  double sigma_x() const { return sigma_x_; }
  double sigma_y() const { return sigma_y_; }

  /// (psi, tau_x, tau_y, sigma_x, sigma_y) as a vector.
  Eigen::VectorXd to_vector() const;
  /// Builds from the first five entries of `v`.
  static AtomParams from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

  friend bool operator==(const AtomParams&, const AtomParams&) = default;

 private:
  double psi_ = 0.0;
  double tau_x_ = 0.0;
  double tau_y_ = 0.0;
  double sigma_x_ = 1.0;
  double sigma_y_ = 1.0;
};

/// Closed axis-aligned box; one interval per parameter.
class ParamDomain {
 public:
  ParamDomain() = default;
  ParamDomain(Eigen::VectorXd lo, Eigen::VectorXd hi);

  int dim() const { return static_cast<int>(lo_.size()); }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }
  double lo(int k) const { return lo_[k]; }
  double hi(int k) const { return hi_[k]; }
  double width(int k) const { return hi_[k] - lo_[k]; }
  Eigen::VectorXd widths() const { return hi_ - lo_; }
  Eigen::VectorXd center() const { return 0.5 * (lo_ + hi_); }
  bool empty() const { return lo_.size() == 0; }

  /// Indices of dimensions with hi > lo.
  std::vector<int> free_dims() const;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double slack = 0.0) const;
  Eigen::VectorXd clamp(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Cartesian product of this box with another.
  ParamDomain concat(const ParamDomain& other) const;

  friend bool operator==(const ParamDomain& a, const ParamDomain& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
};

/// Active-parameter vector of `lambda` for `model`. The angle is expressed
/// in the 2*pi window starting at `domain.lo(theta)` when a domain is given.
Eigen::VectorXd to_vector(TransformModel model, const TransformParams& lambda);
Eigen::VectorXd to_vector(TransformModel model, const TransformParams& lambda, const ParamDomain& domain);
TransformParams from_vector(TransformModel model, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Index of theta in the active vector of `model`, or -1.
int angle_index(TransformModel model);

/// Default box for a window of size width x height (pixels).
ParamDomain default_transform_domain(TransformModel model, double width, double height);

/// Default atom box: psi in [0, pi] (both mother functions are even),
/// tau within a quarter window of the center, sigma in [1, min(W,H)/6].
ParamDomain default_atom_domain(double width, double height);

// a_lambda: (x', y') = diag(1/sx, 1/sy) R(theta) (x - tx, y - ty) with
// R(theta) = [cos sin; -sin cos].
Point2 inverse_map(const TransformParams& lambda, double x, double y);
/// Inverse of inverse_map.
Point2 forward_map(const TransformParams& lambda, double xp, double yp);
/// b_gamma, same structure as inverse_map.
Point2 atom_inverse_map(const AtomParams& gamma, double x, double y);
/// b_gamma(a_lambda(x, y)).
Point2 composed_map(const AtomParams& gamma, const TransformParams& lambda, double x, double y);

}  // namespace ptm
