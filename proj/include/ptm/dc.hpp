#pragma once

// Functions with explicit convex/convex decompositions f = g - h and the
// rules that combine them.

#include "ptm/dictionary.hpp"
#include "ptm/geometry.hpp"
#include "ptm/manifold.hpp"
#include "ptm/wide.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace ptm {

struct DcValue {
  Wide g;
  Wide h;
  Wide f() const { return g - h; }
};

// Value-level rules. dc_mul requires nonnegative parts on both sides.
DcValue dc_scale(const DcValue& a, double coef);
DcValue dc_add(const DcValue& a, const DcValue& b);
DcValue dc_mul(const DcValue& a, const DcValue& b);
/// q(f) with q(f) already evaluated; K must dominate |q'| on the range of f.
DcValue dc_compose(const DcValue& a, Wide q_of_f, double K);

class DcNode {
 public:
  virtual ~DcNode() = default;
  virtual DcValue parts(const Eigen::VectorXd& x) const = 0;
  /// f(x) by a route independent of the decomposition.
  virtual double value(const Eigen::VectorXd& x) const = 0;
};

class DcFunction {
 public:
  DcFunction() = default;
  DcFunction(std::shared_ptr<const DcNode> node, ParamDomain domain, bool parts_nonnegative)
      : node_(std::move(node)), domain_(std::move(domain)), nonneg_(parts_nonnegative) {}

  DcValue parts(const Eigen::VectorXd& x) const { return node_->parts(x); }
  Wide g(const Eigen::VectorXd& x) const { return parts(x).g; }
  Wide h(const Eigen::VectorXd& x) const { return parts(x).h; }
  /// f from the decomposition, g - h.
  Wide f(const Eigen::VectorXd& x) const { return parts(x).f(); }
  double value(const Eigen::VectorXd& x) const { return node_->value(x); }

  const ParamDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  bool parts_nonnegative() const { return nonneg_; }
  bool valid() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const DcNode> node_;
  ParamDomain domain_;
  bool nonneg_ = false;
};

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

DcFunction dc_constant(const ParamDomain& domain, double value);

/// x_k = 0.5 (x_k + 1)^2 - 0.5 (x_k^2 + 1), in the raw coordinate.
DcFunction dc_scalar_square_split(const ParamDomain& domain, int k);

/// x_k through the same square split applied to the coordinate normalized to
/// [-1, 1] over the box, which keeps the parts of order of the box size.
DcFunction dc_affine_coordinate(const ParamDomain& domain, int k);

DcFunction dc_linear_combination(const std::vector<std::pair<double, DcFunction>>& terms);

/// Throws ContractError unless both inputs have nonnegative parts.
DcFunction dc_product(const DcFunction& f1, const DcFunction& f2);

struct ConvexScalar {
  std::function<double(double)> q;
  std::function<double(double)> dq;
  /// sup |q'| over the range where q is used, when known in closed form.
  std::optional<double> slope_bound;
};

ConvexScalar convex_identity();
/// a * exp(-r t); slope bound a * r on t >= 0.
ConvexScalar convex_scaled_exp(double a, double r);
/// (1 + t)^mu for mu < 0; slope bound |mu| on t >= 0.
ConvexScalar convex_power(double mu);

/// q(f). Without K, K = 1.1 * max |q'(f(x))| over a grid of the box
/// (50 points per free dimension, capped in total).
DcFunction dc_compose_convex(const ConvexScalar& q, const DcFunction& f, std::optional<double> K = std::nullopt);

/// Adds max(0, -min sampled part) plus a margin to both parts.
DcFunction dc_shift_nonnegative(const DcFunction& f);

enum class QuadraticMetric {
  Raw,        // |x - x_c|^2
  Normalized  // sum_k ((x_k - c_k) / half_width_k)^2 over free dimensions
};

/// Spectral-norm bound of the Hessian of f on the box (FD on a grid of 50
/// points per free dimension, capped in total), times 1.5.
double estimate_hessian_bound(const ScalarField& f, const ParamDomain& domain, QuadraticMetric metric,
                              int per_dim = 50);

/// g = f + (rho/2) q(x), h = (rho/2) q(x). rho is estimated when not given.
DcFunction dc_smooth_quadratic_split(const ScalarField& f, const ParamDomain& domain,
                                     std::optional<double> rho = std::nullopt,
                                     QuadraticMetric metric = QuadraticMetric::Raw, bool shift_nonnegative = false);

/// Per-atom-box constants of the pixel decomposition: splits of the four
/// trigonometric/scale terms and of the translations, normalized to Gamma.
class AtomPixelKernel {
 public:
  AtomPixelKernel(const MotherFunction& mother, const ParamDomain& gamma_domain);

  struct Pre {
    DcValue A1, A2, B1, B2;  // cos/sx, sin/sx, cos/sy, sin/sy
    DcValue P1, P2, P3, P4;  // A1*tx, A2*ty, B1*ty, B2*tx
  };

  Pre precompute(const Eigen::VectorXd& gamma) const;
  /// z = x~^2 + y~^2 at a pixel with intermediate coordinates (nu, xi).
  DcValue z(const Pre& pre, double nu, double xi) const;
  DcValue pixel(const DcValue& z) const;
  DcValue pixel_squared(const DcValue& z) const;

  const MotherFunction& mother() const { return mother_; }
  const ParamDomain& domain() const { return domain_; }
  double K() const { return K1_; }
  double K_squared() const { return K2_; }
  double trig_rho(int which) const { return rho_[which]; }

 private:
  DcValue trig(int which, double value, const Eigen::VectorXd& gamma) const;
  DcValue coord(int k, double value) const;

  MotherFunction mother_;
  ParamDomain domain_;
  Eigen::VectorXd center_, half_;
  double rho_[4] = {0, 0, 0, 0};
  double shift_[4] = {0, 0, 0, 0};
  double K1_ = 0.0, K2_ = 0.0;
};

/// One pixel of U_lambda(phi_gamma) as a DC function of gamma.
DcFunction dc_transformed_atom_pixel(const MotherFunction& m, const TransformParams& lambda, Point2 grid_point,
                                     const ParamDomain& gamma_domain, bool squared = false);

struct WeightedResidual {
  Eigen::VectorXd v;  // residual image, u - U_lambda(p)
  TransformParams lambda;
  double weight = 1.0;
};

/// sum_i weight_i * |v_i - c U_{lambda_i}(phi_gamma)|^2 over (gamma, c) in
/// gamma_domain x c_range. Variables: psi, tau_x, tau_y, sigma_x, sigma_y, c.
DcFunction dc_weighted_error(const MotherFunction& m, const std::vector<WeightedResidual>& terms,
                             const SamplingGrid& grid, const ParamDomain& gamma_domain, double c_lo, double c_hi);

DcFunction dc_approx_error(const MotherFunction& m, const std::vector<Eigen::VectorXd>& residuals,
                           const std::vector<TransformParams>& lambdas, const SamplingGrid& grid,
                           const ParamDomain& gamma_domain, double c_lo, double c_hi);

/// Class-block objective: own-class residuals weighted by (1 + alpha eta_i)
/// minus rival residuals weighted by alpha eta.
struct JointBlockTerms {
  std::vector<Eigen::VectorXd> own_residuals;
  std::vector<TransformParams> own_lambdas;
  std::vector<double> own_eta;
  std::vector<Eigen::VectorXd> rival_residuals;  // u_i^k - U_{lambda_i^{k,m}}(p^m), (i,k) in R^m
  std::vector<TransformParams> rival_lambdas;
  std::vector<double> rival_eta;
};

std::vector<WeightedResidual> joint_block_weights(const JointBlockTerms& t, double alpha);

DcFunction dc_joint_error(const MotherFunction& m, const JointBlockTerms& terms, double alpha,
                          const SamplingGrid& grid, const ParamDomain& gamma_domain, double c_lo, double c_hi);

}  // namespace ptm
