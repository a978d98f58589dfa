#pragma once

// Discretization of transformed patterns, projection onto a pattern
// transformation manifold, tangent matrices and tangent distances.

#include "ptm/dictionary.hpp"
#include "ptm/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

namespace ptm {

/// Regular R x C lattice over the window [ox, ox+W] x [oy, oy+H]. Sample
/// (r, c) sits at the cell center, stored row-major.
class SamplingGrid {
 public:
  SamplingGrid() = default;
  SamplingGrid(double origin_x, double origin_y, double width, double height, int rows, int cols);

  /// Unit-spaced rows x cols window centered on the origin, so that rotations
  /// and scalings act about the window center.
  static SamplingGrid centered(int rows, int cols);

  double origin_x() const { return ox_; }
  double origin_y() const { return oy_; }
  double width() const { return w_; }
  double height() const { return h_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  double dx() const { return w_ / cols_; }
  double dy() const { return h_ / rows_; }

  double x(int col) const { return ox_ + (col + 0.5) * dx(); }
  double y(int row) const { return oy_ + (row + 0.5) * dy(); }
  Point2 point(int l) const { return {x(l % cols_), y(l / cols_)}; }

  friend bool operator==(const SamplingGrid&, const SamplingGrid&) = default;

 private:
  double ox_ = 0.0;
  double oy_ = 0.0;
  double w_ = 1.0;
  double h_ = 1.0;
  int rows_ = 1;
  int cols_ = 1;
};

struct Image {
  SamplingGrid grid;
  Eigen::VectorXd values;

  Image() = default;
  Image(SamplingGrid g, Eigen::VectorXd v);
  explicit Image(SamplingGrid g) : grid(g), values(Eigen::VectorXd::Zero(g.size())) {}

  double norm() const { return values.norm(); }
};

/// Writes U_lambda(.) of some continuous pattern into `out` (length n).
using RenderFn = std::function<void(const TransformParams&, Eigen::VectorXd& out)>;

/// Adds coef * U_lambda(phi_gamma) to `out`.
void accumulate_atom(const MotherFunction& m, const AtomParams& gamma, double coef, const TransformParams& lambda,
                     const SamplingGrid& grid, Eigen::VectorXd& out);

Eigen::VectorXd render_values(const Pattern& p, const TransformParams& lambda, const SamplingGrid& grid);
Image render(const Pattern& p, const TransformParams& lambda, const SamplingGrid& grid);
RenderFn pattern_renderer(const Pattern& p, const SamplingGrid& grid);

/// Continuous surrogate of a discrete image by bilinear interpolation of the
/// cell-center samples, zero outside the window.
class BilinearSurface {
 public:
  explicit BilinearSurface(const Image& img) : img_(img) {}
  double operator()(double x, double y) const;
  const Image& image() const { return img_; }

 private:
  Image img_;
};

RenderFn bilinear_renderer(const Image& reference);

struct Projection {
  TransformParams lambda;
  double distance = 0.0;
  Eigen::VectorXd residual;  // u - U_lambda(p)
};

struct ProjectOptions {
  int coarse_points = 7;         // per free dimension, unhinted search only
  int local_points = 3;          // per free dimension around a hint
  double local_radius = 0.10;    // fraction of the domain width
  double tol = 1e-6;             // relative distance improvement per sweep
  int max_sweeps = 12;
  int golden_iters = 24;
};

Projection project(const Image& u, const RenderFn& renderer, TransformModel model, const ParamDomain& domain,
                   const std::optional<TransformParams>& hint = std::nullopt, const ProjectOptions& opts = {});
Projection project(const Image& u, const Pattern& p, TransformModel model, const ParamDomain& domain,
                   const std::optional<TransformParams>& hint = std::nullopt, const ProjectOptions& opts = {});

/// Unhinted projection of every image; equal to calling project() on each,
/// with the lattice rendered once for the whole set.
std::vector<Projection> project_all(const std::vector<Image>& images, const RenderFn& renderer,
                                    TransformModel model, const ParamDomain& domain, const ProjectOptions& opts = {});

struct TangentMatrix {
  Eigen::MatrixXd columns;  // n x d_free
  std::vector<int> dims;    // active-vector index of each column
  bool one_sided = false;   // some column used a one-sided difference
};

/// Central differences with step 1e-3 of the domain width. Pinned
/// dimensions (zero width) have no column.
TangentMatrix tangent_matrix(const RenderFn& renderer, TransformModel model, const TransformParams& lambda,
                             const ParamDomain& domain);
TangentMatrix tangent_matrix(const Pattern& p, const TransformParams& lambda, const SamplingGrid& grid,
                             TransformModel model, const ParamDomain& domain);

struct TangentResidual {
  Eigen::VectorXd residual;
  double distance = 0.0;
};

/// Residual of w = u - base after removing its component in span(T).
TangentResidual tangent_residual_from(const Eigen::VectorXd& w, const Eigen::MatrixXd& T);
TangentResidual tangent_residual(const Image& u, const Pattern& p, const TransformParams& lambda,
                                 TransformModel model, const ParamDomain& domain);

double total_sq_tangent_error(const std::vector<Image>& images, const Pattern& p,
                              const std::vector<TransformParams>& lambdas, TransformModel model,
                              const ParamDomain& domain);

/// Evaluates sum_i w_i * dist_i^2 for candidate patterns p + c * phi_gamma,
/// reusing the base-pattern renders and tangents of each image.
class IncrementalTangentError {
 public:
  struct Term {
    const Image* image;
    TransformParams lambda;
    double weight;
  };

  IncrementalTangentError(const Pattern& base, std::vector<Term> terms, TransformModel model,
                          const ParamDomain& domain);

  /// Error of the base pattern alone.
  double base_value() const;
  double value(const AtomParams& gamma, double c) const;
  std::size_t size() const { return terms_.size(); }

 private:
  struct Cache {
    Eigen::VectorXd w;  // u - U(base)
    Eigen::MatrixXd T;
  };
  MotherFunction mother_;
  std::vector<Term> terms_;
  std::vector<Cache> cache_;
  TransformModel model_;
  ParamDomain domain_;
  SamplingGrid grid_;
};

}  // namespace ptm
