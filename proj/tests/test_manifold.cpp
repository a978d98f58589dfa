#include <doctest.h>

#include "ptm/error.hpp"
#include "ptm/manifold.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

using namespace ptm;

namespace {

ParamDomain box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(lo.size())), b(static_cast<Eigen::Index>(hi.size()));
  int i = 0;
  for (double v : lo) a[i++] = v;
  i = 0;
  for (double v : hi) b[i++] = v;
  return ParamDomain(a, b);
}

Pattern blob_pattern() {
  Pattern p(MotherFunction::gaussian());
  p.add(Atom{AtomParams(0.3, -1.0, 0.5, 2.0, 1.2), 1.0});
  p.add(Atom{AtomParams(1.1, 1.5, -1.0, 1.3, 2.2), -0.6});
  p.add(Atom{AtomParams(2.0, 0.0, 1.5, 1.0, 1.6), 0.8});
  return p;
}

}  // namespace

TEST_CASE("grid geometry") {
  SamplingGrid g = SamplingGrid::centered(4, 6);
  CHECK(g.size() == 24);
  CHECK(g.x(0) == -2.5);
  CHECK(g.y(0) == -1.5);
  CHECK(g.point(7).x == -1.5);
  CHECK(g.point(7).y == -0.5);
  CHECK_THROWS_AS(SamplingGrid(0, 0, 1, 1, 0, 3), DomainError);
  CHECK_THROWS_AS(Image(g, Eigen::VectorXd::Zero(5)), DomainError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(24);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(Image(g, bad), DomainError);
}

TEST_CASE("render samples the pattern and is linear") {
  const SamplingGrid g = SamplingGrid::centered(12, 10);
  const Pattern p = blob_pattern();
  const Image id = render(p, TransformParams::identity(), g);
  for (int l = 0; l < g.size(); ++l) CHECK(id.values[l] == doctest::Approx(eval_pattern(p, g.point(l).x, g.point(l).y)).epsilon(1e-14));

  const TransformParams lam(0.7, 1.0, -0.5, 1.3, 0.8);
  const Eigen::VectorXd a = render_values(p, lam, g);
  const Eigen::VectorXd b = render_values(p.scaled(-2.5), lam, g);
  CHECK((b + 2.5 * a).norm() <= 1e-13 * a.norm());
  for (int l = 0; l < g.size(); l += 7) {
    Point2 q = inverse_map(lam, g.point(l).x, g.point(l).y);
    CHECK(a[l] == doctest::Approx(eval_pattern(p, q.x, q.y)).epsilon(1e-13));
  }
}

TEST_CASE("translating the pattern equals translating the atom") {
  const SamplingGrid g = SamplingGrid::centered(16, 16);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const double dx = U(rng), dy = U(rng);
    Pattern centered(MotherFunction::gaussian(), {Atom{AtomParams(0.0, 0.0, 0.0, 1.7, 1.7), 1.0}});
    Pattern shifted(MotherFunction::gaussian(), {Atom{AtomParams(0.0, dx, dy, 1.7, 1.7), 1.0}});
    const Eigen::VectorXd a = render_values(centered, TransformParams(0, dx, dy, 1, 1), g);
    const Eigen::VectorXd b = render_values(shifted, TransformParams::identity(), g);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("projection recovers the transform of a rendered image") {
  const SamplingGrid g = SamplingGrid::centered(20, 20);
  const Pattern p = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Full5, 20, 20);
  const TransformParams truth(0.9, 1.3, -2.1, 1.2, 0.9);
  const Image u = render(p, truth, g);
  const Projection pr = project(u, p, TransformModel::Full5, dom);
  CHECK(pr.distance <= 1e-4 * u.norm());
  CHECK(pr.distance == doctest::Approx(pr.residual.norm()));
  CHECK(std::abs(pr.lambda.theta() - truth.theta()) < 1e-3);
  CHECK(std::abs(pr.lambda.tx() - truth.tx()) < 1e-3);
  CHECK(std::abs(pr.lambda.ty() - truth.ty()) < 1e-3);
  CHECK(std::abs(pr.lambda.sx() - truth.sx()) < 1e-3);
  CHECK(std::abs(pr.lambda.sy() - truth.sy()) < 1e-3);
}

TEST_CASE("projection edge cases") {
  const SamplingGrid g = SamplingGrid::centered(12, 12);
  const Pattern p = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Translate2, 12, 12);
  const Image u = render(p, TransformParams(0, 1, 1, 1, 1), g);

  const Projection e = project(u, Pattern(MotherFunction::gaussian()), TransformModel::Translate2, dom);
  CHECK(e.distance == doctest::Approx(u.norm()));

  const Image zero(g);
  const Projection z = project(zero, p, TransformModel::Translate2, dom);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int t = 0; t < 20; ++t)
    CHECK(z.distance <= render_values(p, TransformParams(0, U(rng), U(rng), 1, 1), g).norm() + 1e-12);

  CHECK_THROWS_AS(project(u, p, TransformModel::Translate2, ParamDomain()), DomainError);
  CHECK_THROWS_AS(project(u, p, TransformModel::Full5, dom), DomainError);
}

TEST_CASE("hinted projection never ends above the hint") {
  const SamplingGrid g = SamplingGrid::centered(16, 16);
  const Pattern p = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Full5, 16, 16);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto draw = [&] {
    Eigen::VectorXd v = dom.lo() + (dom.widths().array() * Eigen::ArrayXd::NullaryExpr(5, [&] { return U(rng); })).matrix();
    return from_vector(TransformModel::Full5, v);
  };
  for (int t = 0; t < 15; ++t) {
    Image u = render(p, draw(), g);
    for (int l = 0; l < g.size(); ++l) u.values[l] += 0.05 * (U(rng) - 0.5);
    const TransformParams hint = draw();
    const double at_hint = (u.values - render_values(p, hint, g)).norm();
    const Projection pr = project(u, p, TransformModel::Full5, dom, hint);
    CHECK(pr.distance <= at_hint);

    ProjectOptions loose, fine;
    loose.tol = 1e-2;
    fine.tol = 1e-9;
    CHECK(project(u, p, TransformModel::Full5, dom, hint, fine).distance <=
          project(u, p, TransformModel::Full5, dom, hint, loose).distance);
  }
}

TEST_CASE("batch projection matches single projections") {
  const SamplingGrid g = SamplingGrid::centered(12, 12);
  const Pattern p = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Sim4, 12, 12);
  std::vector<Image> imgs;
  for (int t = 0; t < 4; ++t) imgs.push_back(render(p, TransformParams(0.4 * t, 0.5 * t - 1, 0.3 * t, 0.8 + 0.1 * t, 0.8 + 0.1 * t), g));
  ProjectOptions o;
  o.coarse_points = 5;
  const RenderFn r = pattern_renderer(p, g);
  const std::vector<Projection> all = project_all(imgs, r, TransformModel::Sim4, dom, o);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const Projection one = project(imgs[i], r, TransformModel::Sim4, dom, std::nullopt, o);
    CHECK(one.lambda == all[i].lambda);
    CHECK(one.distance == all[i].distance);
  }
}

TEST_CASE("translation tangents are negative spatial gradients") {
  const SamplingGrid g = SamplingGrid::centered(16, 16);
  const double sx = 1.8, sy = 2.4, tx = 0.7, ty = -0.4;
  const Pattern p(MotherFunction::gaussian(), {Atom{AtomParams(0.0, 0.0, 0.0, sx, sy), 1.0}});
  const ParamDomain dom = default_transform_domain(TransformModel::Translate2, 16, 16);
  const TransformParams lam(0, tx, ty, 1, 1);
  const TangentMatrix T = tangent_matrix(p, lam, g, TransformModel::Translate2, dom);
  REQUIRE(T.columns.cols() == 2);
  CHECK_FALSE(T.one_sided);
  // d/dtx of phi((x - tx)/sx, (y - ty)/sy) is -d/dx of the image.
  Eigen::VectorXd gx(g.size()), gy(g.size());
  for (int l = 0; l < g.size(); ++l) {
    const double a = (g.point(l).x - tx) / sx, b = (g.point(l).y - ty) / sy;
    const double phi = std::sqrt(2.0 / kPi) * std::exp(-(a * a + b * b));
    gx[l] = 2.0 * a / sx * phi;
    gy[l] = 2.0 * b / sy * phi;
  }
  CHECK(T.columns.col(0).dot(gx) / (T.columns.col(0).norm() * gx.norm()) > 0.99999);
  CHECK(T.columns.col(1).dot(gy) / (T.columns.col(1).norm() * gy.norm()) > 0.99999);
  CHECK((T.columns.col(0) - gx).norm() <= 1e-4 * gx.norm());
}

TEST_CASE("tangent invariance, linearity and boundary flag") {
  const SamplingGrid g = SamplingGrid::centered(12, 12);
  const Pattern flat(MotherFunction::gaussian(), {Atom{AtomParams(0.0, 0.0, 0.0, 1e6, 2.0), 1.0}});
  const ParamDomain sdom = default_transform_domain(TransformModel::Scale2, 12, 12);
  const TransformParams lam(0, 0, 0, 1.1, 0.9);
  const TangentMatrix T = tangent_matrix(flat, lam, g, TransformModel::Scale2, sdom);
  CHECK(T.columns.col(0).norm() < 1e-6 * render_values(flat, lam, g).norm());
  CHECK(T.columns.col(1).norm() > 1e-2);

  const Pattern p = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Full5, 12, 12);
  const TransformParams l2(1.0, 0.5, -0.5, 1.2, 0.8);
  const Eigen::MatrixXd a = tangent_matrix(p, l2, g, TransformModel::Full5, dom).columns;
  const Eigen::MatrixXd b = tangent_matrix(p.scaled(2.0), l2, g, TransformModel::Full5, dom).columns;
  CHECK((b - 2.0 * a).norm() <= 1e-14 * a.norm());

  const TangentMatrix edge = tangent_matrix(p, TransformParams(0, 3.0, 0, 1, 1), g, TransformModel::Translate2,
                                            default_transform_domain(TransformModel::Translate2, 12, 12));
  CHECK(edge.one_sided);

  const ParamDomain pinned = box({0, -3, -3, 0.5}, {0, 3, 3, 2});
  CHECK(tangent_matrix(p, l2, g, TransformModel::Sim4, pinned).columns.cols() == 3);
}

TEST_CASE("tangent residuals") {
  const SamplingGrid g = SamplingGrid::centered(14, 14);
  const Pattern p = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Full5, 14, 14);
  const TransformParams lam(0.6, 0.4, -0.3, 1.1, 0.9);
  const Image on = render(p, lam, g);
  CHECK(tangent_residual(on, p, lam, TransformModel::Full5, dom).distance <= 1e-6 * on.norm());

  // A vector orthogonal to the tangent space passes through unchanged.
  const Eigen::MatrixXd T = tangent_matrix(p, lam, g, TransformModel::Full5, dom).columns;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(g.size(), [&] { return N(rng); });
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(T);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(g.size(), T.cols());
  w -= Q * (Q.transpose() * w);
  const TangentResidual r = tangent_residual_from(w, T);
  CHECK((r.residual - w).norm() <= 1e-8 * w.norm());

  for (int t = 0; t < 25; ++t) {
    Image u(g, Eigen::VectorXd::NullaryExpr(g.size(), [&] { return N(rng); }));
    const Eigen::VectorXd wu = u.values - render_values(p, lam, g);
    const TangentResidual tr = tangent_residual(u, p, lam, TransformModel::Full5, dom);
    CHECK(tr.distance <= wu.norm());
    // Independent least-squares solve of the normal equations.
    const Eigen::VectorXd z = T.colPivHouseholderQr().solve(wu);
    const double oracle = (wu - T * z).norm();
    CHECK(tr.distance == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(total_sq_tangent_error({u}, p, {lam}, TransformModel::Full5, dom) ==
          doctest::Approx(tr.distance * tr.distance).epsilon(1e-14));
  }
  CHECK(total_sq_tangent_error({on, on}, p, {lam, lam}, TransformModel::Full5, dom) <= 1e-12 * on.values.squaredNorm());
  CHECK_THROWS_AS(total_sq_tangent_error({on}, p, {}, TransformModel::Full5, dom), ContractError);
}

TEST_CASE("incremental tangent error equals the direct computation") {
  const SamplingGrid g = SamplingGrid::centered(12, 12);
  const Pattern base = blob_pattern();
  const ParamDomain dom = default_transform_domain(TransformModel::Full5, 12, 12);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> N(0.0, 0.3);
  std::vector<Image> imgs;
  std::vector<TransformParams> lams;
  for (int i = 0; i < 4; ++i) {
    lams.emplace_back(0.5 * i, 0.3 * i - 0.5, 0.2, 1.0 + 0.1 * i, 0.9);
    Image u = render(base, lams.back(), g);
    u.values += Eigen::VectorXd::NullaryExpr(g.size(), [&] { return N(rng); });
    imgs.push_back(u);
  }
  const std::vector<double> w = {1.0, 2.5, -0.5, 0.75};
  std::vector<IncrementalTangentError::Term> terms;
  for (int i = 0; i < 4; ++i) terms.push_back({&imgs[i], lams[i], w[i]});
  IncrementalTangentError inc(base, terms, TransformModel::Full5, dom);

  auto direct = [&](const Pattern& p) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double d = tangent_residual(imgs[i], p, lams[i], TransformModel::Full5, dom).distance;
      s += w[i] * d * d;
    }
    return s;
  };
  CHECK(inc.base_value() == doctest::Approx(direct(base)).epsilon(1e-12));
  for (int t = 0; t < 5; ++t) {
    const AtomParams gam(0.4 * t, t - 2.0, 1.0 - 0.5 * t, 1.0 + 0.3 * t, 2.0 - 0.2 * t);
    const double c = 0.7 - 0.3 * t;
    Pattern cand = base;
    cand.add(Atom{gam, c});
    CHECK(inc.value(gam, c) == doctest::Approx(direct(cand)).epsilon(1e-9));
  }
}
