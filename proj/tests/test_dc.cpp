#include <doctest.h>

#include "dc_checks.hpp"
#include "ptm/dc.hpp"
#include "ptm/error.hpp"
#include "ptm/manifold.hpp"

#include <cmath>
#include <random>

using namespace ptm;
using ptm::testing::check_convexity;
using ptm::testing::check_identity;

namespace {

ParamDomain box1(double lo, double hi) {
  Eigen::VectorXd l(1), h(1);
  l << lo;
  h << hi;
  return ParamDomain(l, h);
}

ParamDomain box2(double l0, double h0, double l1, double h1) {
  Eigen::VectorXd l(2), h(2);
  l << l0, l1;
  h << h0, h1;
  return ParamDomain(l, h);
}

Eigen::VectorXd pt(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

ParamDomain gamma_box() {
  Eigen::VectorXd lo(5), hi(5);
  lo << 0.0, -4.0, -4.0, 1.0, 1.0;
  hi << kPi, 4.0, 4.0, 3.0, 3.0;
  return ParamDomain(lo, hi);
}

}  // namespace

TEST_CASE("scalar square split values") {
  ParamDomain d = box1(-3, 3);
  DcFunction c = dc_scalar_square_split(d, 0);
  DcValue v = c.parts(pt({0.0}));
  CHECK(v.g.to_double() == 0.5);
  CHECK(v.h.to_double() == 0.5);
  v = c.parts(pt({1.0}));
  CHECK(v.g.to_double() == 2.0);
  CHECK(v.h.to_double() == 1.0);
  v = c.parts(pt({-1.0}));
  CHECK(v.g.to_double() == 0.0);
  CHECK(v.h.to_double() == 1.0);
  CHECK(c.parts_nonnegative());
}

TEST_CASE("linear combination") {
  ParamDomain d = box1(-2, 2);
  DcFunction x = dc_scalar_square_split(d, 0);
  DcFunction same = dc_linear_combination({{1.0, x}});
  CHECK(same.parts(pt({0.7})).g == x.parts(pt({0.7})).g);
  DcFunction zero = dc_linear_combination({{1.0, x}, {-1.0, x}});
  CHECK(std::abs(zero.f(pt({1.3})).to_double()) == 0.0);
  CHECK_THROWS_AS(dc_linear_combination({{1.0, x}, {1.0, dc_scalar_square_split(box1(0, 1), 0)}}), DomainError);

  ParamDomain d2 = box2(-2, 2, 0.5, 3);
  DcFunction f1 = dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return std::sin(v[0]) * v[1]; }, d2);
  DcFunction f2 = dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return std::exp(v[0]) / v[1]; }, d2);
  DcFunction lc = dc_linear_combination({{2.0, f1}, {-3.0, f2}});
  auto r = check_identity(lc, 100, 1e-10, 1.0, 31);
  CHECK(r.failures == 0);
}

TEST_CASE("product") {
  ParamDomain d = box1(0, 2);
  DcFunction one = dc_constant(d, 1.0);
  DcFunction f2 = dc_shift_nonnegative(
      dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return std::cos(3 * v[0]); }, d));
  DcFunction p = dc_product(one, f2);
  for (double x : {0.0, 0.3, 1.7}) CHECK(p.f(pt({x})).to_double() == doctest::Approx(std::cos(3 * x)).epsilon(1e-12));

  // x on [0, 2] with g = x, h = 0.
  DcFunction xs = dc_linear_combination({{1.0, dc_scalar_square_split(d, 0)}});
  DcFunction lin = dc_shift_nonnegative(dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return v[0]; }, d, 1e-12));
  DcFunction sq = dc_product(lin, lin);
  for (double x : {0.0, 0.5, 2.0}) CHECK(sq.f(pt({x})).to_double() == doctest::Approx(x * x).epsilon(1e-12));
  CHECK(check_identity(dc_product(xs, f2), 100, 1e-10, 1.0, 32).failures == 0);

  DcFunction signed_split = dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return v[0] - 1; }, d, 1.0);
  CHECK_THROWS_AS(dc_product(signed_split, one), ContractError);
}

TEST_CASE("composition with convex scalars") {
  ParamDomain d = box1(0, 2);
  DcFunction z = dc_product(dc_scalar_square_split(d, 0), dc_scalar_square_split(d, 0));  // x^2 >= 0
  DcFunction id = dc_compose_convex(convex_identity(), z, 2.0);
  CHECK(id.f(pt({1.5})).to_double() == doctest::Approx(2.25));
  DcFunction e = dc_compose_convex(convex_scaled_exp(1.0, 1.0), z);
  CHECK(e.f(pt({1.2})).to_double() == doctest::Approx(std::exp(-1.44)).epsilon(1e-13));
  DcFunction p = dc_compose_convex(convex_power(-3.0), z);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 2);
  for (int i = 0; i < 100; ++i) {
    double x = u(rng);
    REQUIRE(std::abs(p.f(pt({x})).to_double() - std::pow(1 + x * x, -3.0)) <= 1e-10);
  }
  CHECK(check_convexity(p, 1000, 1e-9, 34).violations == 0);
  CHECK(check_convexity(e, 1000, 1e-9, 35).violations == 0);
}

TEST_CASE("composition estimates K from samples when no bound is known") {
  ParamDomain d = box1(0, 1);
  DcFunction z = dc_product(dc_scalar_square_split(d, 0), dc_scalar_square_split(d, 0));
  ConvexScalar q{[](double t) { return t * t; }, [](double t) { return 2 * t; }, std::nullopt};
  DcFunction c = dc_compose_convex(q, z);
  CHECK(check_identity(c, 100, 1e-10, 1.0, 36).failures == 0);
  CHECK(check_convexity(c, 1000, 1e-9, 37).violations == 0);
}

TEST_CASE("smooth quadratic split") {
  ParamDomain d = box1(0, kTwoPi);
  DcFunction lin = dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return 3 * v[0] - 1; }, d, 0.5);
  CHECK(lin.f(pt({2.0})).to_double() == 5.0);
  DcFunction cosf = dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return std::cos(v[0]); }, d, 1.0);
  // g'' = 1 - cos(psi) >= 0: second differences of g are nonnegative.
  for (int i = 1; i < 200; ++i) {
    double x = kTwoPi * i / 200.0, h = 1e-3;
    double d2 = (cosf.g(pt({x + h})) - 2.0 * cosf.g(pt({x})) + cosf.g(pt({x - h}))).to_double() / (h * h);
    REQUIRE(d2 >= -1e-6);
  }
  CHECK(check_convexity(cosf, 1000, 1e-9, 38).violations == 0);

  ParamDomain d2 = box2(0, kTwoPi, 0.5, 2.0);
  DcFunction cs = dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return std::cos(v[0]) / v[1]; }, d2,
                                            std::nullopt, QuadraticMetric::Normalized, true);
  CHECK(cs.parts_nonnegative());
  CHECK(check_identity(cs, 200, 1e-12, 1.0, 39).failures == 0);
  auto cr = check_convexity(cs, 1000, 1e-9, 40);
  CHECK(cr.violations == 0);
  CHECK(cr.negative_parts == 0);
  CHECK_THROWS_AS(dc_smooth_quadratic_split([](const Eigen::VectorXd& v) { return v[0]; }, d, -1.0), DomainError);
}

TEST_CASE("transformed atom pixel") {
  ParamDomain G = gamma_box();
  TransformParams lam(0.4, 1.0, -0.5, 1.2, 0.8);
  for (MotherFunction m : {MotherFunction::gaussian(), MotherFunction::inverse_multiquadric(-3)}) {
    DcFunction px = dc_transformed_atom_pixel(m, lam, {2.0, 1.5}, G);
    DcFunction sq = dc_transformed_atom_pixel(m, lam, {2.0, 1.5}, G, true);
    auto r = check_identity(px, 100, 1e-8, m.peak(), 41);
    CHECK(r.failures == 0);
    std::mt19937_64 rng(42);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd x = ptm::testing::random_point(G, rng);
      double v = px.value(x);
      REQUIRE(std::abs(sq.f(x).to_double() - v * v) <= 1e-8 * m.peak() * m.peak());
      // Rendering is an independent oracle for the pixel.
      SamplingGrid grid(1.5, 1.0, 1.0, 1.0, 1, 1);
      Eigen::VectorXd img = Eigen::VectorXd::Zero(1);
      accumulate_atom(m, AtomParams::from_vector(x), 1.0, lam, grid, img);
      REQUIRE(std::abs(px.f(x).to_double() - img[0]) <= 1e-8 * m.peak());
    }
    auto c = check_convexity(px, 1000, 1e-9, 43);
    CHECK(c.violations == 0);
    CHECK(c.negative_parts == 0);
  }
  // Atom at the center of the box, identity warp, sampled at its peak.
  Eigen::VectorXd lo(5), hi(5);
  lo << 0.0, -2.0, -2.0, 1.0, 1.0;
  hi << kPi, 2.0, 2.0, 3.0, 3.0;
  ParamDomain G0(lo, hi);
  DcFunction peak = dc_transformed_atom_pixel(MotherFunction::gaussian(), TransformParams(), {0.0, 0.0}, G0);
  CHECK(peak.f(G0.center()).to_double() == doctest::Approx(eval_mother(MotherFunction::gaussian(), 0, 0)));
}

TEST_CASE("approximation error decomposition") {
  SamplingGrid grid = SamplingGrid::centered(8, 8);
  ParamDomain G = gamma_box();
  MotherFunction m = MotherFunction::gaussian();
  std::mt19937_64 rng(44);
  std::normal_distribution<double> nd(0, 0.2);
  std::vector<Eigen::VectorXd> res;
  std::vector<TransformParams> lam = {TransformParams(0.1, 0.5, -0.5, 1.1, 0.9), TransformParams(5.9, -1, 0.5, 0.9, 1.2)};
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd v(grid.size());
    for (int l = 0; l < grid.size(); ++l) v[l] = nd(rng);
    res.push_back(v);
  }
  DcFunction E = dc_approx_error(m, res, lam, grid, G, -2.0, 2.0);
  double vv = res[0].squaredNorm() + res[1].squaredNorm();
  auto r = check_identity(E, 100, 1e-7, vv, 45);
  CHECK(r.failures == 0);
  Eigen::VectorXd x(6);
  x << G.center(), 0.0;
  CHECK(E.f(x).to_double() == doctest::Approx(vv).epsilon(1e-10));

  // Planted single atom: the error vanishes at the planted parameters.
  AtomParams g(0.7, 1.0, -0.5, 1.8, 1.3);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.size());
  accumulate_atom(m, g, 1.3, lam[0], grid, v);
  DcFunction E1 = dc_approx_error(m, {v}, {lam[0]}, grid, G, -2.0, 2.0);
  Eigen::VectorXd star(6);
  star << g.to_vector(), 1.3;
  CHECK(std::abs(E1.f(star).to_double()) <= 1e-7 * v.squaredNorm());
  CHECK(E1.value(star) <= 1e-20);

  auto c = check_convexity(E, 300, 1e-9, 46);
  CHECK(c.violations == 0);
  CHECK(c.negative_parts == 0);
}

TEST_CASE("joint error decomposition") {
  SamplingGrid grid = SamplingGrid::centered(6, 6);
  ParamDomain G = gamma_box();
  MotherFunction m = MotherFunction::inverse_multiquadric(-3);
  std::mt19937_64 rng(47);
  std::normal_distribution<double> nd(0, 0.2);
  auto rnd = [&] {
    Eigen::VectorXd v(grid.size());
    for (int l = 0; l < grid.size(); ++l) v[l] = nd(rng);
    return v;
  };
  JointBlockTerms t;
  t.own_residuals = {rnd(), rnd()};
  t.own_lambdas = {TransformParams(0.2, 0, 0, 1, 1), TransformParams(0.1, 1, 0, 1.1, 1.1)};
  t.own_eta = {0.3, 0.05};
  t.rival_residuals = {rnd()};
  t.rival_lambdas = {TransformParams(6.0, -0.5, 0.5, 0.9, 0.9)};
  t.rival_eta = {0.2};

  DcFunction J0 = dc_joint_error(m, t, 0.0, grid, G, -1.5, 1.5);
  DcFunction A = dc_approx_error(m, t.own_residuals, t.own_lambdas, grid, G, -1.5, 1.5);
  std::mt19937_64 r2(48);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x = ptm::testing::random_point(J0.domain(), r2);
    REQUIRE(J0.f(x) == A.f(x));
  }
  DcFunction J = dc_joint_error(m, t, 2.0, grid, G, -1.5, 1.5);
  double scale = 0.0;
  for (auto& v : t.own_residuals) scale += v.squaredNorm();
  CHECK(check_identity(J, 100, 1e-7, scale, 49).failures == 0);
  CHECK(check_convexity(J, 300, 1e-9, 50).violations == 0);

  JointBlockTerms no_rivals = t;
  no_rivals.rival_residuals.clear();
  no_rivals.rival_lambdas.clear();
  no_rivals.rival_eta.clear();
  auto w = joint_block_weights(no_rivals, 2.0);
  CHECK(w.size() == 2);
  CHECK(w[0].weight == doctest::Approx(1.6));
}
