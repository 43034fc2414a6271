#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "support.hpp"

using namespace lrem;
using namespace lrem::test;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RationalMatrix scalar_rational(std::initializer_list<std::pair<int, cd>> num, std::initializer_list<std::pair<int, cd>> den) {
  LaurentMatrix d = scalar(den);
  return RationalMatrix(scalar(num), d.entry(0, 0));
}

// Cagan family member (psi - z^-1/beta)/(1 - z^-1/beta) for |beta| > 1.
RationalMatrix cagan_k(double beta, double psi) { return scalar_rational({{0, psi}, {-1, -1.0 / beta}}, {{0, 1.0}, {-1, -1.0 / beta}}); }

// The likelihood by direct quadrature: the log-det term through
// log det K~(inf) K~(inf)^* = mean of log det K K^*, which needs no factorization.
double quadrature_likelihood(const RationalMatrix& k, const RationalMatrix& xi, int n = 2048) {
  double logdet = 0.0, quad = 0.0;
  for (int j = 0; j < n; ++j) {
    cd z = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / n);
    Mat kv = k.eval(z);
    logdet += std::log(std::abs((kv * kv.adjoint()).determinant()));
    quad += (kv.inverse() * xi.eval(z)).squaredNorm();
  }
  return (logdet + quad) / n;
}

RealMat column(std::initializer_list<double> v) {
  RealMat x(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double a : v) x(i++, 0) = a;
  return x;
}

double sample_variance(const RealMat& x) {
  const double mean = x.col(0).mean();
  return (x.col(0).array() - mean).square().sum() / double(x.rows());
}

}  // namespace

TEST_CASE("outer_factor examples", "[likelihood]") {
  RationalMatrix unchanged = cagan_k(2.0, 2.0);
  CHECK(grid_gap(outer_factor(unchanged), unchanged) < 1e-12);

  RationalMatrix flipped = outer_factor(cagan_k(2.0, 0.25));
  CHECK(grid_gap(flipped, scalar_rational({{0, 0.5}, {-1, -0.25}}, {{0, 1.0}, {-1, -0.5}})) < 1e-12);

  RationalMatrix ar = scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}});
  RationalMatrix o = outer_factor(ar);
  CHECK(std::abs(std::abs(value_at_infinity(o)(0, 0)) - 1.0) < 1e-14);
  CHECK(grid_gap(cd(value_at_infinity(o)(0, 0) / std::abs(value_at_infinity(o)(0, 0))) * ar, o) < 1e-12);

  RationalMatrix ma = scalar_rational({{0, 1.0}, {-1, -2.0}}, {{0, 1.0}});
  CHECK(std::abs(value_at_infinity(outer_factor(ma))(0, 0)) == Catch::Approx(2.0));

  CHECK_THROWS_AS(outer_factor(scalar_rational({{0, 1.0}, {-1, -1.0}}, {{0, 1.0}})), BoundaryError);
  CHECK_THROWS(outer_factor(scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -2.0}})));
}

TEST_CASE("outer factors keep the spectral density", "[likelihood][property]") {
  Gen g(201);
  for (int i = 0; i < 30; ++i) {
    std::vector<cd> zs, ps;
    for (int k = g.integer(1, 4); k > 0; --k) zs.push_back(g.off_circle_root(0.1));
    for (int k = g.integer(0, 2); k > 0; --k) ps.push_back(g.root(0.0, 0.8));
    // Zeros are roots in w = z^-1; the denominator is prod (1 - p w), with
    // poles at z = p inside the disk.
    LaurentPoly nw = poly_from_roots(zs, g.complex()), dw = poly_from_roots(ps);
    LaurentMatrix num(1, 1), den(1, 1);
    const int nd = static_cast<int>(dw.c.size());
    for (int s = 0; s < static_cast<int>(nw.c.size()); ++s) num.set(-s, m1(nw.c[static_cast<size_t>(s)]));
    for (int s = 0; s < nd; ++s) den.set(-s, m1(dw.c[static_cast<size_t>(nd - 1 - s)]));
    RationalMatrix k(num, den.entry(0, 0));
    RationalMatrix o = outer_factor(k);
    double worst = 0.0;
    for (int j = 0; j < 256; ++j) {
      cd z = std::polar(1.0, 2.0 * std::numbers::pi * j / 256);
      worst = std::max(worst, std::abs(std::norm(o.eval(z)(0, 0)) - std::norm(k.eval(z)(0, 0))) / std::norm(k.eval(z)(0, 0)));
    }
    CHECK(worst < 1e-8);
    ScalarRational d(o.num().entry(0, 0));
    for (const auto& r : d.zeros()) CHECK(std::abs(r.value) < 1.0);
    // Jensen: log |K~(inf)|^2 is the mean of log |K|^2.
    double jensen = 0.0;
    for (int j = 0; j < 2048; ++j) jensen += std::log(std::norm(k.eval(std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / 2048))(0, 0)));
    CHECK_THAT(std::log(std::norm(value_at_infinity(o)(0, 0))), WithinAbs(jensen / 2048, 1e-8));
  }
}

TEST_CASE("limiting_likelihood examples", "[likelihood]") {
  LikelihoodFamily ng = family_by_name("nongeneric");
  CHECK_THAT(limiting_likelihood(ng.transfer({1.0}), ng.transfer({0.0})), WithinAbs(3.0, 1e-10));
  CHECK_THAT(limiting_likelihood(ng.transfer({0.1}), ng.transfer({0.0})), WithinRel(1.0 / 0.01 + 1.0 + 0.01, 1e-10));

  LikelihoodFamily cg = family_by_name("cagan");
  for (double b : {0.5, -0.2, 0.9}) CHECK_THAT(limiting_likelihood(cg.transfer({b, 0.0}), cg.transfer({0.3, 0.0})), WithinAbs(1.0, 1e-10));
  CHECK_THAT(limiting_likelihood(cg.transfer({2.0, 2.0}), cg.transfer({2.0, 2.0})), WithinAbs(std::log(4.0) + 1.0, 1e-10));

  RationalMatrix ar = scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}});
  CHECK_THAT(limiting_likelihood(ar, ar), WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(limiting_likelihood(scalar_rational({{0, 1.0}, {-1, -1.0}}, {{0, 1.0}}), ar), BoundaryError);
}

TEST_CASE("reference_likelihood examples", "[likelihood]") {
  CHECK_THAT(reference_likelihood("cagan", {0.5, 0.0}, {1e4, -1.0}), WithinAbs(1.0, 1e-3));
  CHECK_THAT(reference_likelihood("nongeneric", {1.0}, {1.0}), WithinAbs(2.0, 1e-14));
  CHECK_THAT(reference_likelihood("cagan-regularized", {0.5}, {2.0}), WithinAbs(std::log(0.25) + 4.0, 1e-14));
  CHECK_THROWS_AS(reference_likelihood("cagan", {2.0, 2.0}, {1.0, 0.5}), BoundaryError);
  CHECK_THROWS(reference_likelihood("ar1", {0.5}, {0.5}));
}

TEST_CASE("limiting_likelihood matches direct quadrature", "[likelihood][property]") {
  Gen g(202);
  LikelihoodFamily cg = family_by_name("cagan"), cr = family_by_name("cagan-regularized");
  LikelihoodFamily ng = family_by_name("nongeneric"), nr = family_by_name("nongeneric-regularized");
  auto beta = [&] { return (g.coin() ? 1.0 : -1.0) * (g.coin() ? g.uniform(0.1, 0.9) : g.uniform(1.2, 6.0)); };
  for (int i = 0; i < 25; ++i) {
    double b = beta(), b0 = beta();
    double p = g.uniform(-2.0, 2.0), p0 = g.uniform(-2.0, 2.0);
    if (std::abs(std::abs(b * p) - 1.0) < 0.1 || std::abs(std::abs(b0 * p0) - 1.0) < 0.1) continue;
    RationalMatrix k = cg.transfer({b, p}), xi = cg.transfer({b0, p0});
    CHECK_THAT(limiting_likelihood(k, xi), WithinAbs(quadrature_likelihood(k, xi), 1e-8));
    RationalMatrix kr = cr.transfer({b}), xr = cr.transfer({b0});
    CHECK_THAT(limiting_likelihood(kr, xr), WithinAbs(quadrature_likelihood(kr, xr), 1e-8));
  }
  for (int i = 0; i < 15; ++i) {
    double t = g.uniform(-2.0, 2.0), t0 = g.uniform(-2.0, 2.0);
    if (std::abs(t) < 0.2 || std::abs(t0) < 0.2) continue;
    RationalMatrix k = ng.transfer({t}), xi = ng.transfer({t0});
    CHECK_THAT(limiting_likelihood(k, xi), WithinAbs(quadrature_likelihood(k, xi), 1e-8));
    RationalMatrix kr = nr.transfer({t}), xr = nr.transfer({t0});
    CHECK_THAT(limiting_likelihood(kr, xr), WithinAbs(quadrature_likelihood(kr, xr), 1e-8));
  }
}

TEST_CASE("likelihood is invariant under constant unitary rotation", "[likelihood][property]") {
  Gen g(203);
  LikelihoodFamily nr = family_by_name("nongeneric-regularized");
  for (int i = 0; i < 10; ++i) {
    RationalMatrix k = nr.transfer({g.uniform(-2, 2)}), xi = nr.transfer({g.uniform(-2, 2)});
    Eigen::HouseholderQR<Mat> qr(g.matrix(2, 2));
    Mat u = qr.householderQ();
    RationalMatrix ku = k * LaurentMatrix::constant(u);
    CHECK_THAT(limiting_likelihood(ku, xi), WithinAbs(limiting_likelihood(k, xi), 1e-10));
  }
  RationalMatrix k = family_by_name("cagan").transfer({3.0, 0.7}), xi = family_by_name("cagan").transfer({2.0, 2.0});
  CHECK_THAT(limiting_likelihood(cd(std::polar(1.0, 0.9)) * k, xi), WithinAbs(limiting_likelihood(k, xi), 1e-10));
}

TEST_CASE("the truth minimizes the limiting likelihood", "[likelihood][property]") {
  Gen g(204);
  LikelihoodFamily cg = family_by_name("cagan");
  const std::vector<double> truth{2.0, 2.0};
  RationalMatrix xi = cg.transfer(truth);
  const double best = limiting_likelihood(outer_factor(xi), xi);
  int evaluated = 0;
  while (evaluated < 200) {
    double b = (g.coin() ? 1.0 : -1.0) * g.uniform(1.05, 8.0), p = g.uniform(-3.0, 3.0);
    if (std::abs(std::abs(b * p) - 1.0) < 0.05) continue;
    ++evaluated;
    RationalMatrix k = cg.transfer({b, p});
    const double v = limiting_likelihood(k, xi);
    CHECK(v >= best - 1e-10);
    if (v < best + 1e-8) {
      double gap = 0.0;
      for (int j = 0; j < 512; ++j) {
        cd z = std::polar(1.0, 2.0 * std::numbers::pi * j / 512);
        gap = std::max(gap, std::abs(std::norm(k.eval(z)(0, 0)) - std::norm(xi.eval(z)(0, 0))));
      }
      CHECK(gap < 1e-6);
    }
  }
}

TEST_CASE("autocovariances examples", "[likelihood]") {
  std::vector<Mat> one = autocovariances(RationalMatrix(LaurentMatrix::identity(1)), 3);
  CHECK(one[0](0, 0) == cd(1.0));
  for (int j = 1; j <= 3; ++j) CHECK(one[static_cast<size_t>(j)](0, 0) == cd(0.0));

  std::vector<Mat> ma = autocovariances(scalar_rational({{0, 2.0}, {-1, -0.5}}, {{0, 1.0}}), 3);
  CHECK_THAT(ma[0](0, 0).real(), WithinAbs(4.25, 1e-14));
  CHECK_THAT(ma[1](0, 0).real(), WithinAbs(-1.0, 1e-14));
  CHECK_THAT(std::abs(ma[2](0, 0)), WithinAbs(0.0, 1e-14));

  std::vector<Mat> ar = autocovariances(scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}}), 10);
  for (int j = 0; j <= 10; ++j) CHECK_THAT(ar[static_cast<size_t>(j)](0, 0).real(), WithinAbs(4.0 / 3.0 * std::pow(0.5, j), 1e-12));
  CHECK_THROWS(autocovariances(RationalMatrix(LaurentMatrix::identity(1)), -1));
}

TEST_CASE("autocovariances are Hermitian across negative lags", "[likelihood][property]") {
  Gen g(205);
  for (int i = 0; i < 30; ++i) {
    const Index m = g.integer(1, 3);
    HardyElement k = g.hardy(m, g.integer(1, 3), g.integer(0, 6));
    for (int j = 0; j <= 7; ++j) CHECK((autocovariance(k, -j) - autocovariance(k, j).adjoint()).norm() < 1e-12);
  }
}

TEST_CASE("finite_sample_likelihood examples", "[likelihood]") {
  RationalMatrix one(LaurentMatrix::identity(1));
  CHECK(finite_sample_likelihood(one, column({0, 0, 0, 0})) == 0.0);
  CHECK_THAT(finite_sample_likelihood(one, column({1, 1, 1, 1})), WithinAbs(1.0, 1e-15));
  RationalMatrix ar = scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}});
  const double want = 0.5 * std::log(4.0 / 3.0) + 3.0 / 8.0;
  CHECK_THAT(finite_sample_likelihood(ar, column({1, 0.5})), WithinAbs(want, 1e-12));
  CHECK_THAT(finite_sample_likelihood_dense(ar, column({1, 0.5})), WithinAbs(want, 1e-12));
  CHECK_THROWS_AS(finite_sample_likelihood_dense(RationalMatrix(LaurentMatrix(1, 1)), column({1.0})), SingularCovarianceError);
  CHECK_THROWS_AS(finite_sample_likelihood(ar, RealMat::Zero(3, 2)), DimensionError);
}

TEST_CASE("fast and dense finite-sample likelihoods agree", "[likelihood][property]") {
  Gen g(206);
  std::vector<RationalMatrix> ks{scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}}), scalar_rational({{0, 2.0}, {-1, -0.5}}, {{0, 1.0}}),
                                 cagan_k(3.0, -0.4), family_by_name("nongeneric-regularized").transfer({0.7}),
                                 family_by_name("nongeneric").transfer({1.3})};
  for (int i = 0; i < 4; ++i) {
    LaurentMatrix num = g.laurent(2, 2, -2, 0, true);
    num.add_to(0, 3.0 * Mat::Identity(2, 2));
    ks.emplace_back(num, LaurentPoly(-1, {-g.uniform(-0.7, 0.7), 1.0}));
  }
  for (const auto& k : ks) {
    const int t = g.integer(5, 40);
    RealMat x(t, k.rows());
    for (int a = 0; a < t; ++a)
      for (Index b = 0; b < k.rows(); ++b) x(a, b) = g.normal();
    const double dense = finite_sample_likelihood_dense(k, x);
    CHECK_THAT(finite_sample_likelihood(k, x), WithinAbs(dense, 1e-9 * std::max(1.0, std::abs(dense))));
  }
}

TEST_CASE("simulation examples", "[likelihood]") {
  SimConfig cfg;
  cfg.T = 50;
  cfg.seed = 7;
  RealMat x = simulate_path(RationalMatrix(LaurentMatrix::identity(1)), cfg, 0);
  CHECK((x - innovations(7, 0, 50, 1)).norm() == 0.0);
  CHECK((simulate_path(RationalMatrix(LaurentMatrix::identity(1)), cfg, 1) - x).norm() > 0.0);
  cfg.replications = 3;
  std::vector<RealMat> paths = simulate_paths(RationalMatrix(LaurentMatrix::identity(1)), cfg);
  CHECK(paths.size() == 3);
  CHECK((paths[0] - x).norm() == 0.0);

  SimConfig big;
  big.T = 100000;
  big.seed = 11;
  RealMat a = simulate_path(scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}}), big, 0);
  // Var of the sample variance of a Gaussian AR(1) is (2/T) sum_j gamma_j^2.
  const double se_ar = std::sqrt(2.0 / big.T * (16.0 / 9.0) * (5.0 / 3.0));
  CHECK(std::abs(sample_variance(a) - 4.0 / 3.0) < 3.0 * se_ar);

  big.T = 20000;
  RealMat c = simulate_path(family_by_name("cagan-regularized").transfer({2.0}), big, 0);
  CHECK(std::abs(sample_variance(c) - 0.25) < 3.0 * 0.25 * std::sqrt(2.0 / big.T));

  SimConfig tiny;
  tiny.truncation = 3;
  CHECK_THROWS(simulate_path(scalar_rational({{0, 1.0}}, {{0, 1.0}, {-1, -0.5}}), tiny, 0));
}

TEST_CASE("regularized nongeneric surface is smooth at zero", "[likelihood]") {
  LikelihoodFamily nr = family_by_name("nongeneric-regularized");
  RationalMatrix xi = nr.transfer({0.0});
  auto ell = [&](double t) { return limiting_likelihood(nr.transfer({t}), xi); };
  const double d1 = (ell(1e-2) - 2 * ell(0.0) + ell(-1e-2)) / 1e-4;
  const double d2 = (ell(5e-3) - 2 * ell(0.0) + ell(-5e-3)) / 2.5e-5;
  CHECK(std::isfinite(d1));
  CHECK_THAT(d2, WithinAbs(d1, 1e-3 * std::max(1.0, std::abs(d1))));
  CHECK_THAT(ell(0.0), WithinAbs(2.0, 1e-10));

  LikelihoodSurface s = scan(nr, {parse_axis("theta=-0.5:0.5:11")}, {0.0});
  for (const auto& p : s.points) CHECK(std::isfinite(p.value));
  REQUIRE(s.minima.size() >= 1);
  // ell - 2 grows like theta^4 here, so the minimizer is only resolvable to
  // about eps^(1/4).
  CHECK_THAT(s.minima[0].theta[0], WithinAbs(0.0, 1e-3));
}

TEST_CASE("parse_axis validates its input", "[likelihood]") {
  GridAxis a = parse_axis("beta=-3:3:7");
  CHECK(a.name == "beta");
  CHECK(a.at(6) == 3.0);
  CHECK(a.spacing() == 1.0);
  CHECK_THROWS(parse_axis("beta"));
  CHECK_THROWS(parse_axis("beta=1:0:3"));
  CHECK_THROWS(parse_axis("beta=a:1:3"));
  CHECK_THROWS(scan(family_by_name("cagan"), {parse_axis("beta=1:2:3")}, {2.0, 2.0}));
}
