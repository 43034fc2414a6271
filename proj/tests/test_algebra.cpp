#include <algorithm>
#include <cmath>

#include "catch_amalgamated.hpp"
#include "support.hpp"

using namespace lrem;
using namespace lrem::test;
using Catch::Matchers::WithinAbs;

namespace {
const cd I1{0.0, 1.0};

LaurentMatrix nongeneric_symbol(double theta) { return builtin::nongeneric().symbol({{"theta", theta}}); }

// [R f] for causal rational R and causal f, as a truncated series.
HardyElement apply_causal(const RationalMatrix& r, const HardyElement& f, int depth) {
  RationalMatrix prod(lm_mul(r.num(), f.f, 0.0), r.den());
  LaurentMatrix e = prod.expand(-depth);
  return HardyElement(e.window(-depth, 0));
}
}  // namespace

// ---------------------------------------------------------------- laurent

TEST_CASE("lm_mul examples", "[laurent]") {
  const double beta = 0.5, alpha = 0.5;
  LaurentMatrix a = scalar({{0, 1.0}, {1, -beta}});
  CHECK(max_coeff_gap(lm_mul(a, LaurentMatrix::identity(1)), a) == 0.0);

  LaurentMatrix b = scalar({{0, 1.0}, {-1, -alpha}});
  LaurentMatrix p = lm_mul(a, b);
  CHECK(p.lo() == -1);
  CHECK(p.hi() == 1);
  CHECK_THAT(p.coeff(1)(0, 0).real(), WithinAbs(-0.5, 1e-15));
  CHECK_THAT(p.coeff(0)(0, 0).real(), WithinAbs(1.25, 1e-15));
  CHECK_THAT(p.coeff(-1)(0, 0).real(), WithinAbs(-0.5, 1e-15));

  // [[1, z], [0, 1]] diag(z, z) [[0, -1], [1, z^-1]] = [[z^2, 0], [z, 1]].
  LaurentMatrix mp = lm(2, 2, {{0, m2(1, 0, 0, 1)}, {1, m2(0, 1, 0, 0)}});
  LaurentMatrix m0 = LaurentMatrix::monomial(Mat::Identity(2, 2), 1);
  LaurentMatrix mm = lm(2, 2, {{0, m2(0, -1, 1, 0)}, {-1, m2(0, 0, 0, 1)}});
  CHECK(max_coeff_gap(lm_mul(lm_mul(mp, m0), mm), nongeneric_symbol(1.0)) == 0.0);
}

TEST_CASE("lm_mul rejects mismatched shapes", "[laurent]") {
  Gen g(1);
  CHECK_THROWS_AS(lm_mul(g.laurent(2, 3, 0, 1), g.laurent(2, 2, 0, 1)), DimensionError);
}

TEST_CASE("lm_adjoint examples", "[laurent]") {
  LaurentMatrix a = scalar({{0, 1.0}, {1, -2.0}});
  CHECK(max_coeff_gap(lm_adjoint(a), scalar({{0, 1.0}, {-1, -2.0}})) == 0.0);

  const double theta = 0.7;
  LaurentMatrix expect = lm(2, 2, {{-2, m2(1, 0, 0, 0)}, {-1, m2(0, theta, 0, 0)}, {0, m2(0, 0, 0, 1)}});
  CHECK(max_coeff_gap(lm_adjoint(nongeneric_symbol(theta)), expect) == 0.0);

  Gen g(2);
  for (int i = 0; i < 20; ++i) {
    LaurentMatrix r = g.laurent(g.integer(1, 3), g.integer(1, 3), g.integer(-3, 0), g.integer(0, 3));
    CHECK(max_coeff_gap(lm_adjoint(lm_adjoint(r)), r) == 0.0);
    cd z = std::polar(1.0, g.uniform(0, 6.28));
    CHECK((lm_adjoint(r).eval(z) - r.eval(z).adjoint()).norm() < 1e-12);
  }
}

TEST_CASE("lm_eval examples", "[laurent]") {
  CHECK(std::abs(scalar({{0, 1.0}, {-1, -1.0}}).eval(1.0)(0, 0)) == 0.0);
  const double a = 0.3, b = -1.1, c = 2.5;
  CHECK_THAT(builtin::mixed().symbol({{"a", a}, {"b", b}, {"c", c}}).eval(1.0)(0, 0).real(), WithinAbs(a + b + c, 1e-15));
  Mat v = nongeneric_symbol(1.0).eval(I1);
  CHECK((v - m2(-1, 0, I1, 1)).norm() < 1e-15);
  CHECK_THROWS_AS(nongeneric_symbol(1.0).eval(cd(1.1, 0.0)), OffCircleError);
}

TEST_CASE("lm_det examples", "[laurent]") {
  const double theta = 1.3;
  LaurentPoly d = lm_det_poly(nongeneric_symbol(theta));
  CHECK(d.lo == 2);
  CHECK(d.c.size() == 1);
  CHECK(std::abs(d.c[0] - 1.0) < 1e-12);

  LaurentPoly one = lm_det_poly(LaurentMatrix::identity(2));
  CHECK(one.lo == 0);
  CHECK(std::abs(one.c[0] - 1.0) < 1e-14);

  LaurentMatrix mixed = builtin::mixed().symbol();
  LaurentPoly dm = lm_det_poly(mixed);
  for (int s = -1; s <= 1; ++s) CHECK(std::abs(dm.coeff(s) - mixed.coeff(s)(0, 0)) < 1e-14);
}

TEST_CASE("lm_det matches pointwise determinants", "[laurent][property]") {
  Gen g(3);
  for (int i = 0; i < 30; ++i) {
    const Index m = g.integer(1, 4);
    LaurentMatrix a = g.laurent(m, m, g.integer(-2, 0), g.integer(0, 2));
    ScalarRational d = lm_det(a);
    for (int k = 0; k < 5; ++k) {
      cd z = std::polar(1.0, g.uniform(0, 6.28));
      cd want = a.eval(z).determinant();
      CHECK(std::abs(d.eval(z) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("lm_det drops cancelled edge coefficients", "[laurent][property]") {
  Gen g(30);
  for (int i = 0; i < 20; ++i) {
    const Index m = g.integer(2, 3);
    LaurentMatrix a = lm_mul(random_plus_unit(g, m), random_minus_unit(g, m));
    LaurentPoly d = lm_det_poly(a);
    // det of each unit factor is a product of m linear terms
    CHECK(d.lo >= -static_cast<int>(m));
    CHECK(d.hi() <= static_cast<int>(m));
    CHECK(lm_det(a).zeros().size() <= static_cast<size_t>(2 * m));
  }
}

TEST_CASE("winding_number examples", "[laurent]") {
  const double gamma = 1.7, beta = 0.4, alpha = 0.6;
  LaurentPoly f1 = LaurentPoly(0, {gamma}) * LaurentPoly(0, {1.0, -beta}) * LaurentPoly(-1, {-alpha, 1.0});
  CHECK(winding_number(ScalarRational(f1)) == 0);

  // z^-1 (z - 0.2)(z - 0.3).
  LaurentPoly f2 = LaurentPoly(-1, {0.06, -0.5, 1.0});
  CHECK(winding_number(ScalarRational(f2)) == 1);

  LaurentPoly f3 = LaurentPoly(-1, {gamma}) * LaurentPoly(0, {1.0, -beta}) * LaurentPoly(0, {1.0, -alpha});
  CHECK(winding_number(ScalarRational(f3)) == -1);

  try {
    winding_number(ScalarRational(LaurentPoly(-1, {-1.0, 1.0})));
    FAIL("expected CircleSingularError");
  } catch (const CircleSingularError& e) {
    REQUIRE(e.points.size() == 1);
    CHECK(std::abs(e.points[0] - 1.0) < 1e-12);
  }
}

TEST_CASE("winding_number is additive and agrees with phase unwrapping", "[laurent][property]") {
  Gen g(4);
  auto random_rational = [&] {
    std::vector<cd> zs, ps;
    int nz = g.integer(0, 6), np = g.integer(0, 6 - nz);
    for (int i = 0; i < nz; ++i) zs.push_back(g.off_circle_root(0.05));
    for (int i = 0; i < np; ++i) ps.push_back(g.off_circle_root(0.05));
    LaurentPoly num = poly_from_roots(zs, g.complex());
    num.lo = g.integer(-2, 2);
    return ScalarRational(num, poly_from_roots(ps));
  };
  for (int i = 0; i < 200; ++i) {
    ScalarRational f = random_rational();
    int by_roots = f.power() + f.count_zeros(RootSide::Inside) - f.count_poles(RootSide::Inside);
    CHECK(winding_by_phase([&](cd z) { return f.eval(z); }, 4096) == by_roots);
    CHECK(winding_number(f) == by_roots);
  }
  for (int i = 0; i < 50; ++i) {
    ScalarRational f = random_rational(), h = random_rational();
    ScalarRational fh(f.num() * h.num(), f.den() * h.den());
    CHECK(winding_number(fh) == winding_number(f) + winding_number(h));
  }
}

TEST_CASE("ScalarRational factored form agrees with the quotient", "[laurent][property]") {
  Gen g(5);
  for (int i = 0; i < 50; ++i) {
    std::vector<cd> zs, ps;
    for (int k = g.integer(0, 4); k > 0; --k) zs.push_back(g.off_circle_root(0.1));
    for (int k = g.integer(0, 3); k > 0; --k) ps.push_back(g.off_circle_root(0.1));
    ScalarRational f(poly_from_roots(zs, g.complex()), poly_from_roots(ps, g.complex()));
    CHECK_FALSE(f.circle_singular());
    for (int k = 0; k < 3; ++k) {
      cd z = std::polar(1.0, g.uniform(0, 6.28));
      cd a = f.eval(z), b = f.eval_factored(z);
      CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    }
  }
  ScalarRational unit(LaurentPoly(0, {1.0, 1.0}));
  CHECK(unit.circle_singular());
}

TEST_CASE("l2_inner examples", "[laurent]") {
  CHECK(l2_inner(LaurentMatrix::identity(1), LaurentMatrix::identity(1)) == cd(1.0));
  CHECK(l2_inner(scalar({{-1, 1.0}}), LaurentMatrix::identity(1)) == cd(0.0));
  // Coefficient gap of the two pinned nongeneric solutions at theta = 0.5 and 0.
  LaurentMatrix phi_half = lm(2, 2, {{-2, m2(1, 0, 0, 0)}, {-1, m2(0, 2.0, -0.5, 0)}});
  LaurentMatrix phi_zero = lm(2, 2, {{-2, m2(1, 0, 0, 0)}, {0, m2(0, 0, 0, 1)}});
  LaurentMatrix d = phi_half - phi_zero;
  CHECK_THAT(l2_inner(d, d).real(), WithinAbs(5.25, 1e-14));
}

TEST_CASE("l2_inner is positive definite on stored coefficients", "[laurent][property]") {
  Gen g(6);
  for (int i = 0; i < 30; ++i) {
    LaurentMatrix a = g.laurent(2, 3, -3, 2);
    cd v = l2_inner(a, a);
    CHECK(v.real() > 0.0);
    CHECK(std::abs(v.imag()) < 1e-12);
    double direct = 0.0;
    for (int s = a.lo(); s <= a.hi(); ++s) direct += a.at(s).squaredNorm();
    CHECK_THAT(v.real(), WithinAbs(direct, 1e-12 * direct));
  }
  CHECK(l2_inner(LaurentMatrix(2, 2), LaurentMatrix(2, 2)) == cd(0.0));
  LaurentMatrix tiny = LaurentMatrix::constant(Mat::Constant(1, 1, 1e-14));
  CHECK(tiny.prune(default_tolerances().drop).is_zero());
}

TEST_CASE("sup_norm examples", "[laurent]") {
  CHECK(sup_norm(LaurentMatrix(1, 1)) == 0.0);
  CHECK_THAT(sup_norm(scalar({{0, 1.0}, {-1, -1.0}})), WithinAbs(2.0, 1e-12));
  CHECK_THAT(sup_norm(LaurentMatrix::identity(2)), WithinAbs(std::sqrt(2.0), 1e-14));
}

TEST_CASE("products evaluate pointwise", "[laurent][property]") {
  Gen g(7);
  UnitCircleGrid grid(1024);
  for (int i = 0; i < 10; ++i) {
    const Index p = g.integer(1, 3), q = g.integer(1, 3), r = g.integer(1, 3);
    LaurentMatrix a = g.laurent(p, q, g.integer(-4, 0), g.integer(0, 4));
    LaurentMatrix b = g.laurent(q, r, g.integer(-4, 0), g.integer(0, 4));
    LaurentMatrix ab = lm_mul(a, b);
    CHECK(ab.lo() >= a.lo() + b.lo());
    CHECK(ab.hi() <= a.hi() + b.hi());
    double worst = 0.0;
    for (cd z : grid.points()) worst = std::max(worst, (ab.eval(z) - a.eval(z) * b.eval(z)).norm());
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("UnitCircleGrid requires powers of two and enough points", "[laurent]") {
  CHECK_THROWS(UnitCircleGrid(1000));
  UnitCircleGrid g(8);
  CHECK_THROWS(g.eval(Gen(8).laurent(1, 1, -2, 2)));
}

// ---------------------------------------------------------------- whf

TEST_CASE("whf_scalar examples", "[whf]") {
  const double alpha = 0.4, beta = 2.0;
  ScalarWHF f1 = whf_scalar(ScalarRational(LaurentPoly(-1, {-alpha, 1.0})));
  CHECK(f1.kappa == 0);
  ScalarWHF f2 = whf_scalar(ScalarRational(LaurentPoly(0, {1.0, -beta})));
  CHECK(f2.kappa == 1);
  const double a = 1.0, b = -0.5, c = 0.06;
  ScalarWHF f3 = whf_scalar(ScalarRational(LaurentPoly(-1, {c, b, a})));
  CHECK(f3.kappa == 1);
  for (int k = 0; k < 8; ++k) {
    cd z = std::polar(1.0, 0.7 * k + 0.1);
    CHECK(std::abs(f1.plus.eval(z) - 1.0) < 1e-14);
    CHECK(std::abs(f1.minus.eval(z) - (1.0 - alpha / z)) < 1e-14);
    CHECK(std::abs(f2.plus.eval(z) - 1.0) < 1e-14);
    CHECK(std::abs(f2.minus.eval(z) - (-beta * (1.0 - 1.0 / (beta * z)))) < 1e-14);
    CHECK(std::abs(f3.plus.eval(z) - 1.0) < 1e-14);
    CHECK(std::abs(f3.minus.eval(z) - (a + b / z + c / (z * z))) < 1e-13);
  }
  CHECK_THROWS_AS(whf_scalar(ScalarRational(LaurentPoly(-1, {-1.0, 1.0}))), CircleSingularError);
}

TEST_CASE("whf_matrix nongeneric examples", "[whf]") {
  WHFactorization f0 = whf_matrix(nongeneric_symbol(0.0));
  CHECK(f0.kappa == std::vector<int>{2, 0});
  CHECK(max_coeff_gap(f0.m_plus, LaurentMatrix::identity(2)) < 1e-14);
  CHECK(grid_gap(f0.m_minus, RationalMatrix(LaurentMatrix::identity(2))) < 1e-14);

  // Against [[1, z], [0, 1]] z [[0, -1], [1, z^-1]]: equal partial indices
  // leave a constant C with M+ = P C and M- = C^-1 Q.
  WHFactorization f1 = whf_matrix(nongeneric_symbol(1.0));
  REQUIRE(f1.kappa == std::vector<int>{1, 1});
  auto p_inv = [](cd z) { return m2(1, -z, 0, 1); };
  auto q = [](cd z) { return m2(0, -1, 1, 1.0 / z); };
  Mat c = p_inv(1.0) * f1.m_plus.eval(1.0);
  for (int k = 0; k < 16; ++k) {
    cd z = std::polar(1.0, 0.39 * k);
    CHECK((p_inv(z) * f1.m_plus.eval(z) - c).norm() < 1e-9);
    CHECK((f1.m_minus.eval(z) - c.inverse() * q(z)).norm() < 1e-9);
  }
  CHECK(f1.residual_sup <= 1e-12);
}

TEST_CASE("whf_matrix on 1x1 symbols agrees with whf_scalar", "[whf][property]") {
  Gen g(9);
  for (int i = 0; i < 30; ++i) {
    std::vector<cd> zs;
    for (int k = g.integer(1, 4); k > 0; --k) zs.push_back(g.off_circle_root(0.1));
    LaurentPoly p = poly_from_roots(zs, g.complex());
    p.lo = g.integer(-3, 1);
    ScalarWHF s = whf_scalar(ScalarRational(p));
    WHFactorization f = whf_matrix(LaurentMatrix::from_poly(p));
    CHECK(f.kappa == std::vector<int>{s.kappa});
    CHECK(f.backend == "scalar-exact");
    for (int k = 0; k < 4; ++k) {
      cd z = std::polar(1.0, g.uniform(0, 6.28));
      CHECK(std::abs(f.m_plus.eval(z)(0, 0) - s.plus.eval(z)) <= 1e-10 * std::abs(s.plus.eval(z)));
      CHECK(std::abs(f.m_minus.eval(z)(0, 0) - s.minus.eval(z)) <= 1e-10 * std::abs(s.minus.eval(z)));
    }
  }
}

TEST_CASE("verify_factorization examples", "[whf]") {
  LaurentMatrix ar = scalar({{0, 1.0}, {-1, -0.5}});
  WHFactorization f = whf_matrix(ar);
  FactorizationReport r = verify_factorization(ar, f);
  CHECK(r.ok());
  CHECK(r.find("residual")->value == 0.0);

  LaurentMatrix ng = nongeneric_symbol(1.0);
  WHFactorization g = whf_matrix(ng);
  FactorizationReport rg = verify_factorization(ng, g);
  CHECK(rg.ok());
  CHECK(rg.find("residual")->value <= 1e-12);

  LaurentMatrix num = g.m_minus.num();
  Mat c0 = num.coeff(0);
  c0(0, 0) += 1e-3;
  num.set(0, c0);
  g.m_minus = RationalMatrix(num, g.m_minus.den());
  FactorizationReport bad = verify_factorization(ng, g);
  CHECK_FALSE(bad.ok());
  CHECK_FALSE(bad.find("residual")->pass);
}

TEST_CASE("genericity_check examples", "[whf]") {
  GenericityReport a = genericity_check({1, 1});
  CHECK(a.is_generic);
  CHECK(a.sign_class == "all-nonnegative");
  CHECK_FALSE(genericity_check({2, 0}).is_generic);
  GenericityReport z = genericity_check({0, 0});
  CHECK(z.is_generic);
  CHECK(z.sign_class == "zero");
  CHECK(genericity_check({1, -1}).sign_class == "mixed");
  CHECK(genericity_check({0, -1}).sign_class == "all-nonpositive");
}

TEST_CASE("partial indices survive invertible one-sided factors", "[whf][property]") {
  Gen g(10);
  for (int i = 0; i < 12; ++i) {
    const Index m = g.integer(2, 3);
    std::vector<int> kappa;
    for (Index j = 0; j < m; ++j) kappa.push_back(g.integer(-1, 1));
    LaurentMatrix d(m, m);
    for (Index j = 0; j < m; ++j) {
      Mat e = Mat::Zero(m, m);
      e(j, j) = 1.0;
      d.add_to(kappa[static_cast<size_t>(j)], e);
    }
    LaurentMatrix sym = lm_mul(lm_mul(random_plus_unit(g, m), d), random_minus_unit(g, m));
    std::sort(kappa.rbegin(), kappa.rend());
    WHFactorization f = whf_matrix(sym);
    CHECK(f.kappa == kappa);
    LaurentMatrix moved = lm_mul(lm_mul(random_plus_unit(g, m), sym), random_minus_unit(g, m));
    CHECK(whf_matrix(moved).kappa == kappa);
    CHECK(f.kappa_sum() == winding_number(lm_det(sym)));
  }
}

TEST_CASE("diagonal symbols factor to the sorted scalar indices", "[whf][property]") {
  Gen g(11);
  for (int i = 0; i < 20; ++i) {
    const Index m = g.integer(2, 4);
    LaurentMatrix d(m, m);
    std::vector<int> want;
    for (Index j = 0; j < m; ++j) {
      std::vector<cd> zs;
      for (int k = g.integer(1, 3); k > 0; --k) zs.push_back(g.off_circle_root(0.2));
      LaurentPoly p = poly_from_roots(zs, g.complex());
      p.lo = g.integer(-2, 1);
      want.push_back(winding_number(ScalarRational(p)));
      LaurentMatrix pj = LaurentMatrix::from_poly(p);
      for (int s = pj.lo(); s <= pj.hi(); ++s) {
        Mat e = Mat::Zero(m, m);
        e(j, j) = pj.at(s)(0, 0);
        d.add_to(s, e);
      }
    }
    std::sort(want.rbegin(), want.rend());
    WHFactorization f = whf_matrix(d);
    CHECK(f.kappa == want);
    CHECK(verify_factorization(d, f).ok());
  }
}

TEST_CASE("spectral_factor examples", "[whf]") {
  LaurentMatrix one = spectral_factor(LaurentMatrix::identity(1));
  CHECK(max_coeff_gap(one, LaurentMatrix::identity(1)) < 1e-15);

  // |2 - 0.5 z^-1|^2 = 4.25 - z - z^-1.
  LaurentMatrix w = spectral_factor(scalar({{-1, -1.0}, {0, 4.25}, {1, -1.0}}));
  CHECK(max_coeff_gap(w, scalar({{0, 2.0}, {-1, -0.5}})) < 1e-10);

  // Regularized nongeneric transfer at theta = 1; |det K| = 1 on the circle, so
  // log det W(inf) W(inf)^* must vanish.
  LaurentMatrix k = lm(2, 2, {{-2, m2(1, 0, 0, 0)}, {-1, m2(0, 0.5, -1, 0)}, {0, m2(0, 0, 0, 0.5)}});
  LaurentMatrix s = k * k.adjoint();
  LaurentMatrix wk = spectral_factor(s);
  CHECK(sup_norm(wk * wk.adjoint() - s) <= 1e-8);
  Mat w0 = wk.coeff(0);
  CHECK(std::abs(w0(0, 1)) < 1e-12);
  CHECK(w0(0, 0).real() > 0);
  CHECK(w0(1, 1).real() > 0);
  CHECK_THAT(std::log(std::abs((w0 * w0.adjoint()).determinant())), WithinAbs(0.0, 1e-9));

  CHECK_THROWS_AS(spectral_factor(scalar({{-1, -1.0}, {0, 1.0}, {1, -1.0}})), NonPositiveError);
}

TEST_CASE("spectral factors are outer and match scalar outer polynomials", "[whf][property]") {
  Gen g(12);
  for (int i = 0; i < 25; ++i) {
    // q(z) = c prod (1 - r_i z^-1), |r_i| < 1, c > 0: the outer factor of |q|^2.
    std::vector<cd> rs;
    for (int k = g.integer(1, 4); k > 0; --k) rs.push_back(g.root(0.0, 0.8));
    LaurentPoly q = LaurentPoly::constant(g.uniform(0.5, 2.0));
    for (cd r : rs) q = q * LaurentPoly(-1, {-r, 1.0});
    LaurentMatrix qm = LaurentMatrix::from_poly(q);
    LaurentMatrix w = spectral_factor(qm * qm.adjoint());
    CHECK(max_coeff_gap(w, qm) < 1e-8);
  }
  for (int i = 0; i < 10; ++i) {
    const Index m = g.integer(2, 3);
    LaurentMatrix a = g.laurent(m, m, -2, 0);
    a.add_to(0, 4.0 * Mat::Identity(m, m));
    LaurentMatrix s = a * a.adjoint();
    LaurentMatrix w = spectral_factor(s);
    CHECK(w.hi() <= 0);
    CHECK(sup_norm(w * w.adjoint() - s) <= 1e-8 * sup_norm(s));
    ScalarRational d = lm_det(w);
    for (const auto& r : d.zeros()) CHECK(std::abs(r.value) <= 1.0 - 1e-8);
  }
}

// ---------------------------------------------------------------- hardy

TEST_CASE("project_minus examples", "[hardy]") {
  HardyElement a = project_minus(scalar({{1, 1.0}, {0, 1.0}, {-1, 1.0}}));
  CHECK(max_coeff_gap(a.f, scalar({{0, 1.0}, {-1, 1.0}})) == 0.0);
  CHECK(a.tail == 0.0);
  CHECK(max_coeff_gap(project_minus(LaurentMatrix::identity(1)).f, LaurentMatrix::identity(1)) == 0.0);
  CHECK(project_minus(scalar({{1, 1.0 / 1.7}})).f.is_zero());
}

TEST_CASE("shift operator examples", "[hardy]") {
  HardyElement one(LaurentMatrix::identity(1));
  CHECK(op_V(one).f.is_zero());
  CHECK(max_coeff_gap(op_Vinv(one).f, scalar({{-1, 1.0}})) == 0.0);
  Gen g(13);
  for (int i = 0; i < 20; ++i) {
    HardyElement f = g.hardy(2, 2, g.integer(0, 6));
    CHECK(max_coeff_gap(op_V(op_Vinv(f)).f, f.f) == 0.0);
  }
}

TEST_CASE("shift identities", "[hardy][property]") {
  Gen g(14);
  for (int i = 0; i < 50; ++i) {
    const Index r = g.integer(1, 3), c = g.integer(1, 2);
    HardyElement f = g.hardy(r, c, g.integer(0, 8)), h = g.hardy(r, c, g.integer(0, 8));
    CHECK(std::abs(hardy_inner(op_Vinv(f), op_Vinv(h)) - hardy_inner(f, h)) < 1e-12);
    CHECK(hardy_norm(op_V(f)) <= hardy_norm(f) + 1e-14);
    CHECK(std::abs(hardy_inner(op_V(f), h) - hardy_inner(f, op_Vinv(h))) < 1e-12);
  }
}

TEST_CASE("apply_symbol examples", "[hardy]") {
  HardyElement one(LaurentMatrix::identity(1));
  CHECK(max_coeff_gap(apply_symbol(scalar({{0, 1.0}, {1, -3.0}}), one).f, LaurentMatrix::identity(1)) == 0.0);

  const double alpha = 0.5;
  const int n = 60;
  LaurentMatrix geo(1, 1);
  for (int s = 0; s <= n; ++s) geo.set(-s, m1(std::pow(alpha, s)));
  HardyElement r = apply_symbol(scalar({{0, 1.0}, {-1, -alpha}}), HardyElement(geo));
  CHECK(std::abs(r.f.coeff(0)(0, 0) - 1.0) < 1e-15);
  for (int s = -1; s >= -n; --s) CHECK(std::abs(r.f.coeff(s)(0, 0)) < 1e-15);
  CHECK(std::abs(r.f.coeff(-n - 1)(0, 0)) <= std::pow(alpha, n + 1) + 1e-18);

  LaurentMatrix phi = lm(2, 2, {{-2, m2(1, 0, 0, 0)}, {-1, m2(0, 1, -1, 0)}});
  CHECK(max_coeff_gap(apply_symbol(nongeneric_symbol(1.0), HardyElement(phi)).f, LaurentMatrix::identity(2)) < 1e-15);
  CHECK_THROWS_AS(apply_symbol(nongeneric_symbol(1.0), HardyElement(LaurentMatrix::identity(1))), DimensionError);
}

TEST_CASE("symbol operator adjoint identity", "[hardy][property]") {
  Gen g(15);
  for (int i = 0; i < 40; ++i) {
    const Index p = g.integer(1, 3), q = g.integer(1, 3), c = g.integer(1, 2);
    LaurentMatrix m = g.laurent(p, q, g.integer(-3, 0), g.integer(0, 3));
    HardyElement f = g.hardy(q, c, g.integer(0, 8)), h = g.hardy(p, c, g.integer(0, 8));
    cd lhs = hardy_inner(apply_symbol(m, f), h);
    cd rhs = hardy_inner(f, apply_symbol(m.adjoint(), h));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("symbol operator composes along the factorization", "[hardy][property]") {
  Gen g(16);
  std::vector<LaurentMatrix> symbols{nongeneric_symbol(1.0), nongeneric_symbol(-0.5), nongeneric_symbol(0.0),
                                     builtin::cagan().symbol({{"beta", 2.0}}), builtin::ar1().symbol()};
  for (int i = 0; i < 4; ++i) {
    LaurentMatrix d = LaurentMatrix::monomial(Mat::Identity(2, 2), 0);
    d.add_to(1, m2(0, 0, 0, 0));
    Mat e = Mat::Zero(2, 2);
    e(0, 0) = 1.0;
    LaurentMatrix diag = LaurentMatrix::monomial(e, g.integer(0, 1));
    diag.add_to(0, m2(0, 0, 0, 1));
    symbols.push_back(lm_mul(lm_mul(random_plus_unit(g, 2), diag), random_minus_unit(g, 2)));
  }
  const int depth = 200;
  for (const auto& m : symbols) {
    WHFactorization f = whf_matrix(m);
    for (int t = 0; t < 3; ++t) {
      HardyElement x = g.hardy(m.cols(), 1, g.integer(0, 6));
      HardyElement direct = apply_symbol(m, x);
      HardyElement chain = apply_symbol(f.m_plus, apply_symbol(f.m0(), apply_causal(f.m_minus, x, depth)));
      double gap = 0.0;
      for (int s = 0; s >= -depth / 2; --s) gap = std::max(gap, (direct.f.coeff(s) - chain.f.coeff(s)).cwiseAbs().maxCoeff());
      CHECK(gap <= 1e-9);
    }
  }
}

TEST_CASE("toeplitz_oracle examples", "[hardy]") {
  ToeplitzSlice id = toeplitz_oracle(LaurentMatrix::identity(1), 10);
  CHECK(id.a.rows() == 11);
  CHECK((id.a - Mat::Identity(11, 11)).norm() == 0.0);

  const double beta = 0.7;
  ToeplitzSlice t = toeplitz_oracle(scalar({{0, 1.0}, {1, -beta}}), 8);
  for (Index i = 0; i <= 8; ++i)
    for (Index j = 0; j <= 8; ++j) {
      cd want = i == j ? cd(1.0) : (j == i + 1 ? cd(-beta) : cd(0.0));
      CHECK(t.a(i, j) == want);
    }
  CHECK(toeplitz_oracle(scalar({{0, 1.0}, {1, -2.0}}), 128).kernel_dimension() == 1);
  CHECK_THROWS(toeplitz_oracle(nongeneric_symbol(1.0), 4));
}

TEST_CASE("toeplitz slices agree with the symbol operator", "[hardy][property]") {
  Gen g(17);
  for (int i = 0; i < 30; ++i) {
    const Index p = g.integer(1, 3), q = g.integer(1, 3);
    LaurentMatrix m = g.laurent(p, q, g.integer(-3, 0), g.integer(0, 3));
    const int span = m.hi() - m.lo();
    const int n = 4 * span + g.integer(4, 20);
    HardyElement f = g.hardy(q, 2, g.integer(0, n));
    ToeplitzSlice t = toeplitz_oracle(m, n);
    HardyElement a = t.apply(f), b = apply_symbol(m, f);
    double gap = 0.0;
    for (int s = 0; s >= -(n - span); --s) gap = std::max(gap, (a.f.coeff(s) - b.f.coeff(s)).cwiseAbs().maxCoeff());
    CHECK(gap <= 1e-12);
  }
}
