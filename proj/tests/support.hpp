#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "lrem/lrem.hpp"

namespace lrem::test {

// Deterministic generator for property tests; each test seeds its own.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  cd complex() { return {normal(), normal()}; }
  bool coin() { return integer(0, 1) == 1; }

  Mat matrix(Index r, Index c, bool real = false) {
    Mat a(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) a(i, j) = real ? cd(normal()) : complex();
    return a;
  }

  LaurentMatrix laurent(Index r, Index c, int lo, int hi, bool real = false) {
    LaurentMatrix a(r, c);
    for (int s = lo; s <= hi; ++s) a.set(s, matrix(r, c, real));
    return a;
  }

  HardyElement hardy(Index r, Index c, int depth, bool real = false) { return HardyElement(laurent(r, c, -depth, 0, real)); }

  // A root with modulus in [lo, hi], random phase.
  cd root(double lo, double hi) { return std::polar(uniform(lo, hi), uniform(0.0, 2.0 * std::numbers::pi)); }

  // Root whose modulus keeps away from the unit circle by `gap`.
  cd off_circle_root(double gap = 0.3) { return coin() ? root(0.05, 1.0 - gap) : root(1.0 + gap, 3.0); }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// prod (z - r_i) as a Laurent polynomial starting at z^0.
inline LaurentPoly poly_from_roots(const std::vector<cd>& roots, cd lead = 1.0) {
  LaurentPoly p = LaurentPoly::constant(lead);
  for (cd r : roots) p = p * LaurentPoly(0, {-r, 1.0});
  return p;
}

inline double max_coeff_gap(const LaurentMatrix& a, const LaurentMatrix& b) {
  int lo = std::min(a.is_zero() ? 0 : a.lo(), b.is_zero() ? 0 : b.lo());
  int hi = std::max(a.is_zero() ? 0 : a.hi(), b.is_zero() ? 0 : b.hi());
  double g = 0.0;
  for (int s = lo; s <= hi; ++s) g = std::max(g, (a.coeff(s) - b.coeff(s)).cwiseAbs().maxCoeff());
  return g;
}

// Largest entrywise gap between two transfer functions over the first
// `depth` + 1 expansion coefficients.
inline double series_gap(const RationalMatrix& a, const RationalMatrix& b, int depth = 60) {
  return max_coeff_gap(a.expand(-depth).window(-depth, 0), b.expand(-depth).window(-depth, 0));
}

inline double grid_gap(const RationalMatrix& a, const RationalMatrix& b, int n = 256) {
  double g = 0.0;
  for (int k = 0; k < n; ++k) {
    cd z = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
    g = std::max(g, (a.eval(z) - b.eval(z)).norm());
  }
  return g;
}

// Constant-coefficient matrix polynomial from a list of (power, matrix) pairs.
inline LaurentMatrix lm(Index r, Index c, std::initializer_list<std::pair<int, Mat>> terms) {
  LaurentMatrix a(r, c);
  for (const auto& [s, m] : terms) a.add_to(s, m);
  return a.prune(0.0);
}

inline Mat m2(cd a, cd b, cd c, cd d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Mat m1(cd a) { return Mat::Constant(1, 1, a); }

inline LaurentMatrix scalar(std::initializer_list<std::pair<int, cd>> terms) {
  LaurentMatrix a(1, 1);
  for (const auto& [s, v] : terms) a.add_to(s, m1(v));
  return a.prune(0.0);
}

// A symbol P+ that is invertible in W+: upper unitriangular times a diagonal
// of polynomials with roots outside the disk, then a random constant mix.
inline LaurentMatrix random_plus_unit(Gen& g, Index m) {
  LaurentMatrix u = LaurentMatrix::identity(m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) {
      Mat e = Mat::Zero(m, m);
      e(i, j) = g.complex();
      u.add_to(g.integer(0, 1), e);
    }
  LaurentMatrix d(m, m);
  for (Index i = 0; i < m; ++i) {
    Mat e = Mat::Zero(m, m);
    e(i, i) = 1.0;
    d.add_to(0, e);
    Mat f = Mat::Zero(m, m);
    f(i, i) = -1.0 / g.root(1.6, 3.0);
    d.add_to(1, f);
  }
  Mat c = g.matrix(m, m) + 3.0 * Mat::Identity(m, m);
  return lm_mul(LaurentMatrix::constant(c), lm_mul(u, d));
}

// The same construction mirrored into W-.
inline LaurentMatrix random_minus_unit(Gen& g, Index m) {
  LaurentMatrix p = random_plus_unit(g, m);
  LaurentMatrix out(m, m);
  for (int s = p.lo(); s <= p.hi(); ++s) out.set(-s, p.at(s));
  return out;
}

}  // namespace lrem::test
