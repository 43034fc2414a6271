#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "rational.hpp"

namespace lrem {

struct ScalarWHF {
  ScalarRational plus;   // analytic and invertible on the closed disk, plus(0) = 1
  ScalarRational minus;  // analytic and invertible outside the open disk
  int kappa = 0;
};

namespace detail {
inline void clean_real(LaurentPoly& p, bool real) {
  if (!real) return;
  for (auto& v : p.c) v = cd(v.real(), 0.0);
}

inline bool poly_is_real(const LaurentPoly& p) {
  for (cd v : p.c)
    if (v.imag() != 0.0) return false;
  return true;
}
}  // namespace detail

// Scalar factorization by root classification. Zeros and poles outside the
// disk go to M+ as (1 - z/r), those inside to M- as (1 - r z^-1); the
// leftover monomial is z^kappa and all constants sit in M-.
inline ScalarWHF whf_scalar(const ScalarRational& f) {
  if (f.is_zero()) throw CircleSingularError("whf_scalar: zero symbol", {});
  if (f.circle_singular()) throw CircleSingularError("whf_scalar: roots on the unit circle", f.circle_points());
  const double tc = f.tolerances().circle;
  std::vector<RootCluster> zin, zout, pin, pout;
  cd c = f.lead();
  int kappa = f.power();
  for (const auto& r : f.zeros()) {
    if (classify_root(r.value, tc) == RootSide::Outside) {
      zout.push_back(r);
      c *= std::pow(-r.value, r.mult);
    } else {
      zin.push_back(r);
      kappa += r.mult;
    }
  }
  for (const auto& q : f.poles()) {
    if (classify_root(q.value, tc) == RootSide::Outside) {
      pout.push_back(q);
      c /= std::pow(-q.value, q.mult);
    } else {
      pin.push_back(q);
      kappa -= q.mult;
    }
  }
  const bool real = detail::poly_is_real(f.num()) && detail::poly_is_real(f.den());
  LaurentPoly pn = expand_factors(zout, 1, true), pd = expand_factors(pout, 1, true);
  LaurentPoly mn = c * expand_factors(zin, -1, false), md = expand_factors(pin, -1, false);
  for (LaurentPoly* p : {&pn, &pd, &mn, &md}) detail::clean_real(*p, real);
  return {ScalarRational(pn, pd, f.tolerances()), ScalarRational(mn, md, f.tolerances()), kappa};
}

// Left factorization M = M+ M0 M- of a square Laurent polynomial symbol.
// M+ is a polynomial in z; M- and its inverse are causal rational matrices.
struct WHFactorization {
  LaurentMatrix m_plus;
  RationalMatrix m_minus;
  RationalMatrix m_minus_inv;
  std::vector<int> kappa;
  double residual_sup = 0.0;
  std::string backend;
  int section_N = 0;

  Index size() const { return m_plus.rows(); }
  int kappa_sum() const { return std::accumulate(kappa.begin(), kappa.end(), 0); }
  LaurentMatrix m0() const {
    const Index m = static_cast<Index>(kappa.size());
    LaurentMatrix d(m, m);
    for (Index i = 0; i < m; ++i) {
      Mat e = Mat::Zero(m, m);
      e(i, i) = 1.0;
      d.add_to(kappa[static_cast<size_t>(i)], e);
    }
    return d;
  }
  LaurentMatrix m0_inv() const {
    const Index m = static_cast<Index>(kappa.size());
    LaurentMatrix d(m, m);
    for (Index i = 0; i < m; ++i) {
      Mat e = Mat::Zero(m, m);
      e(i, i) = 1.0;
      d.add_to(-kappa[static_cast<size_t>(i)], e);
    }
    return d;
  }
  Mat eval_product(cd z) const {
    Mat d = Mat::Zero(size(), size());
    for (Index i = 0; i < size(); ++i) d(i, i) = std::pow(z, kappa[static_cast<size_t>(i)]);
    return m_plus.eval_any(z) * d * m_minus.eval(z);
  }
};

inline double factor_residual(const LaurentMatrix& m, const WHFactorization& f, int n = default_tolerances().grid) {
  UnitCircleGrid g = UnitCircleGrid::for_span(m.hi() - m.lo(), n);
  double r = 0.0;
  for (cd z : g.points()) r = std::max(r, (m.eval_any(z) - f.eval_product(z)).norm());
  return r;
}

namespace detail {

inline double symbol_scale(const LaurentMatrix& m) { return std::max(1.0, coeff_l1(m)); }

inline WHFactorization from_scalar(const LaurentMatrix& m, const Tolerances& tol) {
  LaurentPoly p = m.entry(0, 0);
  ScalarWHF s = whf_scalar(ScalarRational(p, LaurentPoly::constant(1.0), tol));
  WHFactorization f;
  f.m_plus = LaurentMatrix::from_poly(s.plus.num());
  f.m_minus = RationalMatrix(LaurentMatrix::from_poly(s.minus.num()));
  f.m_minus_inv = RationalMatrix(LaurentMatrix::identity(1), s.minus.num());
  f.kappa = {s.kappa};
  f.backend = "scalar-exact";
  f.residual_sup = factor_residual(m, f, tol.grid);
  return f;
}

inline bool is_diagonal(const LaurentMatrix& m) {
  for (int s = m.lo(); !m.is_zero() && s <= m.hi(); ++s) {
    Mat a = m.at(s);
    a.diagonal().setZero();
    if (!a.isZero(0.0)) return false;
  }
  return true;
}

// diag(f_i) = P diag(f_sigma) P^T with indices sorted descending, so
// M+ = P D+ and M- = D- P^T.
inline WHFactorization diagonal_factor(const LaurentMatrix& m, const Tolerances& tol) {
  const Index n = m.rows();
  std::vector<ScalarWHF> parts;
  for (Index i = 0; i < n; ++i) parts.push_back(whf_scalar(ScalarRational(m.entry(i, i), LaurentPoly::constant(1.0), tol)));
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return parts[static_cast<size_t>(a)].kappa > parts[static_cast<size_t>(b)].kappa; });
  WHFactorization f;
  f.m_plus = LaurentMatrix(n, n);
  LaurentMatrix mminus(n, n);
  LaurentPoly common = LaurentPoly::constant(1.0);
  for (const auto& p : parts) common = common * p.minus.num();
  LaurentMatrix inv_num(n, n);
  for (Index col = 0; col < n; ++col) {
    Index src = order[static_cast<size_t>(col)];
    const ScalarWHF& p = parts[static_cast<size_t>(src)];
    f.kappa.push_back(p.kappa);
    f.m_plus.set_entry(src, col, p.plus.num());
    mminus.set_entry(col, src, p.minus.num());
    LaurentPoly others = LaurentPoly::constant(1.0);
    for (Index j = 0; j < n; ++j)
      if (j != src) others = others * parts[static_cast<size_t>(j)].minus.num();
    inv_num.set_entry(src, col, others);
  }
  f.m_plus.prune(0.0);
  f.m_minus = RationalMatrix(mminus.prune(0.0));
  f.m_minus_inv = RationalMatrix(inv_num.prune(0.0), common);
  f.backend = "diagonal-exact";
  return f;
}

// Rows: output powers 0, -1, ..., -(R-1); columns: input powers 0..-N.
// Block (r, j) = M_{j-r-k}, the operator phi -> [z^k M phi]_- restricted to
// rows whose inputs all lie inside the window.
inline Mat shifted_section(const LaurentMatrix& m, int k, int n) {
  const Index bm = m.rows(), bn = m.cols();
  const int rblocks = std::max(0, n - m.hi() - k + 1);
  Mat t = Mat::Zero(rblocks * bm, (n + 1) * bn);
  for (int r = 0; r < rblocks; ++r)
    for (int s = m.lo(); s <= m.hi(); ++s) {
      int j = s + r + k;
      if (j < 0 || j > n) continue;
      t.block(r * bm, j * bn, bm, bn) = m.at(s);
    }
  return t;
}

// Orthonormal null-space basis from a rank-revealing QR of t^*.
template <class M>
M null_space(const M& t) {
  const Index cols = t.cols();
  Eigen::ColPivHouseholderQR<M> qr(t.adjoint());
  qr.setThreshold(1e-10);
  const Index nullity = cols - qr.rank();
  M e = M::Zero(cols, nullity);
  e.bottomRows(nullity).setIdentity();
  return qr.householderQ() * e;
}

// Orthonormal basis of the decaying part of the section's null space.
inline Mat decaying_kernel(const LaurentMatrix& m, int k, int n) {
  const Index bn = m.cols();
  const Index cols = (n + 1) * bn;
  Mat t = shifted_section(m, k, n);
  Mat z;
  if (t.rows() == 0) {
    z = Mat::Identity(cols, cols);
  } else if (t.imag().isZero(0.0)) {
    z = null_space<Eigen::MatrixXd>(t.real()).cast<cd>();
  } else {
    z = null_space<Mat>(t);
  }
  if (z.cols() == 0) return z;
  const Index tail_start = (n / 2 + 1) * bn;
  Mat tail = z.bottomRows(cols - tail_start);
  Eigen::BDCSVD<Mat> svd(tail, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Index keep = 0;
  for (Index i = 0; i < z.cols(); ++i) {
    double s = i < sv.size() ? sv(i) : 0.0;
    if (s < 1e-6) ++keep;
  }
  return z * svd.matrixV().rightCols(keep);
}

inline Mat orthonormal_columns(const Mat& a) {
  if (a.cols() == 0) return a;
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(a.rows(), a.cols());
}

// Ascending division p / q for q(0) != 0, keeping powers p.lo..0. Throws if
// the remainder is not negligible.
inline LaurentPoly divide_ascending(const LaurentPoly& p, const LaurentPoly& q) {
  if (p.is_zero()) return {};
  LaurentPoly u(p.lo, std::vector<cd>(static_cast<size_t>(std::max(0, 1 - p.lo)), 0.0));
  if (u.c.empty()) throw ConvergenceError("divide_ascending: quotient has positive powers");
  for (int k = p.lo; k <= 0; ++k) {
    cd acc = p.coeff(k);
    for (int j = 1; j <= q.hi(); ++j) acc -= q.coeff(j) * u.coeff(k - j);
    u.c[static_cast<size_t>(k - p.lo)] = acc / q.coeff(0);
  }
  LaurentPoly r = p - q * u;
  double scale = 0.0, rem = 0.0;
  for (cd v : p.c) scale = std::max(scale, std::abs(v));
  for (cd v : r.c) rem = std::max(rem, std::abs(v));
  if (rem > 1e-8 * std::max(1.0, scale)) throw ConvergenceError("divide_ascending: inexact division");
  return u.trim(0.0);
}

// Writes A = U L with U upper triangular and L unit lower triangular, via LU
// without pivoting of the flipped transpose. Returns false on a tiny pivot.
inline bool upper_unit_lower(const Mat& a, Mat& upper) {
  const Index m = a.rows();
  Mat j = Mat::Zero(m, m);
  for (Index i = 0; i < m; ++i) j(i, m - 1 - i) = 1.0;
  Mat t = (j * a * j).transpose();
  Mat l = Mat::Identity(m, m), u = t;
  for (Index c = 0; c < m; ++c) {
    if (std::abs(u(c, c)) < 1e-12 * std::max(1.0, a.norm())) return false;
    for (Index r = c + 1; r < m; ++r) {
      cd f = u(r, c) / u(c, c);
      l(r, c) = f;
      u.row(r) -= f * u.row(c);
    }
  }
  upper = j * u.transpose() * j;
  return true;
}

// Fixes the non-unique factors: M-(inf) = I when every index is equal,
// otherwise M-(inf) unit lower triangular when the decomposition exists.
inline void normalize_factors(WHFactorization& f) {
  const Index m = f.size();
  if (m < 2) return;
  Mat a = f.m_minus.num().coeff(0);
  bool equal = std::all_of(f.kappa.begin(), f.kappa.end(), [&](int k) { return k == f.kappa.front(); });
  Mat cinv;
  if (equal) {
    cinv = a;
  } else if (!upper_unit_lower(a, cinv)) {
    return;
  }
  Mat c = cinv.inverse();
  LaurentMatrix shift(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index jj = 0; jj < m; ++jj) {
      if (cinv(i, jj) == cd(0.0)) continue;
      Mat e = Mat::Zero(m, m);
      e(i, jj) = cinv(i, jj);
      shift.add_to(f.kappa[static_cast<size_t>(i)] - f.kappa[static_cast<size_t>(jj)], e);
    }
  f.m_plus = f.m_plus * shift;
  f.m_minus = LaurentMatrix::constant(c) * f.m_minus;
  f.m_minus_inv = f.m_minus_inv * LaurentMatrix::constant(cinv);
}

struct SectionAttempt {
  std::vector<int> kappa;
  std::vector<Vec> columns;
};

inline SectionAttempt section_profile(const LaurentMatrix& m, int n) {
  const Index dim = m.rows();
  const int deg = m.hi() - m.lo();
  int k_lo = -(static_cast<int>(dim) * deg + 1);
  for (int guard = 0; decaying_kernel(m, k_lo, n).cols() > 0; ++guard) {
    if (guard > 8) throw ConvergenceError("section_profile: kernel never empties");
    k_lo -= static_cast<int>(dim) * deg + 1;
  }
  SectionAttempt out;
  Mat q(dim, 0);
  const int k_hi = static_cast<int>(dim) * deg + 1 + (-k_lo);
  // The kernel dimension is nondecreasing in k, so bisect for the first
  // nonempty one.
  int a = k_lo, b = k_hi;
  Mat first;
  while (b - a > 1) {
    const int mid = a + (b - a) / 2;
    Mat g = decaying_kernel(m, mid, n);
    if (g.cols() > 0) {
      b = mid;
      first = std::move(g);
    } else {
      a = mid;
    }
  }
  for (int k = b; k <= k_hi && static_cast<Index>(out.columns.size()) < dim; ++k) {
    Mat g = (k == b && first.size() > 0) ? first : decaying_kernel(m, k, n);
    long expected = 0;
    for (int kap : out.kappa) expected += std::max(0, kap + k);
    Mat e = g.topRows(dim);
    Mat proj = e - q * (q.adjoint() * e);
    Index fresh = 0;
    Mat v;
    if (g.cols() > 0) {
      Eigen::JacobiSVD<Mat> svd(proj, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      while (fresh < sv.size() && sv(fresh) > 1e-7) ++fresh;
      v = svd.matrixV();
    }
    if (g.cols() != expected + fresh) throw ConvergenceError("section_profile: inconsistent kernel dimensions");
    for (Index t = 0; t < fresh; ++t) {
      Vec col = g * v.col(t);
      col /= col.norm();
      out.columns.push_back(col);
      out.kappa.push_back(1 - k);
      Mat qn(dim, q.cols() + 1);
      qn << q, col.head(dim);
      q = orthonormal_columns(qn);
    }
  }
  if (static_cast<Index>(out.columns.size()) != dim) throw ConvergenceError("section_profile: incomplete index profile");
  return out;
}

inline WHFactorization section_factor(const LaurentMatrix& m, const ScalarRational& det, int winding, int n) {
  const Index dim = m.rows();
  SectionAttempt att = section_profile(m, n);
  int sum = std::accumulate(att.kappa.begin(), att.kappa.end(), 0);
  if (sum != winding) throw ConvergenceError("section_factor: index sum differs from the winding number");

  LaurentMatrix phi(dim, dim);
  for (Index c = 0; c < dim; ++c)
    for (int j = 0; j <= n; ++j) {
      Mat e = Mat::Zero(dim, dim);
      e.col(c) = att.columns[static_cast<size_t>(c)].segment(j * dim, dim);
      phi.add_to(-j, e);
    }
  WHFactorization f;
  f.kappa = att.kappa;
  f.section_N = n;
  LaurentMatrix mp = m * phi * f.m0_inv();
  f.m_plus = mp.window(0, std::max(0, mp.hi()));
  f.m_plus.prune(1e-11 * symbol_scale(m));

  // Exact inverse of M-: with det M = lead z^(power+n_in) q(z) d_-(z^-1),
  // M-^-1 = adj(M) M+ M0 / (lead z^(power+n_in) q(z)) / d_-.
  std::vector<RootCluster> inside, outside;
  for (const auto& r : det.zeros()) (classify_root(r.value, det.tolerances().circle) == RootSide::Inside ? inside : outside).push_back(r);
  int n_in = 0;
  for (const auto& r : inside) n_in += r.mult;
  LaurentPoly dminus = expand_factors(inside, -1, false);
  LaurentPoly qz = LaurentPoly::constant(1.0);
  for (const auto& r : outside)
    for (int t = 0; t < r.mult; ++t) qz = qz * LaurentPoly(0, {-r.value, 1.0});
  const int shift = det.power() + n_in;
  LaurentMatrix p = lm_adjugate(m) * f.m_plus * f.m0();
  LaurentMatrix npoly(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) {
      LaurentPoly e = p.entry(i, j);
      if (e.is_zero()) continue;
      e.lo -= shift;
      e = (1.0 / det.lead()) * e;
      LaurentPoly u = divide_ascending(e, qz);
      if (!u.is_zero()) npoly.set_entry(i, j, u);
    }
  npoly.prune(1e-12 * symbol_scale(npoly));
  if (npoly.is_zero() || npoly.hi() > 0) throw ConvergenceError("section_factor: M- inverse is not causal");
  LaurentPoly dn = lm_det_poly(npoly);
  if (dn.is_zero() || dn.hi() != 0 || std::abs(dn.coeff(0)) < 1e-12) throw ConvergenceError("section_factor: M-(inf) is singular");
  f.m_minus_inv = RationalMatrix(npoly, dminus);
  f.m_minus = RationalMatrix(scale_by(dminus, lm_adjugate(npoly)), dn);
  f.backend = "toeplitz-numeric";
  return f;
}

inline double largest_inside_root(const ScalarRational& det) {
  double rho = 0.0;
  for (const auto& r : det.zeros())
    if (classify_root(r.value, det.tolerances().circle) == RootSide::Inside) rho = std::max(rho, std::abs(r.value));
  return rho;
}

}  // namespace detail

// Factorization of a square Laurent polynomial symbol. Scalar and diagonal
// symbols are factored exactly; everything else goes through finite sections
// of the shifted Toeplitz operators, doubling N until the residual certifies.
inline WHFactorization whf_matrix(const LaurentMatrix& m, const Tolerances& tol = default_tolerances()) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError("whf_matrix: symbol must be square");
  ScalarRational det = lm_det(m, tol);
  if (det.is_zero()) throw CircleSingularError("whf_matrix: determinant vanishes identically", {});
  if (det.circle_singular()) throw CircleSingularError("whf_matrix: determinant has roots on the unit circle", det.circle_points());
  const int winding = winding_number(det);
  const double limit = tol.factor * detail::symbol_scale(m);
  if (m.rows() == 1) return detail::from_scalar(m, tol);
  if (detail::is_diagonal(m)) {
    WHFactorization f = detail::diagonal_factor(m, tol);
    detail::normalize_factors(f);
    f.residual_sup = factor_residual(m, f, tol.grid);
    if (f.residual_sup <= limit) return f;
  }
  double rho = detail::largest_inside_root(det);
  int n = tol.section_start;
  if (rho > 0.0) n = std::max(n, static_cast<int>(std::ceil(2.0 * std::log(1e-10) / std::log(rho))));
  n = std::max(n, 4 * (m.hi() - m.lo()) + 4);
  std::string last = "not attempted";
  for (; n <= tol.section_max; n *= 2) {
    try {
      WHFactorization f = detail::section_factor(m, det, winding, n);
      detail::normalize_factors(f);
      f.residual_sup = factor_residual(m, f, tol.grid);
      if (f.residual_sup <= limit) return f;
      last = "residual " + std::to_string(f.residual_sup) + " at N=" + std::to_string(n);
    } catch (const ConvergenceError& e) {
      last = std::string(e.what()) + " at N=" + std::to_string(n);
    }
  }
  throw UnfactorableError("whf_matrix: unfactorable at precision (" + last + ")");
}

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct FactorizationReport {
  std::vector<Check> checks;
  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline FactorizationReport verify_factorization(const LaurentMatrix& m, const WHFactorization& f, const Tolerances& tol = default_tolerances()) {
  if (m.rows() != f.size() || m.cols() != f.size()) throw DimensionError("verify_factorization: dimension mismatch");
  FactorizationReport rep;
  double res = factor_residual(m, f, tol.grid);
  double limit = tol.factor * detail::symbol_scale(m);
  rep.checks.push_back({"residual", res, limit, res <= limit});

  ScalarRational dp = lm_det(f.m_plus, tol);
  double min_plus = std::numeric_limits<double>::infinity();
  for (const auto& r : dp.zeros()) min_plus = std::min(min_plus, std::abs(r.value));
  bool plus_ok = !dp.is_zero() && dp.power() == 0 && min_plus > 1.0 + tol.circle;
  rep.checks.push_back({"plus_roots_outside", min_plus, 1.0 + tol.circle, plus_ok});

  LaurentPoly dn = lm_det_poly(f.m_minus.num());
  double max_minus = 0.0;
  bool minus_ok = !dn.is_zero() && dn.hi() == 0;
  if (minus_ok) {
    ScalarRational dm(dn, LaurentPoly::constant(1.0), tol);
    for (const auto& r : dm.zeros()) max_minus = std::max(max_minus, std::abs(r.value));
  }
  max_minus = std::max(max_minus, f.m_minus.decay_radius());
  minus_ok = minus_ok && max_minus < 1.0 - tol.circle;
  rep.checks.push_back({"minus_roots_inside", max_minus, 1.0 - tol.circle, minus_ok});

  bool sorted = std::is_sorted(f.kappa.begin(), f.kappa.end(), std::greater<int>());
  rep.checks.push_back({"kappa_sorted", sorted ? 0.0 : 1.0, 0.0, sorted});
  try {
    int w = winding_number(lm_det(m, tol));
    double gap = std::abs(double(w - f.kappa_sum()));
    rep.checks.push_back({"index_sum_equals_winding", gap, 0.0, gap == 0.0});
  } catch (const std::exception&) {
    rep.checks.push_back({"index_sum_equals_winding", 1.0, 0.0, false});
  }
  return rep;
}

struct GenericityReport {
  std::vector<int> kappa;
  bool is_generic = true;
  std::string sign_class;
};

inline GenericityReport genericity_check(const std::vector<int>& kappa) {
  GenericityReport g;
  g.kappa = kappa;
  if (kappa.empty()) {
    g.sign_class = "zero";
    return g;
  }
  auto [lo, hi] = std::minmax_element(kappa.begin(), kappa.end());
  g.is_generic = (*hi - *lo) <= 1;
  if (*lo == 0 && *hi == 0) g.sign_class = "zero";
  else if (*lo >= 0) g.sign_class = "all-nonnegative";
  else if (*hi <= 0) g.sign_class = "all-nonpositive";
  else g.sign_class = "mixed";
  return g;
}

// Smallest eigenvalue of the Hermitian part of S over the grid; throws
// NonPositiveError at the first point below tol.pd.
inline void require_positive(const LaurentMatrix& s, const Tolerances& tol = default_tolerances()) {
  UnitCircleGrid g = UnitCircleGrid::for_span(s.hi() - s.lo(), tol.grid);
  for (cd z : g.points()) {
    Mat v = s.eval_any(z);
    Mat h = 0.5 * (v + v.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < tol.pd) throw NonPositiveError("spectral_factor: symbol is not positive definite on the circle", z);
  }
}

// W with support s <= 0, W(inf) lower triangular with positive diagonal and
// W W^* = S. Runs the innovations recursion on the autocovariances
// Gamma(h) = S_{-h}, which is the block Cholesky of the Toeplitz matrix built
// one row at a time, until the last row stops changing.
inline LaurentMatrix spectral_factor(const LaurentMatrix& s, const Tolerances& tol = default_tolerances()) {
  if (s.rows() != s.cols()) throw DimensionError("spectral_factor: symbol must be square");
  if (s.is_zero()) throw NonPositiveError("spectral_factor: zero symbol", cd(1.0));
  require_positive(s, tol);
  const Index m = s.rows();
  const int q = std::max(s.hi(), -s.lo());
  auto gamma = [&](int h) { return s.coeff(-h); };
  LaurentMatrix w(m, m);
  if (q == 0) {
    Mat h = 0.5 * (s.coeff(0) + s.coeff(0).adjoint());
    w.set(0, Mat(h.llt().matrixL()));
    return w;
  }
  const int ring = q + 1;
  std::vector<std::vector<Mat>> theta(static_cast<size_t>(ring), std::vector<Mat>(static_cast<size_t>(q + 1), Mat::Zero(m, m)));
  std::vector<Mat> v(static_cast<size_t>(ring));
  std::vector<Eigen::LLT<Mat>> vllt(static_cast<size_t>(ring));
  auto slot = [&](int k) { return static_cast<size_t>(k % ring); };
  v[0] = 0.5 * (gamma(0) + gamma(0).adjoint());
  vllt[0].compute(v[0]);
  const double scale = std::max(1.0, v[0].norm());
  const int max_steps = 1 << 20;
  int n = 1;
  bool converged = false;
  for (; n < max_steps; ++n) {
    std::vector<Mat>& th = theta[slot(n)];
    for (auto& t : th) t.setZero();
    const int start = std::max(0, n - q);
    for (int k = start; k < n; ++k) {
      Mat acc = gamma(n - k);
      for (int j = start; j < k; ++j) acc -= th[static_cast<size_t>(n - j)] * v[slot(j)] * theta[slot(k)][static_cast<size_t>(k - j)].adjoint();
      th[static_cast<size_t>(n - k)] = vllt[slot(k)].solve(acc.adjoint()).adjoint();
    }
    Mat vn = gamma(0);
    for (int j = start; j < n; ++j) vn -= th[static_cast<size_t>(n - j)] * v[slot(j)] * th[static_cast<size_t>(n - j)].adjoint();
    vn = 0.5 * (vn + vn.adjoint());
    double diff = (vn - v[slot(n - 1)]).norm();
    if (n > q)
      for (int i = 1; i <= q; ++i) diff += (th[static_cast<size_t>(i)] - theta[slot(n - 1)][static_cast<size_t>(i)]).norm();
    v[slot(n)] = vn;
    vllt[slot(n)].compute(vn);
    if (vllt[slot(n)].info() != Eigen::Success) throw NonPositiveError("spectral_factor: Toeplitz matrix lost positivity", cd(1.0));
    if (n > 2 * q && diff <= 1e-15 * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("spectral_factor: innovations recursion did not converge");
  Mat l = vllt[slot(n)].matrixL();
  w.set(0, l);
  for (int i = 1; i <= q; ++i) w.set(-i, theta[slot(n)][static_cast<size_t>(i)] * l);
  w.prune(tol.drop);
  double res = sup_norm(w * w.adjoint() - s, tol.grid);
  if (res > tol.factor * scale) throw ConvergenceError("spectral_factor: certificate failed, residual " + std::to_string(res));
  return w;
}

// Left version: S = W^* W with W supported on s <= 0.
inline LaurentMatrix spectral_factor_left(const LaurentMatrix& s, const Tolerances& tol = default_tolerances()) {
  return spectral_factor(s.sharp(), tol).sharp();
}

}  // namespace lrem
