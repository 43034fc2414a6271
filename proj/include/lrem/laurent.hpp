#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "config.hpp"

namespace lrem {

// Scalar Laurent polynomial sum_k c[k] z^(lo+k).
struct LaurentPoly {
  int lo = 0;
  std::vector<cd> c;

  LaurentPoly() = default;
  LaurentPoly(int lo_, std::vector<cd> c_) : lo(lo_), c(std::move(c_)) {}
  static LaurentPoly constant(cd a) { return LaurentPoly(0, {a}); }
  static LaurentPoly monomial(cd a, int p) { return LaurentPoly(p, {a}); }

  bool is_zero() const { return c.empty(); }
  int hi() const { return lo + static_cast<int>(c.size()) - 1; }
  cd coeff(int s) const {
    if (s < lo || s > hi()) return 0.0;
    return c[static_cast<size_t>(s - lo)];
  }

  // Drops leading and trailing coefficients with modulus <= tol.
  LaurentPoly& trim(double tol = 0.0) {
    size_t a = 0, b = c.size();
    while (a < b && std::abs(c[a]) <= tol) ++a;
    while (b > a && std::abs(c[b - 1]) <= tol) --b;
    if (a == b) {
      c.clear();
      lo = 0;
      return *this;
    }
    c = std::vector<cd>(c.begin() + static_cast<long>(a), c.begin() + static_cast<long>(b));
    lo += static_cast<int>(a);
    return *this;
  }

  cd eval(cd z) const {
    if (c.empty()) return 0.0;
    cd acc = 0.0;
    for (size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
    return acc * std::pow(z, lo);
  }
};

inline LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  LaurentPoly r(a.lo + b.lo, std::vector<cd>(a.c.size() + b.c.size() - 1, 0.0));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

inline LaurentPoly operator+(const LaurentPoly& a, const LaurentPoly& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  int lo = std::min(a.lo, b.lo), hi = std::max(a.hi(), b.hi());
  LaurentPoly r(lo, std::vector<cd>(static_cast<size_t>(hi - lo + 1), 0.0));
  for (int s = lo; s <= hi; ++s) r.c[static_cast<size_t>(s - lo)] = a.coeff(s) + b.coeff(s);
  return r;
}

inline LaurentPoly operator*(cd k, LaurentPoly a) {
  for (auto& v : a.c) v *= k;
  return a;
}

inline LaurentPoly operator-(const LaurentPoly& a, const LaurentPoly& b) { return a + cd(-1.0) * b; }

// Matrix Laurent polynomial sum_s M_s z^s with finite support [lo, hi].
class LaurentMatrix {
 public:
  LaurentMatrix() = default;
  LaurentMatrix(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  static LaurentMatrix constant(const Mat& a) {
    LaurentMatrix r(a.rows(), a.cols());
    r.set(0, a);
    return r;
  }
  static LaurentMatrix monomial(const Mat& a, int power) {
    LaurentMatrix r(a.rows(), a.cols());
    r.set(power, a);
    return r;
  }
  static LaurentMatrix identity(Index m) { return constant(Mat::Identity(m, m)); }
  static LaurentMatrix from_poly(const LaurentPoly& p) {
    LaurentMatrix r(1, 1);
    for (size_t k = 0; k < p.c.size(); ++k) r.set(p.lo + static_cast<int>(k), Mat::Constant(1, 1, p.c[k]));
    return r;
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool is_zero() const { return c_.empty(); }
  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(c_.size()) - 1; }

  Mat coeff(int s) const {
    if (c_.empty() || s < lo_ || s > hi()) return Mat::Zero(rows_, cols_);
    return c_[static_cast<size_t>(s - lo_)];
  }
  // Direct access for s inside [lo, hi].
  const Mat& at(int s) const { return c_[static_cast<size_t>(s - lo_)]; }
  Mat& at(int s) { return c_[static_cast<size_t>(s - lo_)]; }

  void set(int s, const Mat& a) {
    if (a.rows() != rows_ || a.cols() != cols_) throw DimensionError("LaurentMatrix::set: shape mismatch");
    extend(s);
    at(s) = a;
  }
  void add_to(int s, const Mat& a) {
    extend(s);
    at(s) += a;
  }

  // Zeroes coefficients below tol and trims the support.
  LaurentMatrix& prune(double tol) {
    for (auto& m : c_)
      if (m.norm() < tol) m.setZero();
    size_t a = 0, b = c_.size();
    while (a < b && c_[a].isZero(0.0)) ++a;
    while (b > a && c_[b - 1].isZero(0.0)) --b;
    if (a == b) {
      c_.clear();
      lo_ = 0;
      return *this;
    }
    c_ = std::vector<Mat>(c_.begin() + static_cast<long>(a), c_.begin() + static_cast<long>(b));
    lo_ += static_cast<int>(a);
    return *this;
  }

  // Evaluation without the unit-circle check; Horner on split powers.
  Mat eval_any(cd z) const {
    Mat acc = Mat::Zero(rows_, cols_);
    if (c_.empty()) return acc;
    int h = hi();
    if (h >= 0) {
      for (int s = h; s >= std::max(lo_, 0); --s) acc = acc * z + at(s);
      if (lo_ > 0) acc *= std::pow(z, lo_);
    }
    if (lo_ < 0) {
      Mat neg = Mat::Zero(rows_, cols_);
      cd w = 1.0 / z;
      int top = std::min(h, -1);
      for (int s = lo_; s <= top; ++s) neg = neg * w + at(s);
      if (top < -1) neg *= std::pow(w, -top);
      else neg *= w;
      acc += neg;
    }
    return acc;
  }

  Mat eval(cd z) const {
    if (std::abs(std::abs(z) - 1.0) > 1e-12) throw OffCircleError("lm_eval: point is not on the unit circle");
    return eval_any(z);
  }

  LaurentMatrix adjoint() const {
    LaurentMatrix r(cols_, rows_);
    for (int s = lo_; s <= hi(); ++s) r.set(-s, at(s).adjoint());
    return r;
  }

  // Coefficient-wise transpose: sum_s M_s^T z^s.
  LaurentMatrix sharp() const {
    LaurentMatrix r(cols_, rows_);
    for (int s = lo_; s <= hi(); ++s) r.set(s, at(s).transpose());
    return r;
  }

  LaurentMatrix shifted(int k) const {
    LaurentMatrix r = *this;
    r.lo_ += k;
    return r;
  }

  LaurentMatrix block(Index i, Index j, Index p, Index q) const {
    LaurentMatrix r(p, q);
    for (int s = lo_; s <= hi(); ++s) r.set(s, at(s).block(i, j, p, q));
    return r;
  }

  // Restriction to powers in [a, b].
  LaurentMatrix window(int a, int b) const {
    LaurentMatrix r(rows_, cols_);
    for (int s = std::max(a, lo_); s <= std::min(b, hi()); ++s) r.set(s, at(s));
    return r;
  }

  LaurentPoly entry(Index i, Index j) const {
    LaurentPoly p(lo_, {});
    for (const auto& m : c_) p.c.push_back(m(i, j));
    return p.trim(0.0);
  }

  void set_entry(Index i, Index j, const LaurentPoly& p) {
    for (int s = lo_; s <= hi(); ++s) at(s)(i, j) = 0.0;
    for (size_t k = 0; k < p.c.size(); ++k) {
      int s = p.lo + static_cast<int>(k);
      extend(s);
      at(s)(i, j) = p.c[k];
    }
  }

  // Imaginary parts at most rel times the largest coefficient modulus.
  bool is_real(double rel = 0.0) const {
    double scale = 0.0;
    for (const auto& m : c_) scale = std::max(scale, m.cwiseAbs().maxCoeff());
    for (const auto& m : c_)
      if (m.imag().cwiseAbs().maxCoeff() > rel * scale) return false;
    return true;
  }

 private:
  void extend(int s) {
    if (c_.empty()) {
      lo_ = s;
      c_.assign(1, Mat::Zero(rows_, cols_));
      return;
    }
    if (s < lo_) {
      c_.insert(c_.begin(), static_cast<size_t>(lo_ - s), Mat::Zero(rows_, cols_));
      lo_ = s;
    } else if (s > hi()) {
      c_.resize(static_cast<size_t>(s - lo_ + 1), Mat::Zero(rows_, cols_));
    }
  }

  Index rows_ = 0, cols_ = 0;
  int lo_ = 0;
  std::vector<Mat> c_;
};

inline LaurentMatrix lm_mul(const LaurentMatrix& a, const LaurentMatrix& b, double drop = default_tolerances().drop) {
  if (a.cols() != b.rows()) throw DimensionError("lm_mul: inner dimensions differ");
  LaurentMatrix r(a.rows(), b.cols());
  if (a.is_zero() || b.is_zero()) return r;
  for (int s = a.lo(); s <= a.hi(); ++s) {
    if (a.at(s).isZero(0.0)) continue;
    for (int t = b.lo(); t <= b.hi(); ++t) r.add_to(s + t, a.at(s) * b.at(t));
  }
  return r.prune(drop);
}

inline LaurentMatrix operator*(const LaurentMatrix& a, const LaurentMatrix& b) { return lm_mul(a, b); }

inline LaurentMatrix operator+(const LaurentMatrix& a, const LaurentMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("LaurentMatrix +: shape mismatch");
  LaurentMatrix r = a;
  for (int s = b.lo(); !b.is_zero() && s <= b.hi(); ++s) r.add_to(s, b.at(s));
  return r.prune(default_tolerances().drop);
}

inline LaurentMatrix operator*(cd k, const LaurentMatrix& a) {
  LaurentMatrix r(a.rows(), a.cols());
  for (int s = a.lo(); !a.is_zero() && s <= a.hi(); ++s) r.set(s, k * a.at(s));
  return r.prune(default_tolerances().drop);
}

inline LaurentMatrix operator*(const Mat& k, const LaurentMatrix& a) { return LaurentMatrix::constant(k) * a; }
inline LaurentMatrix operator*(const LaurentMatrix& a, const Mat& k) { return a * LaurentMatrix::constant(k); }

inline LaurentMatrix operator-(const LaurentMatrix& a, const LaurentMatrix& b) { return a + cd(-1.0) * b; }

inline LaurentMatrix lm_adjoint(const LaurentMatrix& a) { return a.adjoint(); }

inline Mat lm_eval(const LaurentMatrix& a, cd z) { return a.eval(z); }

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_power_of_two(long n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Equispaced points exp(2 pi i k / N) on the unit circle.
class UnitCircleGrid {
 public:
  explicit UnitCircleGrid(int n = default_tolerances().grid) : n_(n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("UnitCircleGrid: N must be a power of two");
    z_.resize(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) z_[static_cast<size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
  }
  // Smallest admissible grid for a symbol of the given support width.
  static UnitCircleGrid for_span(int span, int at_least = default_tolerances().grid) {
    return UnitCircleGrid(std::max(at_least, next_power_of_two(4L * span + 4)));
  }
  int size() const { return n_; }
  cd operator[](int k) const { return z_[static_cast<size_t>(k)]; }
  const std::vector<cd>& points() const { return z_; }

  std::vector<Mat> eval(const LaurentMatrix& a) const {
    if (!a.is_zero() && n_ < 4 * (a.hi() - a.lo()) + 4) throw std::invalid_argument("UnitCircleGrid: grid too coarse");
    std::vector<Mat> out;
    out.reserve(z_.size());
    for (cd z : z_) out.push_back(a.eval_any(z));
    return out;
  }

 private:
  int n_;
  std::vector<cd> z_;
};

// Interpolates a Laurent polynomial with support in [lo, hi] from samples
// at the (hi-lo+1)-th roots of unity.
template <class Sampler>
LaurentMatrix interpolate(Index rows, Index cols, int lo, int hi, Sampler&& sample, double drop = default_tolerances().drop) {
  const int p = hi - lo + 1;
  std::vector<cd> z(static_cast<size_t>(p));
  std::vector<Mat> v(static_cast<size_t>(p));
  for (int k = 0; k < p; ++k) {
    z[static_cast<size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / p);
    v[static_cast<size_t>(k)] = sample(z[static_cast<size_t>(k)]);
  }
  LaurentMatrix r(rows, cols);
  for (int j = 0; j < p; ++j) {
    Mat acc = Mat::Zero(rows, cols);
    const int s = lo + j;
    for (int k = 0; k < p; ++k) acc += v[static_cast<size_t>(k)] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(s) / p);
    r.set(s, acc / double(p));
  }
  return r.prune(drop);
}

namespace detail {
inline std::pair<int, int> det_support(const LaurentMatrix& a) {
  int lo = 0, hi = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    int rl = 0, rh = -1;
    bool found = false;
    for (int s = a.lo(); !a.is_zero() && s <= a.hi(); ++s) {
      if (a.at(s).row(i).isZero(0.0)) continue;
      if (!found) rl = s;
      rh = s;
      found = true;
    }
    if (!found) return {0, -1};
    lo += rl;
    hi += rh;
  }
  return {lo, hi};
}

inline cd small_det(const Mat& a) {
  if (a.rows() == 0) return 1.0;
  if (a.rows() == 1) return a(0, 0);
  if (a.rows() == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return a.partialPivLu().determinant();
}

inline Mat small_adjugate(const Mat& a) {
  const Index m = a.rows();
  Mat r(m, m);
  if (m == 1) {
    r(0, 0) = 1.0;
    return r;
  }
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      Mat minor(m - 1, m - 1);
      for (Index p = 0, pi = 0; p < m; ++p) {
        if (p == j) continue;
        for (Index q = 0, qi = 0; q < m; ++q) {
          if (q == i) continue;
          minor(pi, qi++) = a(p, q);
        }
        ++pi;
      }
      r(i, j) = (((i + j) % 2) ? -1.0 : 1.0) * small_det(minor);
    }
  return r;
}
}  // namespace detail

// Determinant as a scalar Laurent polynomial by evaluation-interpolation.
inline LaurentPoly lm_det_poly(const LaurentMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("lm_det: matrix is not square");
  auto [lo, hi] = detail::det_support(a);
  if (hi < lo) return {};
  LaurentMatrix d = interpolate(1, 1, lo, hi, [&](cd z) { return Mat::Constant(1, 1, detail::small_det(a.eval_any(z))); });
  // Cancelled edge coefficients come back as rounding noise, which would add
  // spurious roots near 0 and infinity. Hadamard's bound sets the noise scale.
  double bound = 1.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (int s = a.lo(); s <= a.hi(); ++s) row += a.at(s).row(i).norm();
    bound *= row;
  }
  return d.entry(0, 0).trim(default_tolerances().drop * bound);
}

inline LaurentMatrix lm_adjugate(const LaurentMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("lm_adjugate: matrix is not square");
  const Index m = a.rows();
  if (m == 1) return LaurentMatrix::identity(1);
  if (a.is_zero()) return LaurentMatrix(m, m);
  int lo = static_cast<int>(m - 1) * a.lo(), hi = static_cast<int>(m - 1) * a.hi();
  return interpolate(m, m, lo, hi, [&](cd z) { return detail::small_adjugate(a.eval_any(z)); });
}

// Exact coefficient-space inner product sum_s trace(A_s B_s^*).
inline cd l2_inner(const LaurentMatrix& a, const LaurentMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("l2_inner: shape mismatch");
  cd acc = 0.0;
  if (a.is_zero() || b.is_zero()) return acc;
  for (int s = std::max(a.lo(), b.lo()); s <= std::min(a.hi(), b.hi()); ++s)
    acc += (a.at(s).array() * b.at(s).conjugate().array()).sum();
  return acc;
}

inline double l2_norm(const LaurentMatrix& a) { return std::sqrt(std::max(0.0, l2_inner(a, a).real())); }

// Max of the Frobenius norm over the grid; a lower bound for the true sup.
inline double sup_norm(const LaurentMatrix& a, int n = default_tolerances().grid) {
  if (a.is_zero()) return 0.0;
  UnitCircleGrid g = UnitCircleGrid::for_span(a.hi() - a.lo(), n);
  double best = 0.0;
  for (cd z : g.points()) best = std::max(best, a.eval_any(z).norm());
  return best;
}

}  // namespace lrem
