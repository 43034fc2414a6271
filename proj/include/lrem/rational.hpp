#pragma once

#include <algorithm>
#include <cmath>

#include "roots.hpp"

namespace lrem {

// Element of H_0: a matrix series in z^-1 truncated to finitely many terms,
// with a bound on the l2 mass of the discarded tail.
struct HardyElement {
  LaurentMatrix f;
  double tail = 0.0;

  HardyElement() = default;
  explicit HardyElement(LaurentMatrix g, double t = 0.0) : f(std::move(g)), tail(t) {
    if (!f.is_zero() && f.hi() > 0) throw std::invalid_argument("HardyElement: positive powers present");
  }
  Index rows() const { return f.rows(); }
  Index cols() const { return f.cols(); }
};

// Matrix rational function num(z) / den(z), where den is a scalar polynomial
// in z^-1 normalized to den(inf) = 1. When den has all roots inside the disk
// the object is a causal transfer function with an exact series expansion.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  explicit RationalMatrix(LaurentMatrix num, LaurentPoly den = LaurentPoly::constant(1.0), double tail = 0.0)
      : num_(std::move(num)), den_(std::move(den)), tail_(tail) {
    normalize();
  }
  static RationalMatrix from_hardy(const HardyElement& h) { return RationalMatrix(h.f, LaurentPoly::constant(1.0), h.tail); }

  const LaurentMatrix& num() const { return num_; }
  const LaurentPoly& den() const { return den_; }
  double tail() const { return tail_; }
  Index rows() const { return num_.rows(); }
  Index cols() const { return num_.cols(); }
  bool is_polynomial() const { return den_.c.size() == 1; }

  Mat eval(cd z) const { return num_.eval_any(z) / den_.eval(z); }

  // Largest modulus among the roots of den (0 for a polynomial).
  double decay_radius() const {
    if (is_polynomial()) return 0.0;
    double r = 0.0;
    for (cd x : poly_roots(den_.c)) r = std::max(r, std::abs(x));
    return r;
  }

  // Expansion coefficients for powers num.hi() down to low (inclusive).
  LaurentMatrix expand(int low) const {
    LaurentMatrix out(rows(), cols());
    if (num_.is_zero()) return out;
    const int top = num_.hi();
    std::vector<Mat> f(static_cast<size_t>(std::max(0, top - low + 1)), Mat::Zero(rows(), cols()));
    const int dl = den_.lo;  // den = 1 + d_{-1} z^-1 + ... + d_{dl} z^dl
    for (int p = top; p >= low; --p) {
      Mat acc = num_.coeff(p);
      for (int j = 1; j <= -dl; ++j) {
        int q = p + j;
        if (q > top) break;
        acc -= den_.coeff(-j) * f[static_cast<size_t>(top - q)];
      }
      f[static_cast<size_t>(top - p)] = acc;
    }
    for (int p = low; p <= top; ++p) out.set(p, f[static_cast<size_t>(top - p)]);
    return out;
  }

  // Truncated series with a certified tail: every retained power >= -depth,
  // discarded l2 mass below tol relative to the element norm.
  HardyElement to_hardy(double tol = default_tolerances().series) const {
    if (!num_.is_zero() && num_.hi() > 0) throw std::invalid_argument("RationalMatrix::to_hardy: positive powers present");
    if (num_.is_zero()) return HardyElement(LaurentMatrix(rows(), cols()), tail_);
    if (is_polynomial()) return HardyElement(LaurentMatrix(num_).prune(0.0), tail_);
    const double rho = decay_radius();
    if (rho >= 1.0) throw std::domain_error("RationalMatrix::to_hardy: denominator has roots outside the disk");
    int depth = -num_.lo() + static_cast<int>(std::ceil(std::log(tol) / std::log(std::max(rho, 1e-3)))) + 8;
    for (; depth < (1 << 20); depth *= 2) {
      LaurentMatrix full = expand(-2 * depth);
      double head = 0.0, rest = 0.0;
      for (int p = full.hi(); p >= full.lo(); --p) (p >= -depth ? head : rest) += full.at(p).squaredNorm();
      double last = full.at(full.lo()).norm();
      double tail = std::sqrt(rest) + (rho > 0 ? last * rho / (1.0 - rho) : 0.0);
      if (tail <= tol * std::max(1.0, std::sqrt(head))) {
        LaurentMatrix kept = full.window(-depth, full.hi());
        kept.prune(default_tolerances().drop * 1e-3);
        return HardyElement(kept, tail + tail_);
      }
    }
    throw ConvergenceError("RationalMatrix::to_hardy: series does not converge");
  }

  RationalMatrix adjust_tail(double t) const {
    RationalMatrix r = *this;
    r.tail_ = t;
    return r;
  }

  RationalMatrix prune(double tol = default_tolerances().drop) const {
    RationalMatrix r = *this;
    r.num_.prune(tol);
    return r;
  }

 private:
  void normalize() {
    den_.trim(0.0);
    if (den_.is_zero()) throw std::invalid_argument("RationalMatrix: zero denominator");
    // Clear positive powers of the denominator into the numerator.
    if (den_.hi() != 0) {
      int shift = den_.hi();
      den_.lo -= shift;
      num_ = num_.shifted(-shift);
    }
    cd d0 = den_.coeff(0);
    if (d0 != 1.0) {
      for (auto& v : den_.c) v /= d0;
      num_ = (1.0 / d0) * num_;
    }
    den_.trim(default_tolerances().drop);
  }

  LaurentMatrix num_;
  LaurentPoly den_ = LaurentPoly::constant(1.0);
  double tail_ = 0.0;
};

inline bool same_den(const LaurentPoly& a, const LaurentPoly& b) {
  if (a.lo != b.lo || a.c.size() != b.c.size()) return false;
  for (size_t k = 0; k < a.c.size(); ++k)
    if (std::abs(a.c[k] - b.c[k]) > 1e-15 * std::max(1.0, std::abs(a.c[k]))) return false;
  return true;
}

inline LaurentMatrix scale_by(const LaurentPoly& p, const LaurentMatrix& a) {
  LaurentMatrix r(a.rows(), a.cols());
  if (a.is_zero() || p.is_zero()) return r;
  for (size_t k = 0; k < p.c.size(); ++k)
    for (int s = a.lo(); s <= a.hi(); ++s) r.add_to(p.lo + static_cast<int>(k) + s, p.c[k] * a.at(s));
  return r.prune(default_tolerances().drop);
}

// Sum of coefficient norms; an upper bound for the sup norm on the circle.
inline double coeff_l1(const LaurentMatrix& p) {
  double s = 0.0;
  for (int k = p.lo(); !p.is_zero() && k <= p.hi(); ++k) s += p.at(k).norm();
  return s;
}

inline RationalMatrix operator*(const LaurentMatrix& p, const RationalMatrix& f) {
  return RationalMatrix(p * f.num(), f.den(), f.tail() > 0 ? coeff_l1(p) * f.tail() : 0.0);
}

inline RationalMatrix operator*(const RationalMatrix& f, const LaurentMatrix& p) {
  return RationalMatrix(f.num() * p, f.den(), f.tail() > 0 ? coeff_l1(p) * f.tail() : 0.0);
}

inline RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
  return RationalMatrix(a.num() * b.num(), a.den() * b.den(), a.tail() + b.tail());
}

inline RationalMatrix operator*(cd k, const RationalMatrix& a) {
  return RationalMatrix(k * a.num(), a.den(), std::abs(k) * a.tail());
}

inline RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("RationalMatrix +: shape mismatch");
  if (same_den(a.den(), b.den())) return RationalMatrix(a.num() + b.num(), a.den(), a.tail() + b.tail());
  return RationalMatrix(scale_by(b.den(), a.num()) + scale_by(a.den(), b.num()), a.den() * b.den(), a.tail() + b.tail());
}

inline RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b) { return a + cd(-1.0) * b; }

// [f]_-: exact projection onto nonpositive powers. With f = A/w and T the
// (finite) positive-power part of the expansion, [f]_- = (A - w T) / w.
inline RationalMatrix project_minus(const RationalMatrix& f) {
  const LaurentMatrix& a = f.num();
  if (a.is_zero() || a.hi() <= 0) return f;
  LaurentMatrix series = f.expand(1);
  LaurentMatrix t = series.window(1, series.hi());
  LaurentMatrix q = a - scale_by(f.den(), t);
  return RationalMatrix(q.window(q.lo(), 0), f.den(), f.tail());
}

// Inverse of a causal rational matrix: den * adj(num) / det(num).
inline RationalMatrix rational_inverse(const RationalMatrix& f) {
  if (f.rows() != f.cols()) throw DimensionError("rational_inverse: not square");
  LaurentPoly d = lm_det_poly(f.num());
  if (d.is_zero()) throw std::domain_error("rational_inverse: singular");
  return RationalMatrix(scale_by(f.den(), lm_adjugate(f.num())), d);
}

inline RationalMatrix inverse_of_polynomial(const LaurentMatrix& p) { return rational_inverse(RationalMatrix(p)); }

// Coefficients 0..depth of the power series (in z) of P^-1 for P analytic
// in z with P(0) invertible.
inline LaurentMatrix series_inverse_plus(const LaurentMatrix& p, int depth) {
  if (p.is_zero() || p.lo() < 0) throw std::invalid_argument("series_inverse_plus: expected a polynomial in z");
  const Index m = p.rows();
  Mat p0 = p.coeff(0);
  auto lu = p0.partialPivLu();
  if (std::abs(detail::small_det(p0)) < 1e-300) throw std::domain_error("series_inverse_plus: P(0) is singular");
  std::vector<Mat> x(static_cast<size_t>(depth + 1));
  for (int k = 0; k <= depth; ++k) {
    Mat rhs = Mat::Zero(m, m);
    if (k == 0) rhs.setIdentity();
    for (int s = 1; s <= std::min(k, p.hi()); ++s) rhs -= p.coeff(s) * x[static_cast<size_t>(k - s)];
    x[static_cast<size_t>(k)] = lu.solve(rhs);
  }
  LaurentMatrix r(m, m);
  for (int k = 0; k <= depth; ++k) r.set(k, x[static_cast<size_t>(k)]);
  return r;
}

}  // namespace lrem
