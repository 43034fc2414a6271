#pragma once

#include <Eigen/SVD>

#include "rational.hpp"

namespace lrem {

// [f]_-: keeps the coefficients with s <= 0.
inline HardyElement project_minus(const LaurentMatrix& f) {
  if (f.is_zero()) return HardyElement(f);
  return HardyElement(f.window(f.lo(), 0));
}

// V f = [z f]_-.
inline HardyElement op_V(const HardyElement& f) {
  HardyElement r = project_minus(f.f.shifted(1));
  r.tail = f.tail;
  return r;
}

// V^-1 f = z^-1 f.
inline HardyElement op_Vinv(const HardyElement& f) { return HardyElement(f.f.shifted(-1), f.tail); }

inline HardyElement op_V_pow(const HardyElement& f, int k) {
  if (k >= 0) {
    HardyElement r = project_minus(f.f.shifted(k));
    r.tail = f.tail;
    return r;
  }
  return HardyElement(f.f.shifted(k), f.tail);
}

// Symbol operator [M f]_-, with the tail bound scaled by a bound on |M|_inf.
inline HardyElement apply_symbol(const LaurentMatrix& m, const HardyElement& f) {
  if (m.cols() != f.rows()) throw DimensionError("apply_symbol: M.cols must equal f.rows");
  HardyElement r = project_minus(m * f.f);
  r.tail = f.tail > 0 ? coeff_l1(m) * f.tail : 0.0;
  return r;
}

inline cd hardy_inner(const HardyElement& a, const HardyElement& b) { return l2_inner(a.f, b.f); }
inline double hardy_norm(const HardyElement& a) { return l2_norm(a.f); }

// Finite section of f -> [M f]_- on coefficient indices 0..N, where block
// index j stands for the power z^-j. Block (i, j) holds M_{j-i}.
struct ToeplitzSlice {
  Mat a;
  int n = 0;
  Index block_rows = 0, block_cols = 0;
  int span = 0;  // hi - lo of the symbol

  // Stacks the coefficients f_0, f_-1, ..., f_-N of f into a column block.
  Mat stack(const HardyElement& f) const {
    Mat x = Mat::Zero((n + 1) * block_cols, f.cols());
    for (int j = 0; j <= n; ++j) x.middleRows(j * block_cols, block_cols) = f.f.coeff(-j);
    return x;
  }
  HardyElement unstack(const Mat& y) const {
    LaurentMatrix r(block_rows, y.cols());
    for (int i = 0; i <= n; ++i) r.set(-i, y.middleRows(i * block_rows, block_rows));
    return HardyElement(r.prune(0.0));
  }
  HardyElement apply(const HardyElement& f) const { return unstack(a * stack(f)); }

  // Number of singular values below rel * largest.
  int kernel_dimension(double rel = 1e-8) const {
    Eigen::BDCSVD<Mat> svd(a);
    const auto& sv = svd.singularValues();
    int k = static_cast<int>(a.cols() - sv.size());
    for (Index i = 0; i < sv.size(); ++i)
      if (sv(i) < rel * std::max(sv(0), 1e-300)) ++k;
    return k;
  }
};

inline ToeplitzSlice toeplitz_oracle(const LaurentMatrix& m, int n) {
  const int span = m.is_zero() ? 0 : m.hi() - m.lo();
  if (n < 4 * span || n < 1) throw std::invalid_argument("toeplitz_oracle: N must be at least 4 (hi - lo)");
  ToeplitzSlice t;
  t.n = n;
  t.block_rows = m.rows();
  t.block_cols = m.cols();
  t.span = span;
  t.a = Mat::Zero((n + 1) * m.rows(), (n + 1) * m.cols());
  for (int i = 0; i <= n; ++i)
    for (int s = m.lo(); !m.is_zero() && s <= m.hi(); ++s) {
      int j = s + i;
      if (j < 0 || j > n) continue;
      t.a.block(i * m.rows(), j * m.cols(), m.rows(), m.cols()) = m.at(s);
    }
  return t;
}

}  // namespace lrem
