#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hardy.hpp"
#include "model.hpp"
#include "whf.hpp"

namespace lrem {

enum class SolutionKind { UniqueSolution, Indeterminate, NoSolutionGeneric, UnitCircleZero };

inline std::string to_string(SolutionKind k) {
  switch (k) {
    case SolutionKind::UniqueSolution: return "UniqueSolution";
    case SolutionKind::Indeterminate: return "Indeterminate";
    case SolutionKind::NoSolutionGeneric: return "NoSolutionGeneric";
    case SolutionKind::UnitCircleZero: return "UnitCircleZero";
  }
  return "?";
}

struct Classification {
  SolutionKind kind = SolutionKind::UniqueSolution;
  int dim = 0;              // kernel dimension when Indeterminate
  std::vector<cd> points;   // unit-circle zeros of det M
  bool coprime = true;      // rank [M(w) forcing(w)] = m at every such point
  std::vector<int> kappa;
  int winding = 0;

  std::string tag() const { return to_string(kind); }
  bool solvable() const { return kind == SolutionKind::UniqueSolution || kind == SolutionKind::Indeterminate; }
};

struct ClassificationError : std::runtime_error {
  Classification cls;
  ClassificationError(const std::string& what, Classification c) : std::runtime_error(what), cls(std::move(c)) {}
};

// Classification together with the factorization it was derived from.
struct Analysis {
  LaurentMatrix symbol;
  Classification cls;
  std::optional<WHFactorization> whf;
};

inline int rank_by_sv(const Mat& a, double tol) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  int k = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * std::max(1.0, s(0))) ++k;
  return k;
}

inline Analysis analyze(const ModelSpec& model, const ParamValues& theta = {}, const Tolerances& tol = default_tolerances()) {
  Analysis a;
  a.symbol = model.symbol(theta);
  ScalarRational det = lm_det(a.symbol, tol);
  if (det.is_zero() || det.circle_singular()) {
    a.cls.kind = SolutionKind::UnitCircleZero;
    a.cls.points = det.circle_points();
    a.cls.coprime = !det.is_zero();
    LaurentMatrix f = model.forcing_matrix();
    for (cd& w : a.cls.points) {
      w /= std::abs(w);
      Mat aug(model.m, model.m + f.cols());
      aug << a.symbol.eval(w), f.eval(w);
      if (rank_by_sv(aug, tol.rank) < model.m) a.cls.coprime = false;
    }
    return a;
  }
  a.whf = whf_matrix(a.symbol, tol);
  a.cls.kappa = a.whf->kappa;
  a.cls.winding = a.whf->kappa_sum();
  bool neg = false, pos = false;
  for (int k : a.cls.kappa) {
    neg = neg || k < 0;
    pos = pos || k > 0;
  }
  if (neg) a.cls.kind = SolutionKind::NoSolutionGeneric;
  else if (pos) {
    a.cls.kind = SolutionKind::Indeterminate;
    a.cls.dim = static_cast<int>(model.r()) * a.cls.winding;
  } else a.cls.kind = SolutionKind::UniqueSolution;
  return a;
}

inline Classification classify(const ModelSpec& model, const ParamValues& theta = {}, const Tolerances& tol = default_tolerances()) {
  return analyze(model, theta, tol).cls;
}

inline void require_solvable(const Analysis& a) {
  if (!a.cls.solvable()) throw ClassificationError("model is not solvable: " + a.cls.tag(), a.cls);
}

// Xi_0 = M-^-1 M0^-1 [M+^-1 forcing Gamma]_-.
inline RationalMatrix particular_from(const Analysis& a, const ModelSpec& model) {
  require_solvable(a);
  const WHFactorization& f = *a.whf;
  RationalMatrix rhs = model.rhs();
  HardyElement g = rhs.to_hardy();
  if (g.f.is_zero()) return RationalMatrix(LaurentMatrix(model.m, model.r()));
  const int depth = std::max(0, -g.f.lo());
  LaurentMatrix plus_inv = series_inverse_plus(f.m_plus, depth);
  LaurentMatrix h = lm_mul(plus_inv, g.f, 0.0);
  h = h.window(h.lo(), 0);
  LaurentMatrix u = f.m0_inv() * h;
  double tail = 0.0;
  if (g.tail > 0) {
    double minus_bound = 0.0;
    UnitCircleGrid grid(256);
    for (cd z : grid.points()) minus_bound = std::max(minus_bound, f.m_minus_inv.eval(z).norm());
    tail = g.tail * coeff_l1(plus_inv) * minus_bound;
  }
  return (f.m_minus_inv * u).adjust_tail(tail);
}

inline RationalMatrix solve_particular(const ModelSpec& model, const ParamValues& theta = {}, const Tolerances& tol = default_tolerances()) {
  return particular_from(analyze(model, theta, tol), model);
}

// M-^-1 z^-s E_ij for i = 1..m, j = 1..r, s = 0..kappa_i - 1, in that order.
inline std::vector<RationalMatrix> kernel_from(const Analysis& a, const ModelSpec& model) {
  require_solvable(a);
  const WHFactorization& f = *a.whf;
  std::vector<RationalMatrix> out;
  const Index r = model.r();
  for (Index i = 0; i < model.m; ++i)
    for (Index j = 0; j < r; ++j)
      for (int s = 0; s < f.kappa[static_cast<size_t>(i)]; ++s) {
        Mat e = Mat::Zero(model.m, r);
        e(i, j) = 1.0;
        out.push_back(f.m_minus_inv * LaurentMatrix::monomial(e, -s));
      }
  return out;
}

inline std::vector<RationalMatrix> kernel_basis(const ModelSpec& model, const ParamValues& theta = {}, const Tolerances& tol = default_tolerances()) {
  return kernel_from(analyze(model, theta, tol), model);
}

// Coefficient-space inner product of two causal transfer functions.
inline cd transfer_inner(const RationalMatrix& a, const RationalMatrix& b) { return l2_inner(a.to_hardy().f, b.to_hardy().f); }
inline double transfer_norm(const RationalMatrix& a) { return l2_norm(a.to_hardy().f); }

// G_kl = <chi_l, chi_k>.
inline Mat gram_matrix(const std::vector<RationalMatrix>& basis) {
  const Index k = static_cast<Index>(basis.size());
  std::vector<LaurentMatrix> e;
  for (const auto& b : basis) e.push_back(b.to_hardy().f);
  Mat g(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) g(i, j) = l2_inner(e[static_cast<size_t>(j)], e[static_cast<size_t>(i)]);
  return g;
}

inline double min_eigenvalue(const Mat& g) {
  if (g.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

struct SolutionSet {
  Classification cls;
  LaurentMatrix symbol;
  WHFactorization whf;
  RationalMatrix particular;
  std::vector<RationalMatrix> kernel;
  Mat gram;
  int dim = 0;
};

inline SolutionSet solve(const ModelSpec& model, const ParamValues& theta = {}, const Tolerances& tol = default_tolerances()) {
  Analysis a = analyze(model, theta, tol);
  require_solvable(a);
  SolutionSet s;
  s.cls = a.cls;
  s.symbol = a.symbol;
  s.whf = *a.whf;
  s.particular = particular_from(a, model);
  s.kernel = kernel_from(a, model);
  s.gram = gram_matrix(s.kernel);
  s.dim = static_cast<int>(s.kernel.size());
  return s;
}

inline RationalMatrix assemble_solution(const RationalMatrix& xi0, const std::vector<RationalMatrix>& basis, const std::vector<cd>& weights) {
  if (weights.size() != basis.size()) throw std::invalid_argument("assemble_solution: weights and basis differ in length");
  RationalMatrix out = xi0;
  for (size_t k = 0; k < basis.size(); ++k)
    if (weights[k] != cd(0.0)) out = out + weights[k] * basis[k];
  return out;
}

// Xi_0, ..., Xi_S of the expansion sum_s Xi_s z^-s.
inline std::vector<Mat> impulse_responses(const RationalMatrix& xi, int horizon) {
  if (horizon < 0) throw std::invalid_argument("impulse_responses: negative horizon");
  LaurentMatrix e = xi.expand(-horizon);
  std::vector<Mat> out;
  for (int s = 0; s <= horizon; ++s) out.push_back(e.coeff(-s));
  return out;
}

// l2 norm of [M Xi]_- minus the right-hand side, computed exactly.
inline double solution_residual(const LaurentMatrix& m, const RationalMatrix& xi, const RationalMatrix& rhs) {
  RationalMatrix d = project_minus(m * xi) - rhs;
  return transfer_norm(d);
}

}  // namespace lrem
