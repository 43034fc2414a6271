#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "regularizer.hpp"

namespace lrem {

// Causal m x r transfer function sum_s K_s z^-s.
using TransferFunction = RationalMatrix;
using RealMat = Eigen::MatrixXd;

struct SingularCovarianceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Mat value_at_infinity(const TransferFunction& k) {
  if (!k.num().is_zero() && k.num().hi() > 0) throw std::invalid_argument("value_at_infinity: transfer function is not causal");
  return k.num().coeff(0) / k.den().coeff(0);
}

// Real up to rounding: imaginary parts below 1e-12 of the coefficient scale.
inline bool is_real(const TransferFunction& k) {
  constexpr double rel = 1e-12;
  double scale = 0.0;
  for (cd c : k.den().c) scale = std::max(scale, std::abs(c));
  for (cd c : k.den().c)
    if (std::abs(c.imag()) > rel * scale) return false;
  return k.num().is_real(rel);
}

// Values of f at the N-th roots of unity. z_k^p is read off the grid at
// index p k mod N, so no powers are formed.
inline std::vector<Mat> sample_on_grid(const TransferFunction& f, int n) {
  UnitCircleGrid g(n);
  const auto& z = g.points();
  auto at = [&](long long p, int k) { return z[static_cast<size_t>(((p * k) % n + n) % n)]; };
  std::vector<Mat> out(static_cast<size_t>(n), Mat::Zero(f.rows(), f.cols()));
  const LaurentMatrix& num = f.num();
  const LaurentPoly& den = f.den();
  for (int k = 0; k < n; ++k) {
    Mat& v = out[static_cast<size_t>(k)];
    for (int p = num.lo(); !num.is_zero() && p <= num.hi(); ++p) v += at(p, k) * num.at(p);
    cd d = 0.0;
    for (int p = den.lo; p <= den.hi(); ++p) d += den.coeff(p) * at(p, k);
    v /= d;
  }
  return out;
}

namespace detail {
inline double min_singular(const Mat& a) {
  if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

inline double min_singular_on_grid(const std::vector<Mat>& k) {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& v : k) s = std::min(s, min_singular(v));
  return s;
}

// Ascending coefficients in w = z^-1 of a polynomial with support s <= 0.
inline std::vector<cd> in_w(const LaurentPoly& p) {
  std::vector<cd> a(static_cast<size_t>(-p.lo + 1), 0.0);
  for (int s = p.lo; s <= p.hi(); ++s) a[static_cast<size_t>(-s)] = p.coeff(s);
  return a;
}

inline LaurentPoly from_w(const std::vector<cd>& a) {
  LaurentPoly p(-static_cast<int>(a.size()) + 1, std::vector<cd>(a.rbegin(), a.rend()));
  return p.trim(0.0);
}

inline std::vector<cd> mul_linear(const std::vector<cd>& a, cd c0, cd c1) {
  std::vector<cd> out(a.size() + 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] += c0 * a[i];
    out[i + 1] += c1 * a[i];
  }
  return out;
}
}  // namespace detail

// Wold representation: K~ with K~ K~^* = K K^* and det K~ free of zeros in
// |z| > 1. Scalar K reflects each numerator root w_i (w = z^-1) with |w_i| < 1
// by replacing (w - w_i) with (conj(w_i) w - 1); matrix K uses the spectral
// factor of num num^* over the same denominator.
inline TransferFunction outer_factor(const TransferFunction& k, const Tolerances& tol = default_tolerances()) {
  if (k.rows() != k.cols()) throw DimensionError("outer_factor: K must be square");
  if (k.decay_radius() >= 1.0) throw std::invalid_argument("outer_factor: K has poles on or outside the circle");
  if (!k.num().is_zero() && k.num().hi() > 0) throw std::invalid_argument("outer_factor: K is not causal");
  const std::vector<Mat> v = sample_on_grid(k, tol.grid);
  if (detail::min_singular_on_grid(v) < std::sqrt(tol.pd)) throw BoundaryError("outer_factor: K K^* is singular on the circle");
  if (k.rows() > 1) return TransferFunction(spectral_factor(k.num() * k.num().adjoint(), tol), k.den());

  std::vector<cd> a = detail::in_w(k.num().entry(0, 0));
  while (a.size() > 1 && a.back() == cd(0.0)) a.pop_back();
  const cd lead = a.back();
  std::vector<cd> out{lead};
  for (cd w : poly_roots(a)) {
    if (std::abs(w) < 1.0) out = detail::mul_linear(out, -1.0, std::conj(w));
    else out = detail::mul_linear(out, -w, 1.0);
  }
  if (is_real(k))
    for (cd& c : out) c = c.real();
  LaurentMatrix num(1, 1);
  num.set_entry(0, 0, detail::from_w(out));
  return TransferFunction(num, k.den());
}

struct LikelihoodValue {
  double value = std::numeric_limits<double>::quiet_NaN();
  double log_det = std::numeric_limits<double>::quiet_NaN();
  double integral = std::numeric_limits<double>::quiet_NaN();
  double min_singular = 0.0;
  bool ridge = false;
};

constexpr double kRidgeThreshold = 1e-6;

// l(K) = log det(K~(inf) K~(inf)^*) + mean over the grid of |K^-1 Xi|_F^2.
inline LikelihoodValue likelihood_from_samples(const TransferFunction& k, const std::vector<Mat>& xi, const Tolerances& tol = default_tolerances()) {
  LikelihoodValue out;
  const int n = static_cast<int>(xi.size());
  std::vector<Mat> kv = sample_on_grid(k, n);
  out.min_singular = detail::min_singular_on_grid(kv);
  if (out.min_singular < kRidgeThreshold) {
    out.ridge = true;
    return out;
  }
  Mat k0 = value_at_infinity(outer_factor(k, tol));
  out.log_det = std::log(std::abs((k0 * k0.adjoint()).determinant()));
  double acc = 0.0;
  if (k.rows() == 1) {
    for (int i = 0; i < n; ++i) acc += xi[static_cast<size_t>(i)].squaredNorm() / std::norm(kv[static_cast<size_t>(i)](0, 0));
  } else {
    for (int i = 0; i < n; ++i) acc += kv[static_cast<size_t>(i)].partialPivLu().solve(xi[static_cast<size_t>(i)]).squaredNorm();
  }
  out.integral = acc / n;
  out.value = out.log_det + out.integral;
  return out;
}

inline double limiting_likelihood(const TransferFunction& k, const TransferFunction& xi, const Tolerances& tol = default_tolerances()) {
  if (k.rows() != xi.rows()) throw DimensionError("limiting_likelihood: K and Xi differ in rows");
  LikelihoodValue v = likelihood_from_samples(k, sample_on_grid(xi, tol.grid), tol);
  if (v.ridge) throw BoundaryError("limiting_likelihood: K is not invertible on the circle");
  return v.value;
}

// gamma_j = E[X_{t+j} X_t^*] = sum_s K_{s+j} K_s^* for any integer j.
inline Mat autocovariance(const HardyElement& k, int j) {
  Mat g = Mat::Zero(k.rows(), k.rows());
  if (k.f.is_zero()) return g;
  const int depth = -k.f.lo();
  if (j >= 0) {
    for (int s = 0; s + j <= depth; ++s) g += k.f.coeff(-(s + j)) * k.f.coeff(-s).adjoint();
  } else {
    for (int s = 0; s - j <= depth; ++s) g += k.f.coeff(-s) * k.f.coeff(-(s - j)).adjoint();
  }
  return g;
}

inline std::vector<Mat> autocovariances(const TransferFunction& k, int lags, const Tolerances& tol = default_tolerances()) {
  if (lags < 0) throw std::invalid_argument("autocovariances: negative lag count");
  HardyElement h = k.to_hardy(tol.series);
  const bool real = is_real(k);
  std::vector<Mat> out;
  out.reserve(static_cast<size_t>(lags) + 1);
  for (int j = 0; j <= lags; ++j) {
    Mat g = autocovariance(h, j);
    if (real) g = g.real().cast<cd>();
    out.push_back(std::move(g));
  }
  return out;
}

namespace detail {
inline void check_data(const TransferFunction& k, const RealMat& x) {
  if (x.cols() != k.rows()) throw DimensionError("finite_sample_likelihood: data columns must equal the rows of K");
  if (x.rows() < 1) throw std::invalid_argument("finite_sample_likelihood: empty sample");
}

struct Accumulator {
  double log_det = 0.0, quad = 0.0;
  void add(const Mat& v, const Vec& e) {
    Eigen::LLT<Mat> llt(v);
    if (llt.info() != Eigen::Success) throw SingularCovarianceError("finite_sample_likelihood: covariance is not positive definite");
    Mat l = llt.matrixL();
    for (Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(std::abs(l(i, i)));
    quad += llt.matrixL().solve(e).squaredNorm();
  }
};

// Innovations algorithm for a process whose autocovariances vanish past lag q.
inline Accumulator innovations_banded(const std::vector<Mat>& gamma, const RealMat& x) {
  const int t = static_cast<int>(x.rows());
  const int q = static_cast<int>(gamma.size()) - 1;
  const Index m = x.cols();
  const int ring = q + 1;
  auto slot = [&](int n) { return static_cast<size_t>(n % ring); };
  std::vector<std::vector<Mat>> theta(static_cast<size_t>(ring), std::vector<Mat>(static_cast<size_t>(q + 1)));
  std::vector<Mat> v(static_cast<size_t>(ring)), vinv(static_cast<size_t>(ring));
  std::vector<Vec> e(static_cast<size_t>(ring));
  auto g = [&](int h) -> Mat { return h <= q ? gamma[static_cast<size_t>(h)] : Mat::Zero(m, m); };
  Accumulator acc;
  for (int n = 0; n < t; ++n) {
    auto& th = theta[slot(n)];
    for (auto& a : th) a = Mat::Zero(m, m);
    const int start = std::max(0, n - q);
    for (int k = start; k < n; ++k) {
      Mat s = g(n - k);
      for (int j = start; j < k; ++j)
        if (k - j <= q) s -= th[static_cast<size_t>(n - j)] * v[slot(j)] * theta[slot(k)][static_cast<size_t>(k - j)].adjoint();
      th[static_cast<size_t>(n - k)] = s * vinv[slot(k)];
    }
    Mat vn = g(0);
    for (int j = start; j < n; ++j) vn -= th[static_cast<size_t>(n - j)] * v[slot(j)] * th[static_cast<size_t>(n - j)].adjoint();
    vn = 0.5 * (vn + vn.adjoint());
    Vec pred = Vec::Zero(m);
    for (int j = 1; j <= std::min(n, q); ++j) pred += th[static_cast<size_t>(j)] * e[slot(n - j)];
    Vec en = x.row(n).transpose().cast<cd>() - pred;
    acc.add(vn, en);
    v[slot(n)] = vn;
    vinv[slot(n)] = vn.inverse();
    e[slot(n)] = en;
  }
  return acc;
}

// Durbin-Levinson recursion for a real scalar series.
inline Accumulator levinson_scalar(const std::vector<double>& gamma, const RealMat& x) {
  const int t = static_cast<int>(x.rows());
  auto g = [&](int h) { return h < static_cast<int>(gamma.size()) ? gamma[static_cast<size_t>(h)] : 0.0; };
  std::vector<double> phi(static_cast<size_t>(t) + 1, 0.0), prev(static_cast<size_t>(t) + 1, 0.0);
  double v = g(0);
  Accumulator acc;
  if (!(v > 0)) throw SingularCovarianceError("finite_sample_likelihood: covariance is not positive definite");
  acc.log_det += std::log(v);
  acc.quad += x(0, 0) * x(0, 0) / v;
  for (int n = 1; n < t; ++n) {
    double num = g(n);
    for (int j = 1; j < n; ++j) num -= prev[static_cast<size_t>(j)] * g(n - j);
    const double pnn = num / v;
    for (int j = 1; j < n; ++j) phi[static_cast<size_t>(j)] = prev[static_cast<size_t>(j)] - pnn * prev[static_cast<size_t>(n - j)];
    phi[static_cast<size_t>(n)] = pnn;
    v *= (1.0 - pnn * pnn);
    if (!(v > 0)) throw SingularCovarianceError("finite_sample_likelihood: covariance is not positive definite");
    double pred = 0.0;
    for (int j = 1; j <= n; ++j) pred += phi[static_cast<size_t>(j)] * x(n - j, 0);
    const double e = x(n, 0) - pred;
    acc.log_det += std::log(v);
    acc.quad += e * e / v;
    std::swap(phi, prev);
  }
  return acc;
}

// Whittle's multivariate Durbin-Levinson recursion.
inline Accumulator levinson_block(const std::vector<Mat>& gamma, const RealMat& x) {
  const int t = static_cast<int>(x.rows());
  const Index m = x.cols();
  auto g = [&](int h) -> Mat {
    if (std::abs(h) >= static_cast<int>(gamma.size())) return Mat::Zero(m, m);
    return h >= 0 ? gamma[static_cast<size_t>(h)] : Mat(gamma[static_cast<size_t>(-h)].adjoint());
  };
  std::vector<Mat> phi, phit;  // index j-1 holds Phi_{n,j}
  Mat v = g(0), vt = g(0);
  Accumulator acc;
  acc.add(v, x.row(0).transpose().cast<cd>());
  for (int n = 1; n < t; ++n) {
    Mat delta = g(n);
    for (int j = 1; j < n; ++j) delta -= phi[static_cast<size_t>(j - 1)] * g(n - j);
    Mat pnn = delta * vt.inverse();
    Mat ptnn = delta.adjoint() * v.inverse();
    std::vector<Mat> nphi(static_cast<size_t>(n)), nphit(static_cast<size_t>(n));
    for (int k = 1; k < n; ++k) {
      nphi[static_cast<size_t>(k - 1)] = phi[static_cast<size_t>(k - 1)] - pnn * phit[static_cast<size_t>(n - k - 1)];
      nphit[static_cast<size_t>(k - 1)] = phit[static_cast<size_t>(k - 1)] - ptnn * phi[static_cast<size_t>(n - k - 1)];
    }
    nphi[static_cast<size_t>(n - 1)] = pnn;
    nphit[static_cast<size_t>(n - 1)] = ptnn;
    v = v - pnn * delta.adjoint();
    vt = vt - ptnn * delta;
    v = 0.5 * (v + v.adjoint());
    vt = 0.5 * (vt + vt.adjoint());
    phi = std::move(nphi);
    phit = std::move(nphit);
    Vec pred = Vec::Zero(m);
    for (int j = 1; j <= n; ++j) pred += phi[static_cast<size_t>(j - 1)] * x.row(n - j).transpose().cast<cd>();
    acc.add(v, x.row(n).transpose().cast<cd>() - pred);
  }
  return acc;
}
}  // namespace detail

// l_T(K) = (1/T) log det Sigma_T(K) + (1/T) x' Sigma_T(K)^-1 x, with x the
// T x m sample (row t holds X_t).
inline double finite_sample_likelihood(const TransferFunction& k, const RealMat& x, const Tolerances& tol = default_tolerances()) {
  detail::check_data(k, x);
  const int t = static_cast<int>(x.rows());
  detail::Accumulator acc;
  if (k.is_polynomial()) {
    const int q = k.num().is_zero() ? 0 : -k.num().lo();
    acc = detail::innovations_banded(autocovariances(k, std::min(q, t - 1), tol), x);
  } else {
    std::vector<Mat> g = autocovariances(k, t - 1, tol);
    if (k.rows() == 1 && is_real(k)) {
      std::vector<double> s;
      for (const auto& a : g) s.push_back(a(0, 0).real());
      acc = detail::levinson_scalar(s, x);
    } else {
      acc = detail::levinson_block(g, x);
    }
  }
  return (acc.log_det + acc.quad) / t;
}

// Same quantity from the dense block-Toeplitz covariance; O(T^3).
inline double finite_sample_likelihood_dense(const TransferFunction& k, const RealMat& x, const Tolerances& tol = default_tolerances()) {
  detail::check_data(k, x);
  const int t = static_cast<int>(x.rows());
  const Index m = x.cols();
  std::vector<Mat> g = autocovariances(k, t - 1, tol);
  Mat sigma(t * m, t * m);
  for (int a = 0; a < t; ++a)
    for (int b = 0; b < t; ++b)
      sigma.block(a * m, b * m, m, m) = a >= b ? g[static_cast<size_t>(a - b)] : Mat(g[static_cast<size_t>(b - a)].adjoint());
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) throw SingularCovarianceError("finite_sample_likelihood: covariance is not positive definite");
  Vec v(t * m);
  for (int a = 0; a < t; ++a)
    for (Index i = 0; i < m; ++i) v(a * m + i) = x(a, i);
  Mat l = llt.matrixL();
  double logdet = 0.0;
  for (Index i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(std::abs(l(i, i)));
  return (logdet + llt.matrixL().solve(v).squaredNorm()) / t;
}

struct SimConfig {
  int T = 200;
  int burn_in = 0;
  int truncation = 0;  // impulse responses kept; 0 picks one with tail below 1e-8
  std::uint64_t seed = 0;
  int replications = 1;
};

// Generator for replication `rep` of a run seeded by `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(rep),
                    static_cast<std::uint32_t>(rep >> 32)};
  return std::mt19937_64(seq);
}

// Standard normal draws for periods 0..count-1, m per period, row-major.
inline RealMat innovations(std::uint64_t seed, std::uint64_t rep, int count, Index m) {
  std::mt19937_64 gen = substream(seed, rep);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMat z(count, m);
  for (int t = 0; t < count; ++t)
    for (Index i = 0; i < m; ++i) z(t, i) = normal(gen);
  return z;
}

inline int simulation_truncation(const TransferFunction& xi, const SimConfig& cfg) {
  constexpr double tail_limit = 1e-8;
  if (cfg.truncation > 0) {
    HardyElement h = xi.to_hardy(1e-12);
    double rest = h.tail * h.tail;
    for (int s = h.f.is_zero() ? 0 : h.f.lo(); !h.f.is_zero() && s < -cfg.truncation; ++s) rest += h.f.at(s).squaredNorm();
    if (std::sqrt(rest) > tail_limit) throw std::invalid_argument("simulate_paths: truncation leaves tail mass above 1e-8");
    return cfg.truncation;
  }
  HardyElement h = xi.to_hardy(tail_limit * 1e-2);
  return h.f.is_zero() ? 0 : -h.f.lo();
}

// X_t = sum_{s <= S} Xi_s zeta_{t-s} for t = 0..T-1 after discarding burn_in periods.
inline RealMat simulate_path(const TransferFunction& xi, const SimConfig& cfg, std::uint64_t rep) {
  if (cfg.T < 1 || cfg.burn_in < 0) throw std::invalid_argument("simulate_paths: need T >= 1 and burn_in >= 0");
  if (!is_real(xi)) throw std::invalid_argument("simulate_paths: transfer function must have real coefficients");
  const int s_max = simulation_truncation(xi, cfg);
  LaurentMatrix e = xi.expand(-s_max);
  std::vector<Eigen::MatrixXd> coef;
  for (int s = 0; s <= s_max; ++s) coef.push_back(e.coeff(-s).real());
  const Index m = xi.rows(), r = xi.cols();
  const int lead = s_max + cfg.burn_in;
  RealMat z = innovations(cfg.seed, rep, lead + cfg.T, r);
  RealMat x = RealMat::Zero(cfg.T, m);
  for (int t = 0; t < cfg.T; ++t)
    for (int s = 0; s <= s_max; ++s) x.row(t).noalias() += (coef[static_cast<size_t>(s)] * z.row(lead + t - s).transpose()).transpose();
  return x;
}

inline std::vector<RealMat> simulate_paths(const TransferFunction& xi, const SimConfig& cfg) {
  std::vector<RealMat> out;
  for (int k = 0; k < cfg.replications; ++k) out.push_back(simulate_path(xi, cfg, static_cast<std::uint64_t>(k)));
  return out;
}

// The solution of `model` whose value at infinity is closest to `lead` in
// Frobenius norm, with minimum-norm kernel weights.
inline TransferFunction pinned_solution(const SolutionSet& s, const Mat& lead) {
  if (s.kernel.empty()) return s.particular;
  const Mat x0 = value_at_infinity(s.particular);
  const Index p = x0.size();
  Mat a(p, static_cast<Index>(s.kernel.size()));
  for (size_t k = 0; k < s.kernel.size(); ++k) {
    Mat c = value_at_infinity(s.kernel[k]);
    a.col(static_cast<Index>(k)) = Eigen::Map<const Vec>(c.data(), p);
  }
  Mat d = lead - x0;
  Vec w = Eigen::CompleteOrthogonalDecomposition<Mat>(a).solve(Eigen::Map<const Vec>(d.data(), p));
  return assemble_solution(s.particular, s.kernel, std::vector<cd>(w.data(), w.data() + w.size()));
}

// Parametric family theta -> K(theta) built from a model through the solver.
struct LikelihoodFamily {
  std::string name;
  std::vector<std::string> parameters;
  std::function<TransferFunction(const std::vector<double>&)> transfer;
  std::function<std::string(const std::vector<double>&)> classification;
};

inline std::vector<std::string> family_names() { return {"cagan", "cagan-regularized", "nongeneric", "nongeneric-regularized"}; }

namespace detail {
inline void expect_arity(const std::vector<double>& t, size_t n, const std::string& name) {
  if (t.size() != n) throw std::invalid_argument("family " + name + ": expected " + std::to_string(n) + " parameters");
}
}  // namespace detail

inline LikelihoodFamily family_by_name(const std::string& name) {
  LikelihoodFamily f;
  f.name = name;
  if (name == "cagan" || name == "cagan-regularized") {
    const bool reg = name == "cagan-regularized";
    f.parameters = reg ? std::vector<std::string>{"beta"} : std::vector<std::string>{"beta", "psi"};
    f.transfer = [name, reg](const std::vector<double>& t) {
      detail::expect_arity(t, reg ? 1 : 2, name);
      const ModelSpec model = builtin::cagan();
      SolutionSet s = solve(model, {{"beta", t[0]}});
      if (reg) return tikhonov_from(s, model).transfer;
      return pinned_solution(s, Mat::Constant(1, 1, t[1]));
    };
    f.classification = [](const std::vector<double>& t) { return classify(builtin::cagan(), {{"beta", t.at(0)}}).tag(); };
  } else if (name == "nongeneric" || name == "nongeneric-regularized") {
    const bool reg = name == "nongeneric-regularized";
    f.parameters = {"theta"};
    f.transfer = [name, reg](const std::vector<double>& t) {
      detail::expect_arity(t, 1, name);
      const ModelSpec model = builtin::nongeneric();
      SolutionSet s = solve(model, {{"theta", t[0]}});
      if (reg) return tikhonov_from(s, model).transfer;
      return pinned_solution(s, Mat::Zero(2, 2));
    };
    f.classification = [](const std::vector<double>& t) { return classify(builtin::nongeneric(), {{"theta", t.at(0)}}).tag(); };
  } else {
    throw std::invalid_argument("unknown likelihood family '" + name + "'");
  }
  return f;
}

namespace detail {
// Squared l2 norm of the coefficients of N(w)/D(w), D(0) != 0 and D free of
// zeros in |w| <= 1. The strictly proper part is realized in companion form
// and its Gramian solved from P = A P A^T + B B^T.
inline double h2_norm_sq(std::vector<double> num, std::vector<double> den) {
  const double d0 = den.at(0);
  for (double& c : den) c /= d0;
  for (double& c : num) c /= d0;
  const size_t n = den.size() - 1;
  num.resize(std::max(num.size(), n + 1), 0.0);
  if (num.size() > n + 1) throw std::invalid_argument("h2_norm_sq: improper rational function");
  const double c0 = num[0];
  if (n == 0) return c0 * c0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Index>(n)), c(static_cast<Index>(n));
  for (size_t j = 0; j < n; ++j) {
    a(0, static_cast<Index>(j)) = -den[j + 1];
    c(static_cast<Index>(j)) = num[j + 1] - c0 * den[j + 1];
  }
  for (size_t i = 1; i < n; ++i) a(static_cast<Index>(i), static_cast<Index>(i - 1)) = 1.0;
  b(0) = 1.0;
  const Index nn = static_cast<Index>(n * n);
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(nn, nn);
  for (Index i = 0; i < static_cast<Index>(n); ++i)
    for (Index j = 0; j < static_cast<Index>(n); ++j)
      for (Index k = 0; k < static_cast<Index>(n); ++k)
        for (Index l = 0; l < static_cast<Index>(n); ++l) lhs(i * n + j, k * n + l) -= a(i, k) * a(j, l);
  Eigen::MatrixXd bb = b * b.transpose();
  Eigen::VectorXd rhs(nn);
  for (Index i = 0; i < static_cast<Index>(n); ++i)
    for (Index j = 0; j < static_cast<Index>(n); ++j) rhs(i * n + j) = bb(i, j);
  Eigen::VectorXd p = lhs.partialPivLu().solve(rhs);
  double tail = 0.0;
  for (Index i = 0; i < static_cast<Index>(n); ++i)
    for (Index j = 0; j < static_cast<Index>(n); ++j) tail += c(i) * p(i * n + j) * c(j);
  return c0 * c0 + tail;
}

inline std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline void require_off_boundary(bool ok, const std::string& what) {
  if (!ok) throw BoundaryError("reference_likelihood: " + what);
}

constexpr double kSeam = 1e-9;

inline double reference_cagan(const std::vector<double>& truth, const std::vector<double>& t) {
  const double b0 = truth.at(0), p0 = truth.at(1), b = t.at(0), p = t.at(1);
  require_off_boundary(std::abs(std::abs(b0) - 1.0) > kSeam && std::abs(std::abs(b) - 1.0) > kSeam, "|beta| = 1");
  // |Xi|^2 as |num0 / den0|^2 in w = z^-1.
  std::vector<double> num0{1.0}, den0{1.0};
  if (std::abs(b0) > 1.0) {
    num0 = {p0, -1.0 / b0};
    den0 = {1.0, -1.0 / b0};
  }
  if (std::abs(b) < 1.0) return h2_norm_sq(num0, den0);
  require_off_boundary(std::abs(std::abs(b * p) - 1.0) > kSeam, "|beta psi| = 1");
  const double a = 1.0 / b;
  // |psi - a w| equals |a - psi w| on the circle; use whichever is zero-free in the disk.
  const bool flipped = std::abs(b * p) < 1.0;
  std::vector<double> kden = flipped ? std::vector<double>{a, -p} : std::vector<double>{p, -a};
  const double log_det = flipped ? std::log(a * a) : std::log(p * p);
  return log_det + h2_norm_sq(poly_mul({1.0, -a}, num0), poly_mul(kden, den0));
}

inline double reference_cagan_regularized(const std::vector<double>& truth, const std::vector<double>& t) {
  const double b0 = truth.at(0), b = t.at(0);
  require_off_boundary(std::abs(std::abs(b0) - 1.0) > kSeam && std::abs(std::abs(b) - 1.0) > kSeam, "|beta| = 1");
  const double var0 = std::abs(b0) < 1.0 ? 1.0 : 1.0 / (b0 * b0);
  if (std::abs(b) < 1.0) return var0;
  return std::log(1.0 / (b * b)) + b * b * var0;
}

inline double reference_nongeneric(const std::vector<double>& truth, const std::vector<double>& t) {
  const double t0 = truth.at(0), th = t.at(0);
  if (t0 == 0.0) return th == 0.0 ? 2.0 : 1.0 / (th * th) + 1.0 + th * th;
  if (th == 0.0) return 1.0 / (t0 * t0) + 1.0 + t0 * t0;
  return th * th * (1.0 + 1.0 / (t0 * t0)) - 2.0 * th * t0 + t0 * t0 * (1.0 + 1.0 / (th * th));
}

// Coefficients of a 2 x 2 Laurent polynomial as a map power -> matrix.
using Small = std::map<int, Eigen::Matrix2d>;

inline Small small_mul(const Small& a, const Small& b) {
  Small out;
  for (const auto& [p, x] : a)
    for (const auto& [q, y] : b) {
      auto it = out.find(p + q);
      if (it == out.end()) out.emplace(p + q, x * y);
      else it->second += x * y;
    }
  return out;
}

inline double reference_nongeneric_regularized(const std::vector<double>& truth, const std::vector<double>& t) {
  auto xi = [](double th) {
    const double a = th / (1 + th * th), b = 1 / (1 + th * th);
    Small s;
    s[-2] = Eigen::Matrix2d{{1, 0}, {0, 0}};
    s[-1] = Eigen::Matrix2d{{0, a}, {-th, 0}};
    s[0] = Eigen::Matrix2d{{0, 0}, {0, b}};
    return s;
  };
  const double th = t.at(0);
  const double a = th / (1 + th * th), b = 1 / (1 + th * th);
  // K(theta)^-1 = [[b z^2, -a z], [theta z, 1]]; det K = z^-2 so the log-det term vanishes.
  Small kinv;
  kinv[2] = Eigen::Matrix2d{{b, 0}, {0, 0}};
  kinv[1] = Eigen::Matrix2d{{0, -a}, {th, 0}};
  kinv[0] = Eigen::Matrix2d{{0, 0}, {0, 1}};
  double sum = 0.0;
  for (const auto& [p, c] : small_mul(kinv, xi(truth.at(0)))) sum += c.squaredNorm();
  return sum;
}
}  // namespace detail

// Closed-form likelihood surfaces used as the oracle for limiting_likelihood.
inline double reference_likelihood(const std::string& family, const std::vector<double>& truth, const std::vector<double>& theta) {
  if (family == "cagan") return detail::reference_cagan(truth, theta);
  if (family == "cagan-regularized") return detail::reference_cagan_regularized(truth, theta);
  if (family == "nongeneric") return detail::reference_nongeneric(truth, theta);
  if (family == "nongeneric-regularized") return detail::reference_nongeneric_regularized(truth, theta);
  throw std::invalid_argument("unknown likelihood family '" + family + "'");
}

struct GridAxis {
  std::string name;
  double lo = 0.0, hi = 0.0;
  int steps = 1;

  double at(int i) const { return steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1); }
  double spacing() const { return steps > 1 ? (hi - lo) / (steps - 1) : 0.0; }
};

// "name=lo:hi:steps".
inline GridAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("grid axis '" + text + "': expected name=lo:hi:steps");
  GridAxis a;
  a.name = text.substr(0, eq);
  const std::string rest = text.substr(eq + 1);
  const auto c1 = rest.find(':'), c2 = rest.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) throw std::invalid_argument("grid axis '" + text + "': expected name=lo:hi:steps");
  try {
    a.lo = std::stod(rest.substr(0, c1));
    a.hi = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
    a.steps = std::stoi(rest.substr(c2 + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("grid axis '" + text + "': malformed number");
  }
  if (a.steps < 1 || !(a.hi >= a.lo)) throw std::invalid_argument("grid axis '" + text + "': need steps >= 1 and hi >= lo");
  return a;
}

struct SurfacePoint {
  std::vector<double> theta;
  double value = std::numeric_limits<double>::quiet_NaN();
  double finite_sample = std::numeric_limits<double>::quiet_NaN();
  std::string classification;
  std::vector<std::string> flags;
};

struct LocatedMinimum {
  std::vector<double> theta;
  double value = 0.0;
};

struct ScanOptions {
  bool polish = true;
  int max_starts = 16;
  int finite_sample_T = 0;
  std::uint64_t seed = 0;
};

struct LikelihoodSurface {
  std::string family;
  std::vector<std::string> parameters;
  std::vector<double> truth;
  std::vector<GridAxis> axes;
  std::vector<SurfacePoint> points;  // row-major over axes, last axis fastest
  std::vector<LocatedMinimum> minima;
  int grid_n = 0;
  int finite_sample_T = 0;
  std::uint64_t seed = 0;
};

// Evaluates l(K(theta)) against pre-sampled truth values, flagging instead of throwing.
inline SurfacePoint evaluate_point(const LikelihoodFamily& fam, const std::vector<double>& theta, const std::vector<Mat>& xi,
                                   const RealMat* sample = nullptr, const Tolerances& tol = default_tolerances()) {
  SurfacePoint pt;
  pt.theta = theta;
  try {
    pt.classification = fam.classification(theta);
  } catch (const std::exception&) {
    pt.classification = "Unclassified";
  }
  try {
    TransferFunction k = fam.transfer(theta);
    LikelihoodValue v = likelihood_from_samples(k, xi, tol);
    if (v.ridge) {
      pt.flags.push_back("ridge");
      return pt;
    }
    if (v.min_singular < 1e-3) pt.flags.push_back("near-ridge");
    pt.value = v.value;
    if (!std::isfinite(pt.value)) pt.flags.push_back("divergent");
    if (sample) pt.finite_sample = finite_sample_likelihood(k, *sample, tol);
  } catch (const ClassificationError&) {
    pt.flags.push_back("boundary");
  } catch (const BoundaryError&) {
    pt.flags.push_back("ridge");
  } catch (const std::exception&) {
    pt.flags.push_back("error");
  }
  return pt;
}

namespace detail {
inline double golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-10) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

// Coordinate-wise golden section inside [x - h, x + h], then Newton steps on
// central-difference derivatives accepted only when they lower f.
inline LocatedMinimum polish(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x, const std::vector<double>& h) {
  const size_t d = x.size();
  double fx = f(x);
  for (int sweep = 0; sweep < 6; ++sweep) {
    double moved = 0.0;
    for (size_t i = 0; i < d; ++i) {
      if (h[i] <= 0) continue;
      auto line = [&](double v) {
        std::vector<double> y = x;
        y[i] = v;
        return f(y);
      };
      double best = golden_section(line, x[i] - h[i], x[i] + h[i], 1e-7 * h[i]);
      double fb = line(best);
      if (fb < fx) {
        moved = std::max(moved, std::abs(best - x[i]));
        x[i] = best;
        fx = fb;
      }
    }
    if (moved < 1e-6 * *std::max_element(h.begin(), h.end())) break;
  }
  for (int it = 0; it < 30; ++it) {
    const double e = 1e-4;
    Eigen::VectorXd grad(static_cast<Index>(d));
    Eigen::MatrixXd hess(static_cast<Index>(d), static_cast<Index>(d));
    auto shifted = [&](size_t i, double di, size_t j, double dj) {
      std::vector<double> y = x;
      y[i] += di;
      y[j] += dj;
      return f(y);
    };
    for (size_t i = 0; i < d; ++i) {
      const double fp = shifted(i, e, i, 0.0), fm = shifted(i, -e, i, 0.0);
      grad(static_cast<Index>(i)) = (fp - fm) / (2 * e);
      hess(static_cast<Index>(i), static_cast<Index>(i)) = (fp - 2 * fx + fm) / (e * e);
      for (size_t j = 0; j < i; ++j) {
        const double v = (shifted(i, e, j, e) - shifted(i, e, j, -e) - shifted(i, -e, j, e) + shifted(i, -e, j, -e)) / (4 * e * e);
        hess(static_cast<Index>(i), static_cast<Index>(j)) = hess(static_cast<Index>(j), static_cast<Index>(i)) = v;
      }
    }
    if (!grad.allFinite() || !hess.allFinite()) break;
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) break;
    Eigen::VectorXd step = llt.solve(grad);
    std::vector<double> y = x;
    for (size_t i = 0; i < d; ++i) y[i] -= step(static_cast<Index>(i));
    const double fy = f(y);
    if (!(fy <= fx)) break;
    x = y;
    fx = fy;
    if (step.norm() < 1e-12) break;
  }
  return {x, fx};
}
}  // namespace detail

inline LikelihoodSurface scan(const LikelihoodFamily& fam, const std::vector<GridAxis>& axes, const std::vector<double>& truth,
                              const ScanOptions& opt = {}, const Tolerances& tol = default_tolerances()) {
  if (axes.size() != fam.parameters.size()) throw std::invalid_argument("scan: one grid axis per family parameter is required");
  for (size_t i = 0; i < axes.size(); ++i)
    if (axes[i].name != fam.parameters[i])
      throw std::invalid_argument("scan: axis '" + axes[i].name + "' does not match parameter '" + fam.parameters[i] + "'");
  LikelihoodSurface out;
  out.family = fam.name;
  out.parameters = fam.parameters;
  out.truth = truth;
  out.axes = axes;
  out.grid_n = tol.grid;
  out.finite_sample_T = opt.finite_sample_T;
  out.seed = opt.seed;

  const TransferFunction xi_true = fam.transfer(truth);
  const std::vector<Mat> xi = sample_on_grid(xi_true, tol.grid);
  RealMat sample;
  if (opt.finite_sample_T > 0) {
    SimConfig cfg;
    cfg.T = opt.finite_sample_T;
    cfg.seed = opt.seed;
    sample = simulate_path(xi_true, cfg, 0);
  }

  const size_t d = axes.size();
  std::vector<int> shape(d);
  size_t total = 1;
  for (size_t i = 0; i < d; ++i) total *= static_cast<size_t>(shape[i] = axes[i].steps);
  std::vector<int> idx(d, 0);
  for (size_t flat = 0; flat < total; ++flat) {
    size_t rem = flat;
    std::vector<double> theta(d);
    for (size_t i = d; i-- > 0;) {
      idx[i] = static_cast<int>(rem % static_cast<size_t>(shape[i]));
      rem /= static_cast<size_t>(shape[i]);
      theta[i] = axes[i].at(idx[i]);
    }
    out.points.push_back(evaluate_point(fam, theta, xi, opt.finite_sample_T > 0 ? &sample : nullptr, tol));
  }

  if (!opt.polish) return out;
  // Grid points no larger than any finite neighbour (all 3^d - 1 of them) and
  // strictly below at least one, so flat plateaus do not seed starts.
  std::vector<size_t> starts;
  for (size_t flat = 0; flat < total; ++flat) {
    const double v = out.points[flat].value;
    if (!std::isfinite(v)) continue;
    size_t rem = flat;
    for (size_t i = d; i-- > 0;) {
      idx[i] = static_cast<int>(rem % static_cast<size_t>(shape[i]));
      rem /= static_cast<size_t>(shape[i]);
    }
    bool local = true, above = false;
    size_t nb = 1;
    for (size_t i = 0; i < d; ++i) nb *= 3;
    for (size_t code = 0; code < nb && local; ++code) {
      size_t c = code, other = 0;
      bool inside = true, self = true;
      for (size_t i = 0; i < d; ++i) {
        const int off = static_cast<int>(c % 3) - 1;
        c /= 3;
        const int j = idx[i] + off;
        if (off != 0) self = false;
        if (j < 0 || j >= shape[i]) inside = false;
        other = other * static_cast<size_t>(shape[i]) + static_cast<size_t>(std::clamp(j, 0, shape[i] - 1));
      }
      if (self || !inside) continue;
      const double w = out.points[other].value;
      if (std::isfinite(w) && w < v) local = false;
      if (!std::isfinite(w) || w > v + 1e-12 * std::max(1.0, std::abs(v))) above = true;
    }
    if (local && above) starts.push_back(flat);
  }
  std::sort(starts.begin(), starts.end(), [&](size_t a, size_t b) { return out.points[a].value < out.points[b].value; });
  if (starts.size() > static_cast<size_t>(opt.max_starts)) starts.resize(static_cast<size_t>(opt.max_starts));

  auto objective = [&](const std::vector<double>& theta) {
    SurfacePoint p = evaluate_point(fam, theta, xi, nullptr, tol);
    return std::isfinite(p.value) ? p.value : std::numeric_limits<double>::infinity();
  };
  std::vector<double> h(d);
  for (size_t i = 0; i < d; ++i) h[i] = axes[i].spacing();
  for (size_t s : starts) {
    LocatedMinimum m = detail::polish(objective, out.points[s].theta, h);
    bool dup = false;
    for (const auto& o : out.minima) {
      double dist = 0.0;
      for (size_t i = 0; i < d; ++i) dist = std::max(dist, std::abs(o.theta[i] - m.theta[i]));
      dup = dup || dist < 1e-4;
    }
    if (!dup) out.minima.push_back(m);
  }
  std::sort(out.minima.begin(), out.minima.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  return out;
}

}  // namespace lrem
