#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "solver.hpp"

namespace lrem {

// Half-open arc [lo, hi) of frequencies in radians, z = exp(i omega).
struct Arc {
  double lo = 0.0, hi = 0.0;

  bool contains(double omega) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    constexpr double snap = 1e-12;
    double width = hi - lo;
    double t = std::fmod(omega - lo, two_pi);
    if (t < 0) t += two_pi;
    if (t > two_pi - snap) t = 0.0;
    if (std::abs(t) < snap) t = 0.0;
    return t < width - snap;
  }
};

struct RegularizerSpec {
  enum class Kind { Identity, Coordinates, ExpectationShift, SecondDifference, BandMask, Composite };
  Kind kind = Kind::Identity;
  std::vector<Index> coords;                      // Coordinates (0-based rows)
  Index coord = 0;                                // ExpectationShift
  std::vector<std::pair<Index, Index>> pairs;     // SecondDifference
  double weight = 1.0;                            // SecondDifference weight R on the second member
  std::vector<Arc> arcs;                          // BandMask
  std::vector<RegularizerSpec> parts;             // Composite

  static RegularizerSpec identity() { return {}; }
  static RegularizerSpec coordinates(std::vector<Index> c) {
    RegularizerSpec s;
    s.kind = Kind::Coordinates;
    s.coords = std::move(c);
    return s;
  }
  static RegularizerSpec expectation_shift(Index j) {
    RegularizerSpec s;
    s.kind = Kind::ExpectationShift;
    s.coord = j;
    return s;
  }
  static RegularizerSpec second_difference(std::vector<std::pair<Index, Index>> p, double r) {
    RegularizerSpec s;
    s.kind = Kind::SecondDifference;
    s.pairs = std::move(p);
    s.weight = r;
    return s;
  }
  static RegularizerSpec band_mask(std::vector<Arc> a) {
    RegularizerSpec s;
    s.kind = Kind::BandMask;
    s.arcs = std::move(a);
    return s;
  }
  static RegularizerSpec composite(std::vector<RegularizerSpec> p) {
    RegularizerSpec s;
    s.kind = Kind::Composite;
    s.parts = std::move(p);
    return s;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Identity: return "identity";
      case Kind::Coordinates: return "coordinates";
      case Kind::ExpectationShift: return "expectation-shift";
      case Kind::SecondDifference: return "second-difference";
      case Kind::BandMask: return "band-mask";
      case Kind::Composite: return "composite";
    }
    return "?";
  }

  void validate(Index m) const {
    auto check = [&](Index i) {
      if (i < 0 || i >= m) throw std::out_of_range("RegularizerSpec: coordinate " + std::to_string(i) + " out of range");
    };
    switch (kind) {
      case Kind::Identity: break;
      case Kind::Coordinates:
        if (coords.empty()) throw std::invalid_argument("RegularizerSpec: empty coordinate set");
        for (Index i : coords) check(i);
        break;
      case Kind::ExpectationShift: check(coord); break;
      case Kind::SecondDifference:
        if (pairs.empty()) throw std::invalid_argument("RegularizerSpec: empty pair list");
        for (auto [a, b] : pairs) {
          check(a);
          check(b);
        }
        break;
      case Kind::BandMask: {
        double total = 0.0;
        for (const auto& a : arcs) {
          if (!(a.hi > a.lo) || a.hi - a.lo > 2.0 * std::numbers::pi) throw std::invalid_argument("RegularizerSpec: malformed arc");
          total += a.hi - a.lo;
        }
        if (total <= 0.0) throw std::invalid_argument("RegularizerSpec: band mask has zero measure");
        UnitCircleGrid g(default_tolerances().grid);
        for (int k = 0; k < g.size(); ++k) {
          double w = 2.0 * std::numbers::pi * k / g.size();
          int hits = 0;
          for (const auto& a : arcs) hits += a.contains(w);
          if (hits > 1) throw std::invalid_argument("RegularizerSpec: band mask arcs overlap");
        }
        break;
      }
      case Kind::Composite:
        if (parts.empty()) throw std::invalid_argument("RegularizerSpec: empty composite");
        for (const auto& p : parts) p.validate(m);
        break;
    }
  }
};

// L f, split into coefficient-space pieces and grid-sampled pieces.
struct RegularizedImage {
  std::vector<HardyElement> exact;
  std::vector<std::vector<Mat>> sampled;
};

inline cd image_inner(const RegularizedImage& a, const RegularizedImage& b) {
  cd acc = 0.0;
  for (size_t i = 0; i < a.exact.size(); ++i) acc += hardy_inner(a.exact[i], b.exact[i]);
  for (size_t i = 0; i < a.sampled.size(); ++i) {
    cd s = 0.0;
    const auto& x = a.sampled[i];
    const auto& y = b.sampled[i];
    for (size_t k = 0; k < x.size(); ++k) s += (x[k].array() * y[k].conjugate().array()).sum();
    acc += s / double(x.size());
  }
  return acc;
}

namespace detail {
inline HardyElement rows_of(const HardyElement& f, const std::vector<Index>& rows) {
  LaurentMatrix out(static_cast<Index>(rows.size()), f.cols());
  for (int s = f.f.lo(); !f.f.is_zero() && s <= f.f.hi(); ++s) {
    Mat a(static_cast<Index>(rows.size()), f.cols());
    for (size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Index>(i)) = f.f.at(s).row(rows[i]);
    out.set(s, a);
  }
  return HardyElement(out.prune(0.0), f.tail);
}

inline HardyElement second_difference(const HardyElement& f) {
  HardyElement v = op_V(f), vi = op_Vinv(f);
  return HardyElement(v.f + cd(-2.0) * f.f + vi.f, 4.0 * f.tail);
}

inline void apply_into(const RegularizerSpec& l, const RationalMatrix& f, const HardyElement& series, RegularizedImage& out) {
  using K = RegularizerSpec::Kind;
  switch (l.kind) {
    case K::Identity: out.exact.push_back(series); break;
    case K::Coordinates: out.exact.push_back(rows_of(series, l.coords)); break;
    case K::ExpectationShift: out.exact.push_back(op_V(rows_of(series, {l.coord}))); break;
    case K::SecondDifference: {
      std::vector<Index> firsts, seconds;
      for (auto [a, b] : l.pairs) {
        firsts.push_back(a);
        seconds.push_back(b);
      }
      out.exact.push_back(second_difference(rows_of(series, firsts)));
      HardyElement s2 = second_difference(rows_of(series, seconds));
      out.exact.push_back(HardyElement(cd(l.weight) * s2.f, std::abs(l.weight) * s2.tail));
      break;
    }
    case K::BandMask: {
      UnitCircleGrid g(default_tolerances().grid);
      std::vector<Mat> v;
      v.reserve(static_cast<size_t>(g.size()));
      for (int k = 0; k < g.size(); ++k) {
        double w = 2.0 * std::numbers::pi * k / g.size();
        bool in = false;
        for (const auto& a : l.arcs) in = in || a.contains(w);
        v.push_back(in ? f.eval(g[k]) : Mat::Zero(f.rows(), f.cols()));
      }
      out.sampled.push_back(std::move(v));
      break;
    }
    case K::Composite:
      for (const auto& p : l.parts) apply_into(p, f, series, out);
      break;
  }
}
}  // namespace detail

inline RegularizedImage apply_regularizer(const RegularizerSpec& l, const RationalMatrix& f) {
  l.validate(f.rows());
  RegularizedImage out;
  detail::apply_into(l, f, f.to_hardy(), out);
  return out;
}

struct RegularizedSolution {
  RationalMatrix transfer;
  std::vector<cd> gram_residuals;  // <L phi_L, L chi_k>
  std::string method;              // moore-penrose | kernel-projection | general-L | unique
  bool unique = true;
  double min_gram_eigenvalue = 0.0;
  double residual = 0.0;           // l2 norm of [M phi]_- minus the right-hand side
  std::vector<cd> orthogonality;   // <phi, chi_k>, Tikhonov only
  Classification cls;
};

namespace detail {
// Minimizes |L(rho - sum c_k chi_k)| over c by least squares on the Gram system.
inline std::vector<cd> gram_weights(const std::vector<RegularizedImage>& lchi, const RegularizedImage& lrho, Mat& g) {
  const Index k = static_cast<Index>(lchi.size());
  g.resize(k, k);
  Vec b(k);
  for (Index i = 0; i < k; ++i) {
    b(i) = image_inner(lrho, lchi[static_cast<size_t>(i)]);
    for (Index j = 0; j < k; ++j) g(i, j) = image_inner(lchi[static_cast<size_t>(j)], lchi[static_cast<size_t>(i)]);
  }
  Vec c = Eigen::CompleteOrthogonalDecomposition<Mat>(g).solve(b);
  return std::vector<cd>(c.data(), c.data() + c.size());
}

inline RationalMatrix subtract_combination(const RationalMatrix& rho, const std::vector<RationalMatrix>& chi, const std::vector<cd>& c) {
  RationalMatrix out = rho;
  for (size_t k = 0; k < chi.size(); ++k)
    if (c[k] != cd(0.0)) out = out + (-c[k]) * chi[k];
  return out;
}
}  // namespace detail

// Minimum-norm solution M^dagger forcing. With the symbol supported on s >= 0
// it is computed through the canonical factorization M M^* = W^* W of the
// auxiliary system; otherwise by projecting Xi_0 off the kernel.
inline RegularizedSolution tikhonov_from(const SolutionSet& s, const ModelSpec& model, const Tolerances& tol = default_tolerances()) {
  RegularizedSolution out;
  out.cls = s.cls;
  RationalMatrix rhs = model.rhs();
  if (s.kernel.empty()) {
    out.transfer = s.particular;
    out.method = "unique";
  } else if (s.symbol.lo() >= 0) {
    LaurentMatrix mstar = s.symbol.adjoint();
    LaurentMatrix w = spectral_factor_left(s.symbol * mstar, tol);
    HardyElement g = rhs.to_hardy();
    LaurentMatrix pinv = series_inverse_plus(w.adjoint(), std::max(0, -g.f.lo()));
    LaurentMatrix h = lm_mul(pinv, g.f, 0.0);
    h = h.window(h.lo(), 0);
    RationalMatrix psi(scale_by(LaurentPoly::constant(1.0), lm_adjugate(w) * h), lm_det_poly(w));
    out.transfer = project_minus(mstar * psi).adjust_tail(g.tail);
    out.method = "moore-penrose";
  } else {
    std::vector<RegularizedImage> lchi;
    for (const auto& c : s.kernel) lchi.push_back(apply_regularizer(RegularizerSpec::identity(), c));
    Mat g;
    auto c = detail::gram_weights(lchi, apply_regularizer(RegularizerSpec::identity(), s.particular), g);
    out.transfer = detail::subtract_combination(s.particular, s.kernel, c);
    out.method = "kernel-projection";
  }
  HardyElement phi = out.transfer.to_hardy();
  for (const auto& c : s.kernel) out.orthogonality.push_back(l2_inner(phi.f, c.to_hardy().f));
  out.gram_residuals = out.orthogonality;
  out.min_gram_eigenvalue = min_eigenvalue(s.gram);
  out.unique = true;
  out.residual = solution_residual(s.symbol, out.transfer, rhs);
  return out;
}

inline RegularizedSolution tikhonov_solve(const ModelSpec& model, const ParamValues& theta = {}, const Tolerances& tol = default_tolerances()) {
  return tikhonov_from(solve(model, theta, tol), model, tol);
}

// phi_L = rho - sum c_k chi_k with G c = b, G_kl = <L chi_l, L chi_k>,
// b_k = <L rho, L chi_k>, rho the minimum-norm solution.
inline RegularizedSolution regularized_from(const SolutionSet& s, const ModelSpec& model, const RegularizerSpec& l,
                                            const Tolerances& tol = default_tolerances()) {
  l.validate(model.m);
  RegularizedSolution rho = tikhonov_from(s, model, tol);
  if (s.kernel.empty()) return rho;
  std::vector<RegularizedImage> lchi;
  for (const auto& c : s.kernel) lchi.push_back(apply_regularizer(l, c));
  Mat g;
  auto c = detail::gram_weights(lchi, apply_regularizer(l, rho.transfer), g);
  RegularizedSolution out;
  out.cls = s.cls;
  out.transfer = detail::subtract_combination(rho.transfer, s.kernel, c);
  out.method = l.kind == RegularizerSpec::Kind::Identity ? rho.method : "general-L";
  out.min_gram_eigenvalue = min_eigenvalue(g);
  out.unique = out.min_gram_eigenvalue >= tol.gram;
  RegularizedImage lphi = apply_regularizer(l, out.transfer);
  for (const auto& x : lchi) out.gram_residuals.push_back(image_inner(lphi, x));
  out.residual = solution_residual(s.symbol, out.transfer, model.rhs());
  return out;
}

inline RegularizedSolution regularized_solve(const ModelSpec& model, const ParamValues& theta, const RegularizerSpec& l,
                                             const Tolerances& tol = default_tolerances()) {
  return regularized_from(solve(model, theta, tol), model, l, tol);
}

// Max over the grid of the Frobenius norm of a - b.
inline double transfer_sup_gap(const RationalMatrix& a, const RationalMatrix& b, int n = default_tolerances().grid) {
  UnitCircleGrid g(n);
  double best = 0.0;
  for (cd z : g.points()) best = std::max(best, (a.eval(z) - b.eval(z)).norm());
  return best;
}

struct ProbeStep {
  double h = 0.0;
  double sup_gap = 0.0;        // sup |phi_L(theta0 + h e) - phi_L(theta0)|
  double quotient_change = 0;  // sup |D1(h) - D1(h_prev)|
  double second_diff = 0.0;    // sup |phi(+h) - 2 phi(0) + phi(-h)| / h^2
  double plain_gap_sq = 0.0;   // |Xi_0(theta0 + h e) - Xi_0(theta0)|^2 in l2
  bool class_change = false;
  std::string note;
};

struct ProbeDirection {
  std::string parameter;
  std::vector<ProbeStep> steps;
  double gap_order = 0.0;       // observed order of sup_gap in h
  double quotient_order = 0.0;  // observed order of the first-difference quotient changes
};

struct SensitivityReport {
  Classification base;
  std::vector<ProbeDirection> directions;
};

inline std::vector<double> default_probe_steps() {
  std::vector<double> h;
  for (int k = 3; k <= 12; ++k) h.push_back(std::ldexp(1.0, -k));
  return h;
}

inline double observed_order(const std::vector<double>& h, const std::vector<double>& v) {
  double sum = 0.0;
  int n = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > 0 && v[i - 1] > 0)) continue;
    sum += std::log(v[i - 1] / v[i]) / std::log(h[i - 1] / h[i]);
    ++n;
  }
  return n ? sum / n : 0.0;
}

inline SensitivityReport sensitivity_probe(const ModelSpec& model, const ParamValues& theta0, const RegularizerSpec& l,
                                           std::vector<double> steps = default_probe_steps(), const Tolerances& tol = default_tolerances()) {
  SensitivityReport rep;
  ParamValues base = model.resolve(theta0);
  SolutionSet s0 = solve(model, base, tol);
  rep.base = s0.cls;
  RationalMatrix phi0 = regularized_from(s0, model, l, tol).transfer;
  HardyElement xi0 = s0.particular.to_hardy();
  for (size_t d = 0; d < base.size(); ++d) {
    ProbeDirection dir;
    dir.parameter = base[d].first;
    std::vector<double> hs, gaps, qchanges, qh;
    RationalMatrix prev_quot;
    bool have_prev = false;
    for (double h : steps) {
      ProbeStep st;
      st.h = h;
      ParamValues up = base, down = base;
      up[d].second += h;
      down[d].second -= h;
      try {
        SolutionSet su = solve(model, up, tol), sd = solve(model, down, tol);
        st.class_change = su.cls.kind != s0.cls.kind || su.cls.kappa != s0.cls.kappa;
        RationalMatrix pu = regularized_from(su, model, l, tol).transfer;
        RationalMatrix pd = regularized_from(sd, model, l, tol).transfer;
        st.sup_gap = transfer_sup_gap(pu, phi0);
        UnitCircleGrid g(1024);
        double sd2 = 0.0;
        for (cd z : g.points()) sd2 = std::max(sd2, (pu.eval(z) - 2.0 * phi0.eval(z) + pd.eval(z)).norm());
        st.second_diff = sd2 / (h * h);
        RationalMatrix quot = cd(1.0 / h) * (pu - phi0);
        if (have_prev) {
          st.quotient_change = transfer_sup_gap(quot, prev_quot, 1024);
          qchanges.push_back(st.quotient_change);
          qh.push_back(h);
        }
        prev_quot = quot;
        have_prev = true;
        double gap = l2_norm(su.particular.to_hardy().f - xi0.f);
        st.plain_gap_sq = gap * gap;
        hs.push_back(h);
        gaps.push_back(st.sup_gap);
      } catch (const std::exception& e) {
        st.note = e.what();
        st.class_change = true;
      }
      dir.steps.push_back(st);
    }
    dir.gap_order = observed_order(hs, gaps);
    dir.quotient_order = observed_order(qh, qchanges);
    rep.directions.push_back(std::move(dir));
  }
  return rep;
}

}  // namespace lrem
