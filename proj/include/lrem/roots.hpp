#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "laurent.hpp"

namespace lrem {

struct RootCluster {
  cd value;
  int mult = 1;
};

// Roots of sum_k a[k] z^k (ascending coefficients, a.back() != 0) via
// companion-matrix eigenvalues.
inline std::vector<cd> poly_roots(const std::vector<cd>& a) {
  std::vector<cd> p = a;
  while (!p.empty() && p.back() == cd(0.0)) p.pop_back();
  std::vector<cd> out;
  size_t zeros = 0;
  while (zeros < p.size() && p[zeros] == cd(0.0)) ++zeros;
  out.assign(zeros, cd(0.0));
  p.erase(p.begin(), p.begin() + static_cast<long>(zeros));
  const Index d = static_cast<Index>(p.size()) - 1;
  if (d <= 0) return out;
  if (d == 1) {
    out.push_back(-p[0] / p[1]);
    return out;
  }
  Mat c = Mat::Zero(d, d);
  for (Index j = 0; j < d; ++j) c(0, j) = -p[static_cast<size_t>(d - 1 - j)] / p[static_cast<size_t>(d)];
  for (Index i = 1; i < d; ++i) c(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Mat> es(c, false);
  for (Index i = 0; i < d; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

inline std::vector<RootCluster> cluster_roots(std::vector<cd> r, double rel = default_tolerances().cluster) {
  std::sort(r.begin(), r.end(), [](cd a, cd b) { return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : std::arg(a) < std::arg(b); });
  std::vector<RootCluster> out;
  std::vector<bool> used(r.size(), false);
  for (size_t i = 0; i < r.size(); ++i) {
    if (used[i]) continue;
    cd sum = r[i];
    int n = 1;
    used[i] = true;
    for (size_t j = i + 1; j < r.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(r[j] - r[i]) <= rel * std::max(1.0, std::abs(r[i]))) {
        sum += r[j];
        ++n;
        used[j] = true;
      }
    }
    out.push_back({sum / double(n), n});
  }
  return out;
}

enum class RootSide { Inside, OnCircle, Outside };

inline RootSide classify_root(cd r, double tol = default_tolerances().circle) {
  double a = std::abs(r);
  if (a < 1.0 - tol) return RootSide::Inside;
  if (a > 1.0 + tol) return RootSide::Outside;
  return RootSide::OnCircle;
}

// Scalar rational function num/den with certified, factored root lists:
//   f(z) = lead * z^power * prod (z - zero)^m / prod (z - pole)^m
// where zeros and poles are the nonzero finite roots.
class ScalarRational {
 public:
  ScalarRational() = default;
  explicit ScalarRational(LaurentPoly num, LaurentPoly den = LaurentPoly::constant(1.0), const Tolerances& tol = default_tolerances())
      : num_(std::move(num)), den_(std::move(den)) {
    num_.trim(0.0);
    den_.trim(0.0);
    if (den_.is_zero()) throw std::invalid_argument("ScalarRational: zero denominator");
    if (num_.is_zero()) {
      zero_ = true;
      return;
    }
    lead_ = num_.c.back() / den_.c.back();
    power_ = num_.lo - den_.lo;
    zeros_ = cluster_roots(poly_roots(num_.c), tol.cluster);
    poles_ = cluster_roots(poly_roots(den_.c), tol.cluster);
    for (const auto& z : zeros_)
      if (classify_root(z.value, tol.circle) == RootSide::OnCircle) circle_points_.push_back(z.value);
    for (const auto& p : poles_)
      if (classify_root(p.value, tol.circle) == RootSide::OnCircle) circle_points_.push_back(p.value);
    tol_ = tol;
  }

  const LaurentPoly& num() const { return num_; }
  const LaurentPoly& den() const { return den_; }
  bool is_zero() const { return zero_; }
  cd lead() const { return lead_; }
  int power() const { return power_; }
  const std::vector<RootCluster>& zeros() const { return zeros_; }
  const std::vector<RootCluster>& poles() const { return poles_; }
  bool circle_singular() const { return !circle_points_.empty(); }
  const std::vector<cd>& circle_points() const { return circle_points_; }
  const Tolerances& tolerances() const { return tol_; }

  cd eval(cd z) const { return num_.eval(z) / den_.eval(z); }

  cd eval_factored(cd z) const {
    if (zero_) return 0.0;
    cd v = lead_ * std::pow(z, power_);
    for (const auto& r : zeros_) v *= std::pow(z - r.value, r.mult);
    for (const auto& p : poles_) v /= std::pow(z - p.value, p.mult);
    return v;
  }

  int count_zeros(RootSide side) const {
    int n = 0;
    for (const auto& r : zeros_)
      if (classify_root(r.value, tol_.circle) == side) n += r.mult;
    return n;
  }
  int count_poles(RootSide side) const {
    int n = 0;
    for (const auto& p : poles_)
      if (classify_root(p.value, tol_.circle) == side) n += p.mult;
    return n;
  }

 private:
  LaurentPoly num_, den_;
  bool zero_ = false;
  cd lead_ = 0.0;
  int power_ = 0;
  std::vector<RootCluster> zeros_, poles_;
  std::vector<cd> circle_points_;
  Tolerances tol_{};
};

inline ScalarRational lm_det(const LaurentMatrix& a, const Tolerances& tol = default_tolerances()) {
  return ScalarRational(lm_det_poly(a), LaurentPoly::constant(1.0), tol);
}

// Winding number by discrete phase unwrapping on an n-point grid.
inline int winding_by_phase(const std::function<cd(cd)>& f, int n) {
  double total = 0.0;
  cd prev = f(cd(1.0, 0.0));
  for (int k = 1; k <= n; ++k) {
    cd cur = f(std::polar(1.0, 2.0 * std::numbers::pi * k / n));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

// (#zeros inside) - (#poles inside), counted with multiplicity; cross-checked
// by phase unwrapping.
inline int winding_number(const ScalarRational& f) {
  if (f.is_zero()) throw CircleSingularError("winding_number: zero function", {});
  if (f.circle_singular()) throw CircleSingularError("winding_number: roots on the unit circle", f.circle_points());
  int by_roots = f.power() + f.count_zeros(RootSide::Inside) - f.count_poles(RootSide::Inside);
  for (int n = 4096; n <= (1 << 18); n *= 2) {
    int by_phase = winding_by_phase([&](cd z) { return f.eval(z); }, n);
    if (by_phase == by_roots) return by_roots;
  }
  throw std::runtime_error("winding_number: root count and phase unwrapping disagree");
}

// Expands prod (1 - r z^sign)^mult as a Laurent polynomial.
inline LaurentPoly expand_factors(const std::vector<RootCluster>& roots, int sign, bool invert_root) {
  LaurentPoly p = LaurentPoly::constant(1.0);
  for (const auto& r : roots) {
    cd a = invert_root ? 1.0 / r.value : r.value;
    LaurentPoly f = sign > 0 ? LaurentPoly(0, {1.0, -a}) : LaurentPoly(-1, {-a, 1.0});
    for (int k = 0; k < r.mult; ++k) p = p * f;
  }
  return p;
}

}  // namespace lrem
