#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rational.hpp"

namespace lrem {

// One term A_s + sum_k theta_k B_{s,k} of the coefficient template.
struct CoefficientTerm {
  int power = 0;
  Mat base;
  std::map<std::string, Mat> linear;
};

struct Driver {
  enum class Kind { White, Rational } kind = Kind::White;
  Index r = 1;
  RationalMatrix gamma;    // n x r, used when kind == Rational
  RationalMatrix upsilon;  // r x n left inverse of gamma
};

using ParamValues = std::vector<std::pair<std::string, double>>;

// Affine-in-theta model sum_s M_s(theta) E_t X_{t+s} = forcing * eps_t.
struct ModelSpec {
  std::string name;
  Index m = 1, n = 1;
  std::vector<CoefficientTerm> terms;
  ParamValues parameters;                // names with defaults, in declaration order
  std::optional<LaurentMatrix> forcing;  // m x n, support <= 0; default [I_n; 0]
  Driver driver;

  Index r() const { return driver.kind == Driver::Kind::White ? n : driver.r; }

  double param(const ParamValues& theta, const std::string& key) const {
    for (const auto& [k, v] : theta)
      if (k == key) return v;
    for (const auto& [k, v] : parameters)
      if (k == key) return v;
    throw std::invalid_argument("ModelSpec: unknown parameter '" + key + "'");
  }

  // Defaults overridden by any names present in theta.
  ParamValues resolve(const ParamValues& theta = {}) const {
    for (const auto& [k, v] : theta) {
      bool known = false;
      for (const auto& [pk, pv] : parameters) known = known || pk == k;
      if (!known) throw std::invalid_argument("ModelSpec: unknown parameter '" + k + "'");
    }
    ParamValues out;
    for (const auto& [k, v] : parameters) out.emplace_back(k, param(theta, k));
    return out;
  }

  LaurentMatrix symbol(const ParamValues& theta = {}) const {
    LaurentMatrix out(m, m);
    for (const auto& t : terms) {
      Mat a = t.base;
      for (const auto& [k, b] : t.linear) a += param(theta, k) * b;
      out.add_to(t.power, a);
    }
    return out.prune(0.0);
  }

  LaurentMatrix forcing_matrix() const {
    if (forcing) return *forcing;
    Mat f = Mat::Zero(m, n);
    f.topRows(std::min(m, n)) = Mat::Identity(std::min(m, n), n);
    return LaurentMatrix::constant(f);
  }

  // forcing * Gamma, the right-hand side in transfer-function coordinates.
  RationalMatrix rhs() const {
    LaurentMatrix f = forcing_matrix();
    if (driver.kind == Driver::Kind::White) return RationalMatrix(f);
    return f * driver.gamma;
  }

  void validate() const {
    if (m < 1 || n < 1 || n > m) throw DimensionError("ModelSpec: need 1 <= n <= m");
    for (const auto& t : terms) {
      if (t.base.rows() != m || t.base.cols() != m) throw DimensionError("ModelSpec: coefficient is not m x m");
      for (const auto& [k, b] : t.linear) {
        if (b.rows() != m || b.cols() != m) throw DimensionError("ModelSpec: linear coefficient is not m x m");
        bool known = false;
        for (const auto& [pk, pv] : parameters) known = known || pk == k;
        if (!known) throw std::invalid_argument("ModelSpec: coefficient refers to unknown parameter '" + k + "'");
      }
    }
    if (forcing) {
      if (forcing->rows() != m || forcing->cols() != n) throw DimensionError("ModelSpec: forcing is not m x n");
      if (!forcing->is_zero() && forcing->hi() > 0) throw std::invalid_argument("ModelSpec: forcing has positive powers");
    }
    if (driver.kind == Driver::Kind::Rational) {
      if (driver.gamma.rows() != n || driver.gamma.cols() != driver.r) throw DimensionError("ModelSpec: gamma is not n x r");
      if (driver.upsilon.rows() != driver.r || driver.upsilon.cols() != n) throw DimensionError("ModelSpec: upsilon is not r x n");
      if (driver.gamma.decay_radius() >= 1.0 || driver.upsilon.decay_radius() >= 1.0)
        throw std::invalid_argument("ModelSpec: driver factors must be causal and stable");
      UnitCircleGrid g(default_tolerances().grid);
      double worst = 0.0;
      const Mat id = Mat::Identity(driver.r, driver.r);
      for (cd z : g.points()) worst = std::max(worst, (driver.upsilon.eval(z) * driver.gamma.eval(z) - id).norm());
      if (worst > 1e-8) throw std::invalid_argument("ModelSpec: upsilon is not a left inverse of gamma");
    }
  }
};

namespace builtin {

inline Mat unit(Index m, Index i, Index j) {
  Mat e = Mat::Zero(m, m);
  e(i, j) = 1.0;
  return e;
}

// 1 - alpha z^-1.
inline ModelSpec ar1() {
  ModelSpec s;
  s.name = "ar1";
  s.parameters = {{"alpha", 0.5}};
  s.terms.push_back({0, Mat::Identity(1, 1), {}});
  s.terms.push_back({-1, Mat::Zero(1, 1), {{"alpha", -Mat::Identity(1, 1)}}});
  return s;
}

// 1 - beta z.
inline ModelSpec cagan() {
  ModelSpec s;
  s.name = "cagan";
  s.parameters = {{"beta", 2.0}};
  s.terms.push_back({0, Mat::Identity(1, 1), {}});
  s.terms.push_back({1, Mat::Zero(1, 1), {{"beta", -Mat::Identity(1, 1)}}});
  return s;
}

// a z + b + c z^-1; the defaults put both roots of a z^2 + b z + c outside
// the disk.
inline ModelSpec mixed() {
  ModelSpec s;
  s.name = "mixed";
  s.parameters = {{"a", 0.2}, {"b", -0.9}, {"c", 1.0}};
  s.terms.push_back({1, Mat::Zero(1, 1), {{"a", Mat::Identity(1, 1)}}});
  s.terms.push_back({0, Mat::Zero(1, 1), {{"b", Mat::Identity(1, 1)}}});
  s.terms.push_back({-1, Mat::Zero(1, 1), {{"c", Mat::Identity(1, 1)}}});
  return s;
}

// [[z^2, 0], [theta z, 1]].
inline ModelSpec nongeneric() {
  ModelSpec s;
  s.name = "nongeneric";
  s.m = s.n = 2;
  s.parameters = {{"theta", 1.0}};
  s.terms.push_back({2, unit(2, 0, 0), {}});
  s.terms.push_back({1, Mat::Zero(2, 2), {{"theta", unit(2, 1, 0)}}});
  s.terms.push_back({0, unit(2, 1, 1), {}});
  return s;
}

inline std::vector<std::string> names() { return {"ar1", "cagan", "mixed", "nongeneric"}; }

inline ModelSpec by_name(const std::string& name) {
  if (name == "ar1") return ar1();
  if (name == "cagan") return cagan();
  if (name == "mixed") return mixed();
  if (name == "nongeneric") return nongeneric();
  throw std::invalid_argument("unknown builtin model '" + name + "'");
}

}  // namespace builtin

}  // namespace lrem
