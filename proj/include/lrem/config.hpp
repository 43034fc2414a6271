#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lrem {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Index = Eigen::Index;

// Numerical tolerances shared by every module. Defaults are the library-wide
// values; callers override individual fields and pass the struct down.
struct Tolerances {
  double drop = 1e-13;      // prune coefficients below this Frobenius norm
  double circle = 1e-9;     // |r| within this of 1 counts as on the circle
  double cluster = 1e-7;    // relative distance for merging repeated roots
  double factor = 1e-8;     // residual certificate for factorizations
  double pd = 1e-10;        // minimum eigenvalue for positive definiteness
  double gram = 1e-10;      // Gram singularity threshold
  double rank = 1e-8;       // singular value threshold for rank decisions
  double series = 1e-14;    // tail bound when expanding rational series
  int grid = 4096;          // quadrature / sup-norm grid size
  int section_start = 64;   // first finite-section order
  int section_max = 4096;   // largest finite-section order
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OffCircleError : std::domain_error {
  using std::domain_error::domain_error;
};

// Raised when a symbol has zeros (or poles) on the unit circle.
struct CircleSingularError : std::runtime_error {
  std::vector<cd> points;
  CircleSingularError(const std::string& what, std::vector<cd> pts)
      : std::runtime_error(what), points(std::move(pts)) {}
};

struct UnfactorableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveError : std::runtime_error {
  cd point;
  NonPositiveError(const std::string& what, cd z) : std::runtime_error(what), point(z) {}
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lrem
