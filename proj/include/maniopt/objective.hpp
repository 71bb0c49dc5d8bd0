#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maniopt/manifold.hpp"

namespace maniopt {

// Nonsmooth convex term h in f = g + h, given through its value and proximal
// map prox(z, t) = argmin_d 0.5*|d - z|_F^2 + t*h(d). prox_jacobian_diag
// returns the 0/1 activity pattern of the prox at z (the diagonal of one
// generalized Jacobian element); solvers that need a Newton model of the prox
// fall back to fixed-point iterations when it is absent.
struct Nonsmooth {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&, double)> prox;
  std::function<Matrix(const Matrix&, double)> prox_jacobian_diag;
  double lipschitz = 0.0;
};

// One term of a finite-sum objective f = sum_i f_i.
struct Component {
  std::function<double(const Point&)> value;
  std::function<Matrix(const Point&)> egrad;
};

// Split f = cheap + expensive for structured quasi-Newton models: the cheap
// Hessian is exact and inexpensive, the expensive part is approximated.
struct HessianSplit {
  std::function<Matrix(const Point&, const Matrix&)> cheap_hess_vec;
  std::function<Matrix(const Point&)> expensive_egrad;
  // optional; required only by sketching approximations
  std::function<Matrix(const Point&, const Matrix&)> expensive_hess_vec;
};

// Smooth objective in ambient coordinates. value/egrad are mandatory;
// ehess_vec(x, u) applies the Euclidean Hessian and may be absent (solvers
// that need curvature then use a finite-difference surrogate).
// All callbacks must be pure functions of the point for reproducibility.
struct Objective {
  std::function<double(const Point&)> value;
  std::function<Matrix(const Point&)> egrad;
  std::function<Matrix(const Point&, const Matrix&)> ehess_vec;
  std::vector<Component> components;
  std::optional<Nonsmooth> nonsmooth;
  std::optional<HessianSplit> split;

  bool has_hess() const { return static_cast<bool>(ehess_vec); }
  bool has_nonsmooth() const { return nonsmooth.has_value(); }
};

// Independently computed reference value (dense eigensolver, brute force,
// planted construction, ...) used by tests and reports.
struct Certificate {
  double value = 0.0;
  std::string detail;
};

struct ProblemInstance {
  Manifold manifold;
  Objective objective;
  std::string name;
  std::map<std::string, double> dims;
  std::uint64_t seed = 0;
  std::optional<Certificate> certificate;
  // instance data kept for reference checks and reports (weights, masks,
  // planted solutions, ...)
  std::map<std::string, Matrix> data;

  double value(const Point& x) const { return objective.value(x); }
  Matrix rgrad(const Point& x) const {
    return manifold.egrad_to_rgrad(x, objective.egrad(x));
  }
};

}  // namespace maniopt
