#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "maniopt/objective.hpp"

namespace maniopt {

enum class SolveStatus { GradTol, MaxIter, LineSearchFail, NumericalError };

const char* to_string(SolveStatus s);

struct SolverOptions {
  int max_iter = 1000;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;

  // Armijo backtracking and the nonmonotone reference value
  double ls_rho = 1e-4;
  double ls_delta = 0.5;
  int ls_max_backtracks = 60;
  double nm_rho = 0.85;

  // Barzilai-Borwein safeguards; variant 0 alternates the two rules
  double bb_min = 1e-10;
  double bb_max = 1e10;
  int bb_variant = 0;

  // conjugate gradient direction rule: prp | fr | zero
  std::string cg_beta = "prp";

  // trust region; zeros mean "derive from the starting point"
  double tr_radius_max = 0.0;
  double tr_radius_init = 0.0;
  double tr_rho_prime = 0.1;
  double tcg_kappa = 0.1;
  int tcg_max_inner = 0;

  // adaptively regularized Newton
  double arnt_eta1 = 0.01;
  double arnt_eta2 = 0.9;
  double arnt_gamma0 = 0.2;
  double arnt_gamma1 = 1.0;
  double arnt_gamma2 = 10.0;
  double arnt_sigma0 = 10.0;
  double arnt_sigma_min = 1e-20;
  double arnt_sigma_max = 1e20;
  bool arnt_nonmonotone = false;
  double mcg_eps = 1e-10;
  double mcg_theta = 1.5;
  double mcg_tau = 0.1;
  int mcg_max_inner = 0;

  // quasi-Newton
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int lbfgs_memory = 10;
  int bfgs_dense_dim_cap = 2000;
  double curvature_skip = 1e-12;
  int sketch_rank = 10;

  // variance-reduced stochastic gradient
  int svrg_epochs = 50;
  int svrg_inner = 0;
  double svrg_step = 1e-3;

  // proximal gradient
  double manpg_t = 1e-3;
  double manpg_subtol = 1e-10;
  int manpg_sub_max = 100;

  // geometry choices; unset means the manifold default
  std::optional<RetractionScheme> retraction;
  std::optional<TransportScheme> transport;
};

// Throws InvalidArgument when an option is outside its admissible range.
void validate_options(const SolverOptions& o);

struct TraceRecord {
  int iter = 0;
  double f = 0.0;
  double gradnorm = 0.0;
  double step = 0.0;
  double aux = 0.0;
  double time_s = 0.0;
};

struct SolveResult {
  Point x;
  double f = 0.0;
  double gradnorm = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  std::vector<TraceRecord> trace;
  std::map<std::string, double> stats;
};

// Reference value C and weight Q of the averaged nonmonotone rule:
// given the next accepted f, C' = (rho*Q*C + f) / (rho*Q + 1).
struct NonmonotoneState {
  double c = 0.0;
  double q = 1.0;
  double rho = 0.85;
};

NonmonotoneState update_nonmonotone(const NonmonotoneState& st, double f_next);

// Alternating Barzilai-Borwein step from the ambient differences
// s = x_k - x_{k-1}, v = grad_k - grad_{k-1}. Degenerate inner products fall
// back to gmax; the result is clamped to [gmin, gmax].
double bb_step(const Matrix& s, const Matrix& v, int variant, double gmin,
               double gmax);

struct LineSearchResult {
  bool ok = false;
  double t = 0.0;
  Point x;
  double f = 0.0;
  int evals = 0;
};

// Backtracking search for f(R_x(t*xi)) <= reference + ls_rho * t * slope,
// starting from t_init. slope must be the directional derivative <grad, xi>.
// Monotone when reference = f(x); pass a nonmonotone C for the averaged rule.
LineSearchResult armijo_search(const Manifold& m, const Objective& obj,
                               const Point& x, const Matrix& xi, double slope,
                               double reference, double t_init,
                               const SolverOptions& o, RetractionScheme rs);

// Wolfe search along t -> f(R_x(t*xi)). The curvature condition uses a
// central finite difference of the curve value, so it needs no transport.
LineSearchResult wolfe_search(const Manifold& m, const Objective& obj,
                              const Point& x, const Matrix& xi, double f0,
                              double slope0, const SolverOptions& o,
                              RetractionScheme rs);

}  // namespace maniopt
