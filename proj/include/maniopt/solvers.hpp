#pragma once

#include "maniopt/solver_core.hpp"

namespace maniopt {

// Gradient descent with alternating Barzilai-Borwein steps and a nonmonotone
// Armijo search against the averaged reference value.
SolveResult solve_rgd(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o);

// Conjugate gradient; directions are recombined through the configured vector
// transport and fall back to steepest descent when descent is lost.
// cg_beta = "zero" reproduces solve_rgd iterate for iterate.
SolveResult solve_rcg(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o);

// Trust region with a Steihaug truncated CG subproblem solver.
SolveResult solve_rtr(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o);

// Adaptively regularized Newton: modified CG on the shifted Newton system,
// Armijo along the resulting direction, ratio-driven shift update.
SolveResult solve_arnt(const ProblemInstance& p, const Point& x0,
                       const SolverOptions& o);

// BFGS in a moving orthonormal tangent frame for small intrinsic dimension,
// limited-memory two-loop recursion above bfgs_dense_dim_cap.
SolveResult solve_rbfgs(const ProblemInstance& p, const Point& x0,
                        const SolverOptions& o);

enum class SqnMode { SecantLm, Nystrom };

// Structured quasi-Newton: exact cheap curvature plus a limited-memory secant
// or sketched surrogate of the expensive part, driven by the regularized
// Newton outer loop. The objective must carry a HessianSplit.
SolveResult solve_sqn(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o, SqnMode mode);

// Variance-reduced stochastic gradient over objective.components with a full
// gradient recomputed at every epoch start.
SolveResult solve_rsvrg(const ProblemInstance& p, const Point& x0,
                        const SolverOptions& o);

// Proximal gradient for f = g + h: the search direction solves the proximal
// subproblem restricted to the tangent space through a semismooth Newton
// method on the multiplier, with Armijo on the total objective.
SolveResult solve_manpg(const ProblemInstance& p, const Point& x0,
                        const SolverOptions& o);

struct TcgResult {
  Matrix xi;
  bool hit_boundary = false;
  int iterations = 0;
  std::string reason;
};

// Steihaug truncated CG for min <g,s> + 0.5<H s,s> subject to |s| <= radius.
// Stops on the boundary, on negative curvature, or at the relative residual
// min(kappa, |r0|) * |r0|.
TcgResult truncated_cg(const Matrix& grad,
                       const std::function<Matrix(const Matrix&)>& hess,
                       double radius, double kappa, int max_inner);

struct McgResult {
  Matrix s;
  Matrix d;
  Matrix xi;
  double sigma_est = 0.0;
  int iterations = 0;
  bool negative_curvature = false;
  bool small_curvature = false;
};

// Modified CG on H s = -grad that terminates when curvature along the CG
// direction drops below eps, returning both the accumulated solution s and,
// for decisively negative curvature, the direction d with a curvature
// magnitude estimate. The combined step is xi = s + tau * d with
// tau = <d, grad> / <d, H d>; on a first-iteration curvature exit s = -grad.
McgResult modified_cg(const Matrix& grad,
                      const std::function<Matrix(const Matrix&)>& hess,
                      double eps, double theta, double tau_cap, int max_inner);

// Dense BFGS update in tangent coordinates. b must be symmetric positive
// definite and the pair must satisfy <y,s> > 0; the result maps s to y.
Matrix rbfgs_update(const Matrix& b, const Vector& s, const Vector& y);

struct ManpgSubResult {
  Matrix d;
  Vector lambda;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  double residual = 0.0;
};

// Tangent-space proximal subproblem: find the multiplier lambda with
// A_x(d(lambda)) = 0 where d(lambda) = prox_{t h}(x - t(rgrad - A_x^*(lambda))) - x
// and A_x linearizes the manifold constraint at x. lambda0 warm-starts the
// semismooth Newton iteration (pass an empty vector for a cold start).
ManpgSubResult manpg_subproblem(const Manifold& m, const Point& x,
                                const Matrix& rgrad, const Nonsmooth& h,
                                double t, double tol, int max_iter,
                                const Vector& lambda0);

}  // namespace maniopt
