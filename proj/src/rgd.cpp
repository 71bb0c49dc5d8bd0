#include <cmath>

#include "solver_util.hpp"

namespace maniopt {
namespace {

// Shared loop: conjugate directions collapse to steepest descent when
// beta_rule is "zero", which makes solve_rgd and solve_rcg(zero) identical.
SolveResult descent_loop(const ProblemInstance& p, const Point& x0,
                         const SolverOptions& o, const std::string& beta_rule) {
  validate_options(o);
  const Manifold& m = p.manifold;
  RetractionScheme rs = detail::pick_retraction(m, o);
  TransportScheme ts = detail::pick_transport(m, o, rs);
  auto t0 = detail::Clock::now();

  SolveResult res;
  res.x = detail::checked_start(p, x0);
  res.f = p.value(res.x);
  Matrix g = p.rgrad(res.x);
  res.gradnorm = g.norm();

  NonmonotoneState nm{res.f, 1.0, o.nm_rho};
  detail::push_trace(res, 0, res.f, res.gradnorm, 0.0, nm.c, t0);

  Point prev_x;
  Matrix prev_grad, prev_eta;
  double prev_t = 0.0;
  double fallback_count = 0;
  bool have_prev = false;

  for (int k = 1; k <= o.max_iter; ++k) {
    if (res.gradnorm <= o.grad_tol) {
      res.status = SolveStatus::GradTol;
      break;
    }

    Matrix eta = -g;
    if (have_prev && beta_rule != "zero") {
      Matrix step_vec = prev_t * prev_eta;
      Matrix tg = m.transport(prev_x, step_vec, res.x, prev_grad, ts);
      Matrix teta = m.transport(prev_x, step_vec, res.x, prev_eta, ts);
      double denom = dot(prev_grad, prev_grad);
      double beta = 0.0;
      if (denom > 0) {
        if (beta_rule == "prp") {
          beta = std::max(0.0, dot(g, g - tg) / denom);
        } else if (beta_rule == "fr") {
          beta = dot(g, g) / denom;
        }
      }
      if (beta != 0.0) {
        eta = -g + beta * teta;
        if (dot(g, eta) >= -1e-12 * g.norm() * eta.norm()) {
          eta = -g;
          fallback_count += 1;
        }
      }
    }

    double slope = dot(g, eta);
    double gamma;
    if (!have_prev) {
      gamma = std::min(1.0, 1.0 / std::max(res.gradnorm, 1e-12));
    } else {
      Matrix s = res.x.value - prev_x.value;
      Matrix v = g - prev_grad;
      int variant = o.bb_variant == 0 ? (k % 2 == 1 ? 1 : 2) : o.bb_variant;
      gamma = bb_step(s, v, variant, o.bb_min, o.bb_max);
    }

    LineSearchResult ls =
        armijo_search(m, p.objective, res.x, eta, slope, nm.c, gamma, o, rs);
    if (!ls.ok) {
      res.status = SolveStatus::LineSearchFail;
      break;
    }

    prev_x = res.x;
    prev_grad = g;
    prev_eta = eta;
    prev_t = ls.t;
    have_prev = true;

    res.x = std::move(ls.x);
    res.f = ls.f;
    g = p.rgrad(res.x);
    res.gradnorm = g.norm();
    nm = update_nonmonotone(nm, res.f);
    res.iterations = k;
    detail::push_trace(res, k, res.f, res.gradnorm, ls.t, nm.c, t0);
  }

  if (res.status == SolveStatus::MaxIter && res.gradnorm <= o.grad_tol)
    res.status = SolveStatus::GradTol;
  res.stats["cg_fallbacks"] = fallback_count;
  return res;
}

}  // namespace

SolveResult solve_rgd(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o) {
  return descent_loop(p, x0, o, "zero");
}

SolveResult solve_rcg(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o) {
  return descent_loop(p, x0, o, o.cg_beta);
}

}  // namespace maniopt
