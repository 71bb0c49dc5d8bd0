#include <cmath>

#include "solver_util.hpp"

namespace maniopt {

SolveResult solve_rtr(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o) {
  validate_options(o);
  const Manifold& m = p.manifold;
  RetractionScheme rs = detail::pick_retraction(m, o);
  auto t0 = detail::Clock::now();

  bool hess_fd = false;
  auto ehess = detail::make_ehess_op(p, &hess_fd);

  SolveResult res;
  res.x = detail::checked_start(p, x0);
  res.f = p.value(res.x);
  Matrix eg = p.objective.egrad(res.x);
  Matrix g = m.egrad_to_rgrad(res.x, eg);
  res.gradnorm = g.norm();

  double radius_max =
      o.tr_radius_max > 0 ? o.tr_radius_max : 10.0 * res.x.value.norm();
  double radius =
      o.tr_radius_init > 0 ? o.tr_radius_init : radius_max / 8.0;
  int max_inner = detail::inner_cap(o.tcg_max_inner, m.intrinsic_dim());

  detail::push_trace(res, 0, res.f, res.gradnorm, 0.0, radius, t0);
  double rejected = 0, boundary_hits = 0;

  for (int k = 1; k <= o.max_iter; ++k) {
    if (res.gradnorm <= o.grad_tol) {
      res.status = SolveStatus::GradTol;
      break;
    }
    if (radius < 1e-16) {
      res.status = SolveStatus::NumericalError;
      break;
    }

    auto hop = detail::make_rhess_op(m, res.x, eg, ehess);
    TcgResult sub = truncated_cg(g, hop, radius, o.tcg_kappa, max_inner);
    if (sub.hit_boundary) boundary_hits += 1;

    double model = dot(g, sub.xi) + 0.5 * dot(hop(sub.xi), sub.xi);
    if (!std::isfinite(model)) {
      res.status = SolveStatus::NumericalError;
      break;
    }

    bool feasible = true;
    Point y;
    double fy = 0.0;
    try {
      y = m.retract(res.x, sub.xi, rs);
      fy = p.value(y);
      feasible = std::isfinite(fy);
    } catch (const NumericalError&) {
      feasible = false;
    }

    // regularizing both reduction estimates keeps the ratio meaningful once
    // the decrease falls to rounding noise
    double reg = 1e-13 * std::max(1.0, std::abs(res.f));
    double rho = feasible && model < reg
                     ? (res.f - fy + reg) / (-model + reg)
                     : -1.0;
    double step_norm = sub.xi.norm();

    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && sub.hit_boundary) {
      radius = std::min(2.0 * radius, radius_max);
    }

    res.iterations = k;
    if (rho > o.tr_rho_prime) {
      res.x = std::move(y);
      res.f = fy;
      eg = p.objective.egrad(res.x);
      g = m.egrad_to_rgrad(res.x, eg);
      res.gradnorm = g.norm();
      detail::push_trace(res, k, res.f, res.gradnorm, step_norm, radius, t0);
    } else {
      rejected += 1;
      detail::push_trace(res, k, res.f, res.gradnorm, 0.0, radius, t0);
    }
  }

  if (res.status == SolveStatus::MaxIter && res.gradnorm <= o.grad_tol)
    res.status = SolveStatus::GradTol;
  res.stats["rejected_steps"] = rejected;
  res.stats["boundary_hits"] = boundary_hits;
  res.stats["hess_fd"] = hess_fd ? 1.0 : 0.0;
  return res;
}

}  // namespace maniopt
