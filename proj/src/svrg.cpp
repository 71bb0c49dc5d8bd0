#include <cmath>

#include "maniopt/rng.hpp"
#include "solver_util.hpp"

namespace maniopt {

SolveResult solve_rsvrg(const ProblemInstance& p, const Point& x0,
                        const SolverOptions& o) {
  validate_options(o);
  const Manifold& m = p.manifold;
  if (p.objective.components.empty())
    throw InvalidArgument("solve_rsvrg needs a finite-sum objective");
  RetractionScheme rs = detail::pick_retraction(m, o);
  auto t0 = detail::Clock::now();

  const auto& comps = p.objective.components;
  int n_comp = static_cast<int>(comps.size());
  int inner = o.svrg_inner > 0 ? o.svrg_inner : n_comp;
  double tau = o.svrg_step;
  Rng rng(o.seed);

  auto full_egrad = [&](const Point& x) -> Matrix {
    if (p.objective.egrad) return p.objective.egrad(x);
    Matrix g = comps[0].egrad(x);
    for (int i = 1; i < n_comp; ++i) g += comps[i].egrad(x);
    return g;
  };

  SolveResult res;
  res.x = detail::checked_start(p, x0);

  double anchor_residual_max = 0.0;
  bool converged = false;

  for (int s = 0; s < o.svrg_epochs && !converged; ++s) {
    Matrix full_g = full_egrad(res.x);
    Matrix rg = m.egrad_to_rgrad(res.x, full_g);
    res.f = p.value(res.x);
    res.gradnorm = rg.norm();
    res.iterations = s;
    detail::push_trace(res, s, res.f, res.gradnorm, tau, 0.0, t0);
    if (res.gradnorm <= o.grad_tol) {
      converged = true;
      break;
    }

    Point anchor = res.x;
    Point xk = res.x;
    for (int k = 0; k < inner; ++k) {
      int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_comp)));
      Matrix corrected = comps[i].egrad(xk) - comps[i].egrad(anchor) + full_g;
      Matrix xi = m.project(xk, corrected);
      if (k == 0) {
        // at the epoch anchor the correction must cancel exactly
        double r = (xi - m.project(xk, full_g)).norm();
        anchor_residual_max = std::max(anchor_residual_max, r);
      }
      xk = m.retract(xk, -tau * xi, rs);
    }
    res.x = std::move(xk);
  }

  if (!converged) {
    Matrix rg = m.egrad_to_rgrad(res.x, full_egrad(res.x));
    res.f = p.value(res.x);
    res.gradnorm = rg.norm();
    res.iterations = o.svrg_epochs;
    detail::push_trace(res, o.svrg_epochs, res.f, res.gradnorm, tau, 0.0, t0);
  }
  res.status = res.gradnorm <= o.grad_tol ? SolveStatus::GradTol
                                          : SolveStatus::MaxIter;
  res.stats["anchor_residual_max"] = anchor_residual_max;
  return res;
}

}  // namespace maniopt
