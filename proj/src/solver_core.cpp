#include "maniopt/solver_core.hpp"

#include <cmath>
#include <limits>

#include "solver_util.hpp"

namespace maniopt {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::GradTol: return "grad_tol";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::LineSearchFail: return "line_search_fail";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

void validate_options(const SolverOptions& o) {
  auto bad = [](const std::string& what) {
    throw InvalidArgument("solver options: " + what);
  };
  if (o.max_iter < 1) bad("max_iter must be positive");
  if (!(o.grad_tol > 0)) bad("grad_tol must be positive");
  if (!(o.ls_rho > 0 && o.ls_rho < 1)) bad("ls_rho must lie in (0,1)");
  if (!(o.ls_delta > 0 && o.ls_delta < 1)) bad("ls_delta must lie in (0,1)");
  if (o.ls_max_backtracks < 1) bad("ls_max_backtracks must be positive");
  if (!(o.nm_rho >= 0 && o.nm_rho < 1)) bad("nm_rho must lie in [0,1)");
  if (!(o.bb_min > 0 && o.bb_min <= o.bb_max)) bad("bb bounds must satisfy 0 < bb_min <= bb_max");
  if (o.bb_variant < 0 || o.bb_variant > 2) bad("bb_variant must be 0, 1 or 2");
  if (o.cg_beta != "prp" && o.cg_beta != "fr" && o.cg_beta != "zero")
    bad("cg_beta must be one of prp, fr, zero");
  if (o.tr_radius_max < 0 || o.tr_radius_init < 0) bad("trust region radii must be nonnegative");
  if (o.tr_radius_max > 0 && o.tr_radius_init > o.tr_radius_max)
    bad("tr_radius_init must not exceed tr_radius_max");
  if (!(o.tr_rho_prime > 0 && o.tr_rho_prime < 0.25)) bad("tr_rho_prime must lie in (0, 0.25)");
  if (!(o.tcg_kappa > 0 && o.tcg_kappa < 1)) bad("tcg_kappa must lie in (0,1)");
  if (o.tcg_max_inner < 0) bad("tcg_max_inner must be nonnegative");
  if (!(o.arnt_eta1 > 0 && o.arnt_eta1 <= o.arnt_eta2 && o.arnt_eta2 < 1))
    bad("arnt ratio thresholds must satisfy 0 < eta1 <= eta2 < 1");
  if (!(o.arnt_gamma0 > 0 && o.arnt_gamma0 < o.arnt_gamma1 &&
        o.arnt_gamma1 <= 1.0 && 1.0 <= o.arnt_gamma2))
    bad("arnt shift factors must satisfy 0 < gamma0 < gamma1 <= 1 <= gamma2");
  if (!(o.arnt_sigma0 > 0)) bad("arnt_sigma0 must be positive");
  if (!(o.mcg_eps >= 0)) bad("mcg_eps must be nonnegative");
  if (!(o.mcg_theta > 0)) bad("mcg_theta must be positive");
  if (!(o.mcg_tau > 0)) bad("mcg_tau must be positive");
  if (!(o.wolfe_c1 > 0 && o.wolfe_c1 < o.wolfe_c2 && o.wolfe_c2 < 1))
    bad("wolfe constants must satisfy 0 < c1 < c2 < 1");
  if (o.lbfgs_memory < 1) bad("lbfgs_memory must be positive");
  if (o.bfgs_dense_dim_cap < 0) bad("bfgs_dense_dim_cap must be nonnegative");
  if (o.curvature_skip < 0) bad("curvature_skip must be nonnegative");
  if (o.sketch_rank < 1) bad("sketch_rank must be positive");
  if (o.svrg_epochs < 1) bad("svrg_epochs must be positive");
  if (o.svrg_inner < 0) bad("svrg_inner must be nonnegative");
  if (!(o.svrg_step > 0)) bad("svrg_step must be positive");
  if (!(o.manpg_t > 0)) bad("manpg_t must be positive");
  if (!(o.manpg_subtol > 0)) bad("manpg_subtol must be positive");
  if (o.manpg_sub_max < 1) bad("manpg_sub_max must be positive");
}

NonmonotoneState update_nonmonotone(const NonmonotoneState& st, double f_next) {
  NonmonotoneState out = st;
  double q_next = st.rho * st.q + 1.0;
  out.c = (st.rho * st.q * st.c + f_next) / q_next;
  out.q = q_next;
  return out;
}

double bb_step(const Matrix& s, const Matrix& v, int variant, double gmin,
               double gmax) {
  double sv = std::abs(dot(s, v));
  double gamma;
  if (variant == 1) {
    gamma = sv > 0 ? dot(s, s) / sv : gmax;
  } else {
    double vv = dot(v, v);
    gamma = vv > 0 ? sv / vv : gmax;
  }
  if (!(gamma > 0) || !std::isfinite(gamma)) gamma = gmax;
  if (gamma < gmin) gamma = gmin;
  if (gamma > gmax) gamma = gmax;
  return gamma;
}

LineSearchResult armijo_search(const Manifold& m, const Objective& obj,
                               const Point& x, const Matrix& xi, double slope,
                               double reference, double t_init,
                               const SolverOptions& o, RetractionScheme rs) {
  LineSearchResult res;
  if (!(slope < 0) || !std::isfinite(slope))
    throw InvalidArgument("armijo search: slope must be negative and finite");
  if (!(t_init > 0) || !std::isfinite(t_init))
    throw InvalidArgument("armijo search: initial step must be positive");
  double t = t_init;
  for (int k = 0; k < o.ls_max_backtracks; ++k) {
    bool feasible = true;
    Point y;
    try {
      y = m.retract(x, t * xi, rs);
    } catch (const NumericalError&) {
      feasible = false;
    }
    if (feasible) {
      double fy = obj.value(y);
      ++res.evals;
      if (std::isfinite(fy) && fy <= reference + o.ls_rho * t * slope) {
        res.ok = true;
        res.t = t;
        res.x = std::move(y);
        res.f = fy;
        return res;
      }
    }
    t *= o.ls_delta;
  }
  return res;
}

LineSearchResult wolfe_search(const Manifold& m, const Objective& obj,
                              const Point& x, const Matrix& xi, double f0,
                              double slope0, const SolverOptions& o,
                              RetractionScheme rs) {
  LineSearchResult res;
  if (!(slope0 < 0) || !std::isfinite(slope0)) return res;

  auto phi = [&](double t, bool* ok) -> double {
    try {
      Point y = m.retract(x, t * xi, rs);
      ++res.evals;
      double fy = obj.value(y);
      *ok = std::isfinite(fy);
      return fy;
    } catch (const NumericalError&) {
      *ok = false;
      return std::numeric_limits<double>::infinity();
    }
  };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double t = 1.0;
  for (int k = 0; k < o.ls_max_backtracks; ++k) {
    bool ok = true;
    Point y;
    double fy = std::numeric_limits<double>::infinity();
    try {
      y = m.retract(x, t * xi, rs);
      fy = obj.value(y);
      ++res.evals;
      ok = std::isfinite(fy);
    } catch (const NumericalError&) {
      ok = false;
    }
    if (!ok || fy > f0 + o.wolfe_c1 * t * slope0) {
      hi = t;
      t = 0.5 * (lo + hi);
      continue;
    }
    double h = 1e-6 * std::max(t, 1e-3);
    bool okp = false, okm = false;
    double fp = phi(t + h, &okp);
    double fm = phi(t - h, &okm);
    if (okp && okm) {
      double dphi = (fp - fm) / (2.0 * h);
      if (dphi < o.wolfe_c2 * slope0) {
        lo = t;
        t = std::isinf(hi) ? 2.0 * t : 0.5 * (lo + hi);
        continue;
      }
    }
    res.ok = true;
    res.t = t;
    res.x = std::move(y);
    res.f = fy;
    return res;
  }
  return res;
}

}  // namespace maniopt
