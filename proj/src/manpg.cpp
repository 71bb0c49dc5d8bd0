#include <cmath>

#include "solver_util.hpp"

namespace maniopt {
namespace {

// Linearized constraint map A_x, its adjoint, and an orthonormal coordinate
// basis for the multiplier space. Supported: sphere and Stiefel (symmetric
// multiplier), oblique (one multiplier per column).
struct ConstraintMap {
  long q = 0;
  std::function<Vector(const Matrix&)> apply;       // A_x(d) in coordinates
  std::function<Matrix(const Vector&)> adjoint;     // A_x^*(lambda), ambient
};

ConstraintMap make_constraint_map(const Manifold& m, const Point& x) {
  ConstraintMap cm;
  const Matrix& xv = x.value;
  switch (m.kind()) {
    case ManifoldKind::Sphere: {
      cm.q = 1;
      cm.apply = [&xv](const Matrix& d) {
        Vector out(1);
        out(0) = 2.0 * dot(xv, d);
        return out;
      };
      cm.adjoint = [&xv](const Vector& l) -> Matrix { return 2.0 * l(0) * xv; };
      return cm;
    }
    case ManifoldKind::Stiefel: {
      long p = m.cols();
      cm.q = p * (p + 1) / 2;
      cm.apply = [&xv, p](const Matrix& d) {
        Matrix s = xv.transpose() * d + d.transpose() * xv;
        Vector out(p * (p + 1) / 2);
        long k = 0;
        for (long j = 0; j < p; ++j) {
          out(k++) = s(j, j);
          for (long i = j + 1; i < p; ++i) out(k++) = std::sqrt(2.0) * s(i, j);
        }
        return out;
      };
      cm.adjoint = [&xv, p](const Vector& l) -> Matrix {
        Matrix lam(p, p);
        long k = 0;
        for (long j = 0; j < p; ++j) {
          lam(j, j) = l(k++);
          for (long i = j + 1; i < p; ++i) {
            lam(i, j) = l(k) / std::sqrt(2.0);
            lam(j, i) = lam(i, j);
            ++k;
          }
        }
        return 2.0 * xv * lam;
      };
      return cm;
    }
    case ManifoldKind::Oblique: {
      long p = m.cols();
      cm.q = p;
      cm.apply = [&xv, p](const Matrix& d) {
        Vector out(p);
        for (long j = 0; j < p; ++j) out(j) = 2.0 * xv.col(j).dot(d.col(j));
        return out;
      };
      cm.adjoint = [&xv](const Vector& l) -> Matrix {
        return 2.0 * xv * l.asDiagonal();
      };
      return cm;
    }
    default:
      throw InvalidArgument("proximal subproblem supports sphere, stiefel and oblique, got " +
                            m.name());
  }
}

}  // namespace

ManpgSubResult manpg_subproblem(const Manifold& m, const Point& x,
                                const Matrix& rgrad, const Nonsmooth& h,
                                double t, double tol, int max_iter,
                                const Vector& lambda0) {
  if (!h.prox) throw InvalidArgument("nonsmooth term needs a prox");
  ConstraintMap cm = make_constraint_map(m, x);

  ManpgSubResult res;
  res.lambda = lambda0.size() == cm.q ? lambda0 : Vector::Zero(cm.q);

  auto direction = [&](const Vector& lam) -> Matrix {
    Matrix b = x.value - t * (rgrad - cm.adjoint(lam));
    return h.prox(b, t) - x.value;
  };
  auto residual_of = [&](const Vector& lam) -> Vector {
    return cm.apply(direction(lam));
  };

  Vector e = residual_of(res.lambda);
  double en = e.norm();
  bool newton = static_cast<bool>(h.prox_jacobian_diag);
  double eta = 1.0 / (4.0 * t);

  for (int it = 0; it < max_iter; ++it) {
    if (en <= tol) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    bool stepped = false;
    if (newton) {
      Matrix b = x.value - t * (rgrad - cm.adjoint(res.lambda));
      Matrix mask = h.prox_jacobian_diag(b, t);
      Matrix jac(cm.q, cm.q);
      Vector unit = Vector::Zero(cm.q);
      for (long l = 0; l < cm.q; ++l) {
        unit(l) = 1.0;
        Matrix u = t * cm.adjoint(unit);
        jac.col(l) = cm.apply(mask.cwiseProduct(u));
        unit(l) = 0.0;
      }
      jac.diagonal().array() += 1e-10;
      Vector delta = jac.ldlt().solve(e);
      double frac = 1.0;
      for (int bt = 0; bt < 25; ++bt) {
        Vector cand = res.lambda - frac * delta;
        Vector ec = residual_of(cand);
        if (ec.norm() <= (1.0 - 1e-4 * frac) * en) {
          res.lambda = std::move(cand);
          e = std::move(ec);
          en = e.norm();
          stepped = true;
          break;
        }
        frac *= 0.5;
      }
      if (!stepped) {
        newton = false;
        res.used_fallback = true;
      }
    }
    if (!stepped) {
      double step = eta;
      for (int bt = 0; bt < 30; ++bt) {
        Vector cand = res.lambda - step * e;
        Vector ec = residual_of(cand);
        if (ec.norm() < en) {
          res.lambda = std::move(cand);
          e = std::move(ec);
          en = e.norm();
          stepped = true;
          break;
        }
        step *= 0.5;
      }
      if (!stepped) break;
    }
  }

  if (en <= tol) res.converged = true;
  res.residual = en;
  res.d = direction(res.lambda);
  return res;
}

SolveResult solve_manpg(const ProblemInstance& p, const Point& x0,
                        const SolverOptions& o) {
  validate_options(o);
  const Manifold& m = p.manifold;
  if (!p.objective.has_nonsmooth())
    throw InvalidArgument("solve_manpg needs a nonsmooth term");
  const Nonsmooth& h = *p.objective.nonsmooth;
  RetractionScheme rs = detail::pick_retraction(m, o);
  double t = o.manpg_t;
  auto t0 = detail::Clock::now();

  auto total = [&](const Point& x, double* smooth = nullptr) {
    double g = p.value(x);
    if (smooth) *smooth = g;
    return g + h.value(x.value);
  };

  SolveResult res;
  res.x = detail::checked_start(p, x0);
  res.f = total(res.x);
  Matrix g = p.rgrad(res.x);

  Vector lambda;
  double sub_residual_max = 0.0;
  double sub_fallbacks = 0;
  res.gradnorm = g.norm();
  detail::push_trace(res, 0, res.f, res.gradnorm, 0.0, t, t0);

  for (int k = 1; k <= o.max_iter; ++k) {
    ManpgSubResult sub = manpg_subproblem(m, res.x, g, h, t, o.manpg_subtol,
                                          o.manpg_sub_max, lambda);
    sub_residual_max = std::max(sub_residual_max, sub.residual);
    if (sub.used_fallback) sub_fallbacks += 1;
    if (!sub.converged) {
      res.status = SolveStatus::NumericalError;
      break;
    }
    lambda = sub.lambda;

    double dn = sub.d.norm();
    res.gradnorm = dn / t;
    if (res.gradnorm <= o.grad_tol) {
      res.status = SolveStatus::GradTol;
      detail::push_trace(res, k, res.f, res.gradnorm, 0.0, t, t0);
      break;
    }

    double alpha = 1.0;
    bool accepted = false;
    Point y;
    double fy = 0.0;
    for (int bt = 0; bt < o.ls_max_backtracks; ++bt) {
      bool feasible = true;
      try {
        y = m.retract(res.x, alpha * sub.d, rs);
      } catch (const NumericalError&) {
        feasible = false;
      }
      if (feasible) {
        fy = total(y);
        if (std::isfinite(fy) &&
            fy <= res.f - o.ls_rho * alpha * dn * dn / t) {
          accepted = true;
          break;
        }
      }
      alpha *= o.ls_delta;
    }
    if (!accepted) {
      res.status = SolveStatus::LineSearchFail;
      break;
    }

    res.x = std::move(y);
    res.f = fy;
    g = p.rgrad(res.x);
    res.iterations = k;
    detail::push_trace(res, k, res.f, res.gradnorm, alpha, t, t0);
  }

  if (res.status == SolveStatus::MaxIter && res.gradnorm <= o.grad_tol)
    res.status = SolveStatus::GradTol;
  res.stats["subproblem_residual_max"] = sub_residual_max;
  res.stats["subproblem_fallbacks"] = sub_fallbacks;
  return res;
}

}  // namespace maniopt
