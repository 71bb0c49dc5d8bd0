#include <cmath>
#include <deque>
#include <limits>

#include "solver_util.hpp"

namespace maniopt {
namespace {

Vector to_coords(const Matrix& frame, const Matrix& v) {
  return frame.transpose() * Eigen::Map<const Vector>(v.data(), v.size());
}

Matrix from_coords(const Matrix& frame, const Vector& c, long rows, long cols) {
  Vector amb = frame * c;
  return Eigen::Map<const Matrix>(amb.data(), rows, cols);
}

// Derivative of the retraction curve at its endpoint, |step| / |T_R(step)|
// feeds the locking scale. Central finite difference; the exact value is not
// needed, only a consistent scale.
double locking_beta(const Manifold& m, const Point& x, const Matrix& step,
                    RetractionScheme rs, const Point& y) {
  double sn = step.norm();
  if (sn == 0.0) return 1.0;
  double h = 1e-6;
  Matrix tr;
  try {
    Point yp = m.retract(x, (1.0 + h) * step, rs);
    Point ym = m.retract(x, (1.0 - h) * step, rs);
    tr = m.project(y, (yp.value - ym.value) / (2.0 * h));
  } catch (const NumericalError&) {
    return 1.0;
  }
  double tn = tr.norm();
  if (!(tn > 0) || !std::isfinite(tn)) return 1.0;
  return sn / tn;
}

// Moving orthonormal frame of the tangent space: carry every column along the
// accepted step, then re-orthonormalize. The induced coordinate transport
// old-coords -> new-coords is the identity, so the dense B matrix carries
// over unchanged. Differentiated-retraction schemes move columns through the
// manifold transport; everything else projects onto the new tangent space,
// which is the parallelization frame built at y.
Matrix move_frame(const Manifold& m, const Point& x, const Matrix& step,
                  const Point& y, const Matrix& frame, TransportScheme ts,
                  long rows, long cols) {
  bool differentiated = ts == TransportScheme::DiffCayley ||
                        ts == TransportScheme::DiffPolar ||
                        ts == TransportScheme::DiffQr;
  Matrix out(frame.rows(), frame.cols());
  for (long j = 0; j < frame.cols(); ++j) {
    Matrix col = Eigen::Map<const Matrix>(frame.col(j).data(), rows, cols);
    Matrix moved = differentiated ? m.transport(x, step, y, col, ts)
                                  : m.project(y, col);
    out.col(j) = Eigen::Map<const Vector>(moved.data(), moved.size());
  }
  Eigen::HouseholderQR<Matrix> qr(out);
  Matrix q = qr.householderQ() * Matrix::Identity(out.rows(), out.cols());
  Matrix r = q.transpose() * out;
  for (long j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

SolveResult dense_bfgs(const ProblemInstance& p, const Point& x0,
                       const SolverOptions& o, RetractionScheme rs,
                       TransportScheme ts) {
  const Manifold& m = p.manifold;
  auto t0 = detail::Clock::now();
  long rows = m.ambient_rows(), cols = m.ambient_cols();
  long dim = m.intrinsic_dim();

  SolveResult res;
  res.x = detail::checked_start(p, x0);
  res.f = p.value(res.x);
  Matrix g = p.rgrad(res.x);
  res.gradnorm = g.norm();

  Matrix frame = m.tangent_basis(res.x);
  Matrix b = Matrix::Identity(dim, dim);
  bool scaled = false;

  detail::push_trace(res, 0, res.f, res.gradnorm, 0.0, 1.0, t0);
  double skipped = 0, resets = 0, wolfe_failures = 0;
  double secant_residual_max = 0.0;
  double secant_curvature_min = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= o.max_iter; ++k) {
    if (res.gradnorm <= o.grad_tol) {
      res.status = SolveStatus::GradTol;
      break;
    }

    Vector gc = to_coords(frame, g);
    Vector xic;
    Eigen::LDLT<Matrix> ldlt(b);
    if (ldlt.info() == Eigen::Success) {
      xic = ldlt.solve(-gc);
    } else {
      b = Matrix::Identity(dim, dim);
      resets += 1;
      xic = -gc;
    }
    Matrix xi = from_coords(frame, xic, rows, cols);
    double slope = dot(g, xi);
    if (!(slope < -1e-12 * res.gradnorm * xi.norm())) {
      b = Matrix::Identity(dim, dim);
      resets += 1;
      xi = -g;
      xic = -gc;
      slope = -dot(g, g);
    }

    LineSearchResult ls =
        wolfe_search(m, p.objective, res.x, xi, res.f, slope, o, rs);
    bool wolfe_ok = ls.ok;
    if (!ls.ok) {
      wolfe_failures += 1;
      ls = armijo_search(m, p.objective, res.x, xi, slope, res.f, 1.0, o, rs);
    }
    if (!ls.ok) {
      res.status = SolveStatus::LineSearchFail;
      break;
    }

    Matrix step = ls.t * xi;
    double beta = locking_beta(m, res.x, step, rs, ls.x);
    Matrix new_frame = move_frame(m, res.x, step, ls.x, frame, ts, rows, cols);

    Matrix gy = p.rgrad(ls.x);
    Vector gyc = to_coords(new_frame, gy);
    Vector sc = ls.t * xic;
    Vector yc = (1.0 / beta) * gyc - gc;

    double ys = yc.dot(sc);
    bool do_update =
        wolfe_ok && ys > o.curvature_skip * sc.norm() * yc.norm() && ys > 0;
    if (do_update) {
      if (!scaled) {
        b = (ys / sc.dot(sc)) * Matrix::Identity(dim, dim);
        scaled = true;
      }
      b = rbfgs_update(b, sc, yc);
      Vector bs = b * sc;
      secant_residual_max =
          std::max(secant_residual_max, (bs - yc).norm());
      secant_curvature_min = std::min(secant_curvature_min, bs.dot(sc));
    } else {
      skipped += 1;
    }

    res.x = std::move(ls.x);
    res.f = ls.f;
    g = std::move(gy);
    res.gradnorm = g.norm();
    frame = std::move(new_frame);
    res.iterations = k;
    detail::push_trace(res, k, res.f, res.gradnorm, ls.t, beta, t0);
  }

  if (res.status == SolveStatus::MaxIter && res.gradnorm <= o.grad_tol)
    res.status = SolveStatus::GradTol;
  res.stats["pairs_skipped"] = skipped;
  res.stats["resets"] = resets;
  res.stats["wolfe_failures"] = wolfe_failures;
  res.stats["secant_residual_max"] = secant_residual_max;
  res.stats["secant_curvature_min"] =
      std::isfinite(secant_curvature_min) ? secant_curvature_min : 0.0;
  res.stats["dense"] = 1.0;
  return res;
}

SolveResult lbfgs(const ProblemInstance& p, const Point& x0,
                  const SolverOptions& o, RetractionScheme rs,
                  TransportScheme ts) {
  const Manifold& m = p.manifold;
  auto t0 = detail::Clock::now();

  SolveResult res;
  res.x = detail::checked_start(p, x0);
  res.f = p.value(res.x);
  Matrix g = p.rgrad(res.x);
  res.gradnorm = g.norm();

  struct Pair {
    Matrix s, y;
    double rho;
  };
  std::deque<Pair> pairs;
  double gamma = 1.0;

  detail::push_trace(res, 0, res.f, res.gradnorm, 0.0, 1.0, t0);
  double skipped = 0, wolfe_failures = 0;
  double secant_residual_max = 0.0;

  auto two_loop = [&](const Matrix& v) -> Matrix {
    Matrix q = v;
    std::vector<double> alpha(pairs.size());
    for (long i = static_cast<long>(pairs.size()) - 1; i >= 0; --i) {
      alpha[i] = pairs[i].rho * dot(pairs[i].s, q);
      q -= alpha[i] * pairs[i].y;
    }
    q *= gamma;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      double betaq = pairs[i].rho * dot(pairs[i].y, q);
      q += (alpha[i] - betaq) * pairs[i].s;
    }
    return q;
  };

  for (int k = 1; k <= o.max_iter; ++k) {
    if (res.gradnorm <= o.grad_tol) {
      res.status = SolveStatus::GradTol;
      break;
    }

    Matrix xi = -two_loop(g);
    double slope = dot(g, xi);
    if (!(slope < -1e-12 * res.gradnorm * xi.norm())) {
      pairs.clear();
      gamma = 1.0;
      xi = -g;
      slope = -dot(g, g);
    }

    LineSearchResult ls =
        wolfe_search(m, p.objective, res.x, xi, res.f, slope, o, rs);
    bool wolfe_ok = ls.ok;
    if (!ls.ok) {
      wolfe_failures += 1;
      ls = armijo_search(m, p.objective, res.x, xi, slope, res.f, 1.0, o, rs);
    }
    if (!ls.ok) {
      res.status = SolveStatus::LineSearchFail;
      break;
    }

    Matrix step = ls.t * xi;
    double beta = locking_beta(m, res.x, step, rs, ls.x);
    Matrix gy = p.rgrad(ls.x);

    std::deque<Pair> kept;
    for (auto& pr : pairs) {
      Pair moved;
      moved.s = m.transport(res.x, step, ls.x, pr.s, ts);
      moved.y = m.transport(res.x, step, ls.x, pr.y, ts);
      double sy = dot(moved.s, moved.y);
      if (sy > o.curvature_skip * moved.s.norm() * moved.y.norm() && sy > 0) {
        moved.rho = 1.0 / sy;
        kept.push_back(std::move(moved));
      }
    }
    pairs = std::move(kept);

    Matrix s_new = m.transport(res.x, step, ls.x, step, ts);
    Matrix y_new = (1.0 / beta) * gy - m.transport(res.x, step, ls.x, g, ts);
    double ys = dot(y_new, s_new);
    if (wolfe_ok && ys > o.curvature_skip * s_new.norm() * y_new.norm() &&
        ys > 0) {
      gamma = ys / dot(y_new, y_new);
      pairs.push_back({s_new, y_new, 1.0 / ys});
      while (static_cast<int>(pairs.size()) > o.lbfgs_memory)
        pairs.pop_front();
      Matrix hy = two_loop(pairs.back().y);
      secant_residual_max =
          std::max(secant_residual_max, (hy - pairs.back().s).norm());
    } else {
      skipped += 1;
    }

    res.x = std::move(ls.x);
    res.f = ls.f;
    g = std::move(gy);
    res.gradnorm = g.norm();
    res.iterations = k;
    detail::push_trace(res, k, res.f, res.gradnorm, ls.t, beta, t0);
  }

  if (res.status == SolveStatus::MaxIter && res.gradnorm <= o.grad_tol)
    res.status = SolveStatus::GradTol;
  res.stats["pairs_skipped"] = skipped;
  res.stats["wolfe_failures"] = wolfe_failures;
  res.stats["secant_residual_max"] = secant_residual_max;
  res.stats["dense"] = 0.0;
  return res;
}

}  // namespace

SolveResult solve_rbfgs(const ProblemInstance& p, const Point& x0,
                        const SolverOptions& o) {
  validate_options(o);
  const Manifold& m = p.manifold;
  RetractionScheme rs = detail::pick_retraction(m, o);
  TransportScheme ts;
  if (o.transport.has_value()) {
    ts = detail::pick_transport(m, o, rs);
  } else if (rs == RetractionScheme::Cayley &&
             m.transport_applicable(TransportScheme::DiffCayley)) {
    ts = TransportScheme::DiffCayley;
  } else if (m.transport_applicable(TransportScheme::Parallelization)) {
    ts = TransportScheme::Parallelization;
  } else {
    ts = TransportScheme::ProjectionBased;
  }

  if (o.bfgs_dense_dim_cap > 0 && m.intrinsic_dim() <= o.bfgs_dense_dim_cap)
    return dense_bfgs(p, x0, o, rs, ts);
  return lbfgs(p, x0, o, rs, ts);
}

}  // namespace maniopt
