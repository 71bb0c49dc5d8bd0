#include "maniopt/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "maniopt/rng.hpp"
#include "solver_util.hpp"

namespace maniopt {
namespace {

constexpr int kGridDepth = 25;

SlopeReport fit_slope(const std::function<double(double)>& err_of_t,
                      double floor_scale, double lo, double hi) {
  SlopeReport rep;
  std::vector<SlopePoint> kept;
  double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                 std::max(1.0, floor_scale);
  for (int k = 1; k <= kGridDepth; ++k) {
    double t = std::ldexp(1.0, -k);
    double e;
    try {
      e = err_of_t(t);
    } catch (const NumericalError&) {
      // infeasible trial step (cone exit, rank drop); skip the sample
      continue;
    }
    rep.samples.push_back({t, e});
    if (std::isfinite(e) && e > floor) kept.push_back({t, e});
  }
  if (kept.size() < 4) {
    double worst = 0.0;
    for (const auto& pt : rep.samples)
      worst = std::max(worst, std::isfinite(pt.err) ? pt.err :
                                  std::numeric_limits<double>::infinity());
    if (worst <= floor) {
      // the remainder never rises above rounding noise; the expansion holds
      // exactly, as it does for straight-line retractions of flat sets
      rep.pass = true;
      rep.slope = std::numeric_limits<double>::infinity();
      rep.detail = "remainder at the rounding floor for every step";
      return rep;
    }
    rep.detail = "too few samples above the rounding floor";
    return rep;
  }
  // middle window: the largest steps are pre-asymptotic, the smallest sit
  // near the floor
  std::size_t drop = kept.size() >= 8 ? 2 : 1;
  std::vector<SlopePoint> window(kept.begin() + drop, kept.end() - drop);
  if (window.size() < 3) window = kept;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : window) {
    double x = std::log2(pt.t);
    double y = std::log2(pt.err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = double(window.size());
  double denom = n * sxx - sx * sx;
  rep.slope = denom != 0 ? (n * sxy - sx * sy) / denom : 0.0;
  rep.pass = rep.slope >= lo && rep.slope <= hi;
  if (!rep.pass)
    rep.detail = "slope " + std::to_string(rep.slope) + " outside [" +
                 std::to_string(lo) + ", " + std::to_string(hi) + "]";
  return rep;
}

}  // namespace

SlopeReport check_gradient(const ProblemInstance& p, const Point& x,
                           const Matrix& xi, RetractionScheme rs) {
  const Manifold& m = p.manifold;
  double f0 = p.value(x);
  Matrix g = p.rgrad(x);
  double slope0 = dot(g, xi);
  auto err = [&](double t) {
    Point y = m.retract(x, t * xi, rs);
    return std::abs(p.value(y) - f0 - t * slope0);
  };
  return fit_slope(err, std::abs(f0), 1.9, 2.1);
}

SlopeReport check_hessian(const ProblemInstance& p, const Point& x,
                          const Matrix& xi, RetractionScheme rs) {
  const Manifold& m = p.manifold;
  if (!m.second_order(rs)) {
    SlopeReport rep;
    rep.refused = true;
    rep.detail = std::string("retraction ") + to_string(rs) + " on " +
                 m.name() + " is not second order; the cubic remainder test "
                 "does not apply";
    return rep;
  }
  double f0 = p.value(x);
  Matrix eg = p.objective.egrad(x);
  Matrix g = m.egrad_to_rgrad(x, eg);
  auto ehess = detail::make_ehess_op(p);
  Matrix hxi = m.ehess_to_rhess(x, eg, ehess(x, xi), xi);
  double slope0 = dot(g, xi);
  double curv = dot(hxi, xi);
  auto err = [&](double t) {
    Point y = m.retract(x, t * xi, rs);
    return std::abs(p.value(y) - f0 - t * slope0 - 0.5 * t * t * curv);
  };
  return fit_slope(err, std::abs(f0), 2.9, 3.1);
}

SlopeReport check_retraction(const Manifold& m, const Point& x,
                             const Matrix& xi, RetractionScheme rs) {
  auto err = [&](double t) {
    Point y = m.retract(x, t * xi, rs);
    return (y.value - x.value - t * xi).norm();
  };
  return fit_slope(err, x.value.norm(), 1.9, 2.1);
}

TransportReport check_transport(const Manifold& m, const Point& x,
                                const Matrix& eta, const Matrix& xi,
                                TransportScheme ts, RetractionScheme rs) {
  TransportReport rep;
  Point y = m.retract(x, eta, rs);
  Matrix txi = m.transport(x, eta, y, xi, ts);
  Matrix txi2 = m.transport(x, eta, y, Matrix(2.5 * xi), ts);

  rep.tangency_residual =
      (m.project(y, txi) - txi).norm() / std::max(1.0, txi.norm());
  rep.linearity_residual =
      (txi2 - 2.5 * txi).norm() / std::max(1.0, txi2.norm());
  rep.isometric_scheme = ts == TransportScheme::Parallelization ||
                         ts == TransportScheme::DiffCayley;
  if (rep.isometric_scheme) {
    rep.isometry_residual =
        std::abs(txi.norm() - xi.norm()) / std::max(1.0, xi.norm());
  }
  bool tangent_ok = ts == TransportScheme::EuclideanIdentity
                        ? true
                        : rep.tangency_residual <= 1e-8;
  rep.pass = tangent_ok && rep.linearity_residual <= 1e-10 &&
             (!rep.isometric_scheme || rep.isometry_residual <= 1e-10);
  if (!rep.pass) rep.detail = "transport residuals exceed tolerance";
  return rep;
}

double hessian_lambda_min_estimate(const ProblemInstance& p, const Point& x,
                                   int iters, std::uint64_t seed) {
  const Manifold& m = p.manifold;
  Matrix eg = p.objective.egrad(x);
  auto ehess = detail::make_ehess_op(p);
  auto hop = [&](const Matrix& u) {
    return m.ehess_to_rhess(x, eg, ehess(x, u), u);
  };

  Rng rng(seed);
  Matrix v = m.rand_tangent(x, rng);

  // spectral radius estimate, then shifted power iteration toward the bottom
  Matrix w = v;
  double radius = 0.0;
  for (int k = 0; k < 20; ++k) {
    Matrix hw = m.project(x, hop(w));
    radius = hw.norm();
    if (radius == 0.0) break;
    w = hw / radius;
  }
  double c = 1.1 * radius + 1e-12;

  double rayleigh = 0.0;
  for (int k = 0; k < iters; ++k) {
    Matrix bv = m.project(x, c * v - hop(v));
    double nv = bv.norm();
    if (nv == 0.0) break;
    v = bv / nv;
  }
  rayleigh = dot(v, m.project(x, hop(v)));
  return rayleigh;
}

const char* to_string(StationarityLabel label) {
  switch (label) {
    case StationarityLabel::NotStationary: return "not_stationary";
    case StationarityLabel::FirstOrder: return "first_order";
    case StationarityLabel::SecondOrder: return "second_order";
    case StationarityLabel::Saddle: return "saddle";
  }
  return "unknown";
}

StationarityReport stationarity_report(const ProblemInstance& p,
                                       const Point& x, double grad_tol) {
  StationarityReport rep;
  Matrix g = p.rgrad(x);
  rep.gradnorm = g.norm();
  if (rep.gradnorm > grad_tol) {
    rep.label = StationarityLabel::NotStationary;
    rep.detail = "gradient norm above tolerance";
    return rep;
  }
  if (!p.objective.has_hess()) {
    rep.label = StationarityLabel::FirstOrder;
    rep.detail = "no Hessian available for curvature classification";
    return rep;
  }
  rep.lambda_min = hessian_lambda_min_estimate(p, x, 100, 0x5eedULL);
  double scale = std::max(1.0, std::abs(rep.lambda_min));
  if (rep.lambda_min >= -1e-6 * scale) {
    rep.label = StationarityLabel::SecondOrder;
    rep.detail = "gradient small, Hessian numerically positive semidefinite";
  } else {
    rep.label = StationarityLabel::Saddle;
    rep.detail = "gradient small but negative curvature present";
  }
  return rep;
}

}  // namespace maniopt
