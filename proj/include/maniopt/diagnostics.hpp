#pragma once

#include "maniopt/objective.hpp"

namespace maniopt {

struct SlopePoint {
  double t = 0.0;
  double err = 0.0;
};

// Log-log order check of a Taylor remainder on a dyadic step grid. Samples
// below the rounding floor are dropped and the slope is fitted on the middle
// window of what remains.
struct SlopeReport {
  double slope = 0.0;
  bool pass = false;
  bool refused = false;
  std::string detail;
  std::vector<SlopePoint> samples;
};

// First-order remainder |f(R(t xi)) - f(x) - t <grad, xi>| must vanish at
// order 2. Catches wrong gradients (a scaled gradient drops the order to 1).
SlopeReport check_gradient(const ProblemInstance& p, const Point& x,
                           const Matrix& xi, RetractionScheme rs);

// Second-order remainder against the quadratic model must vanish at order 3.
// Refuses retraction schemes without the second-order property instead of
// reporting a spurious failure.
SlopeReport check_hessian(const ProblemInstance& p, const Point& x,
                          const Matrix& xi, RetractionScheme rs);

// Retraction rigidity |R(t xi) - (x + t xi)| = O(t^2).
SlopeReport check_retraction(const Manifold& m, const Point& x,
                             const Matrix& xi, RetractionScheme rs);

struct TransportReport {
  double tangency_residual = 0.0;
  double linearity_residual = 0.0;
  double isometry_residual = 0.0;
  bool isometric_scheme = false;
  bool pass = false;
  std::string detail;
};

// Transports xi and a linear combination along eta, checking tangency at the
// endpoint, linearity, and (for isometric schemes) norm preservation.
TransportReport check_transport(const Manifold& m, const Point& x,
                                const Matrix& eta, const Matrix& xi,
                                TransportScheme ts, RetractionScheme rs);

enum class StationarityLabel { NotStationary, FirstOrder, SecondOrder, Saddle };

const char* to_string(StationarityLabel label);

struct StationarityReport {
  double gradnorm = 0.0;
  double lambda_min = 0.0;
  StationarityLabel label = StationarityLabel::NotStationary;
  std::string detail;
};

// Smallest Riemannian Hessian eigenvalue estimate by shifted power iteration
// restricted to the tangent space.
double hessian_lambda_min_estimate(const ProblemInstance& p, const Point& x,
                                   int iters, std::uint64_t seed);

// Classifies x: gradient above tol, first-order point (no exact Hessian
// available), second-order point, or saddle.
StationarityReport stationarity_report(const ProblemInstance& p,
                                       const Point& x, double grad_tol);

}  // namespace maniopt
