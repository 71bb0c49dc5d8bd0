#pragma once

#include <chrono>
#include <functional>

#include "maniopt/solvers.hpp"

namespace maniopt::detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void push_trace(SolveResult& res, int iter, double f, double gn,
                       double step, double aux, Clock::time_point t0) {
  res.trace.push_back({iter, f, gn, step, aux, seconds_since(t0)});
}

// Offsets a point along an ambient direction without any manifold projection.
// Objectives are global formulas in the ambient coordinates, so value/egrad
// stay well defined slightly off the constraint set.
inline Point ambient_offset(const Point& x, const Matrix& u, double h) {
  Point y;
  y.value = x.value + h * u;
  y.factors = x.factors;
  y.parts = x.parts;
  y.tag = hash_matrix(y.value);
  return y;
}

// Euclidean Hessian action, exact when the objective provides one and a
// central finite difference of egrad otherwise. The returned callable applies
// to arbitrary ambient directions.
inline std::function<Matrix(const Point&, const Matrix&)> make_ehess_op(
    const ProblemInstance& p, bool* used_fd = nullptr) {
  if (p.objective.ehess_vec) {
    if (used_fd) *used_fd = false;
    return p.objective.ehess_vec;
  }
  if (used_fd) *used_fd = true;
  auto egrad = p.objective.egrad;
  return [egrad](const Point& x, const Matrix& u) -> Matrix {
    double un = u.norm();
    if (un == 0.0) return Matrix::Zero(u.rows(), u.cols());
    double h = 1e-5 * (1.0 + x.value.norm()) / un;
    Matrix gp = egrad(ambient_offset(x, u, h));
    Matrix gm = egrad(ambient_offset(x, u, -h));
    return (gp - gm) / (2.0 * h);
  };
}

// Riemannian Hessian action at a fixed point, for tangent inputs.
inline std::function<Matrix(const Matrix&)> make_rhess_op(
    const Manifold& m, const Point& x, const Matrix& egrad_x,
    const std::function<Matrix(const Point&, const Matrix&)>& ehess) {
  return [&m, &x, &egrad_x, &ehess](const Matrix& u) -> Matrix {
    return m.ehess_to_rhess(x, egrad_x, ehess(x, u), u);
  };
}

inline int inner_cap(int requested, long intrinsic_dim) {
  if (requested > 0) return requested;
  long cap = intrinsic_dim < 250 ? intrinsic_dim : 250;
  return cap < 1 ? 1 : static_cast<int>(cap);
}

// Diff* transports only differentiate their own retraction.
inline void check_scheme_pairing(RetractionScheme rs, TransportScheme ts) {
  bool bad = (ts == TransportScheme::DiffCayley && rs != RetractionScheme::Cayley) ||
             (ts == TransportScheme::DiffPolar && rs != RetractionScheme::Polar) ||
             (ts == TransportScheme::DiffQr && rs != RetractionScheme::Qr);
  if (bad) {
    throw InvalidArgument("transport " + std::string(to_string(ts)) +
                          " differentiates retraction " +
                          (ts == TransportScheme::DiffCayley
                               ? "cayley"
                               : ts == TransportScheme::DiffPolar ? "polar" : "qr") +
                          ", got " + to_string(rs));
  }
}

inline RetractionScheme pick_retraction(const Manifold& m,
                                        const SolverOptions& o) {
  RetractionScheme rs = o.retraction.value_or(m.default_retraction());
  if (!m.retraction_applicable(rs)) {
    throw InvalidArgument(std::string("retraction ") + to_string(rs) +
                          " is not applicable on " + m.name());
  }
  return rs;
}

inline TransportScheme pick_transport(const Manifold& m,
                                      const SolverOptions& o,
                                      RetractionScheme rs) {
  TransportScheme ts = o.transport.value_or(m.default_transport());
  if (!m.transport_applicable(ts)) {
    throw InvalidArgument(std::string("transport ") + to_string(ts) +
                          " is not applicable on " + m.name());
  }
  check_scheme_pairing(rs, ts);
  return ts;
}

inline Point checked_start(const ProblemInstance& p, const Point& x0) {
  p.manifold.check_point(x0);
  return x0;
}

}  // namespace maniopt::detail
