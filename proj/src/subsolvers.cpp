#include <cmath>

#include "maniopt/solvers.hpp"

namespace maniopt {

TcgResult truncated_cg(const Matrix& grad,
                       const std::function<Matrix(const Matrix&)>& hess,
                       double radius, double kappa, int max_inner) {
  TcgResult res;
  res.xi = Matrix::Zero(grad.rows(), grad.cols());
  Matrix r = grad;
  double rr = dot(r, r);
  double r0n = std::sqrt(rr);
  if (r0n == 0.0) {
    res.reason = "zero gradient";
    return res;
  }
  double tol = r0n * std::min(kappa, r0n);
  Matrix p = -r;

  auto to_boundary = [&](const Matrix& base, const Matrix& dir) {
    double bd = dot(base, dir);
    double dd = dot(dir, dir);
    double bb = dot(base, base);
    double disc = bd * bd + dd * (radius * radius - bb);
    return (-bd + std::sqrt(std::max(disc, 0.0))) / dd;
  };

  for (int j = 0; j < max_inner; ++j) {
    Matrix hp = hess(p);
    double php = dot(p, hp);
    ++res.iterations;
    if (php <= 0.0) {
      double tau = to_boundary(res.xi, p);
      res.xi += tau * p;
      res.hit_boundary = true;
      res.reason = "negative curvature";
      return res;
    }
    double alpha = rr / php;
    Matrix next = res.xi + alpha * p;
    if (next.norm() >= radius) {
      double tau = to_boundary(res.xi, p);
      res.xi += tau * p;
      res.hit_boundary = true;
      res.reason = "radius";
      return res;
    }
    res.xi = std::move(next);
    r += alpha * hp;
    double rr_next = dot(r, r);
    if (std::sqrt(rr_next) <= tol) {
      res.reason = "residual";
      return res;
    }
    p = -r + (rr_next / rr) * p;
    rr = rr_next;
  }
  res.reason = "max_inner";
  return res;
}

McgResult modified_cg(const Matrix& grad,
                      const std::function<Matrix(const Matrix&)>& hess,
                      double eps, double theta, double tau_cap, int max_inner) {
  McgResult res;
  res.s = Matrix::Zero(grad.rows(), grad.cols());
  res.d = Matrix::Zero(grad.rows(), grad.cols());
  Matrix r = grad;
  double rr = dot(r, r);
  double r0n = std::sqrt(rr);
  if (r0n == 0.0) {
    res.xi = res.s;
    return res;
  }
  double exit_tol = std::min(std::pow(r0n, theta), tau_cap) * r0n;
  Matrix p = -r;
  Matrix eta = res.s;

  double d_curvature = 0.0;
  bool have_d = false;

  for (int i = 0; i < max_inner; ++i) {
    Matrix hp = hess(p);
    double pi = dot(p, hp);
    double pp = dot(p, p);
    ++res.iterations;
    if (pi <= eps * pp) {
      res.small_curvature = true;
      if (i == 0) {
        res.s = -grad;
      } else {
        res.s = eta;
      }
      if (pi <= -eps * pp && i > 0) {
        res.d = p;
        res.sigma_est = std::abs(pi) / pp;
        res.negative_curvature = true;
        d_curvature = pi;
        have_d = true;
      }
      break;
    }
    double alpha = rr / pi;
    eta += alpha * p;
    r += alpha * hp;
    double rr_next = dot(r, r);
    if (std::sqrt(rr_next) <= exit_tol) {
      res.s = eta;
      break;
    }
    p = -r + (rr_next / rr) * p;
    rr = rr_next;
  }
  if (res.iterations == max_inner && !res.small_curvature) res.s = eta;

  if (have_d) {
    double tau = dot(res.d, grad) / d_curvature;
    res.xi = res.s + tau * res.d;
  } else {
    res.xi = res.s;
  }
  return res;
}

Matrix rbfgs_update(const Matrix& b, const Vector& s, const Vector& y) {
  Vector bs = b * s;
  double sbs = s.dot(bs);
  double ys = y.dot(s);
  if (!(sbs > 0.0)) throw InvalidArgument("bfgs update: <Bs, s> must be positive");
  if (!(ys > 0.0)) throw InvalidArgument("bfgs update: <y, s> must be positive");
  return b - (bs * bs.transpose()) / sbs + (y * y.transpose()) / ys;
}

}  // namespace maniopt
