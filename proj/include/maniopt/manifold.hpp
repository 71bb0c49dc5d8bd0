#pragma once

#include <string>
#include <vector>

#include "maniopt/rng.hpp"
#include "maniopt/types.hpp"

namespace maniopt {

enum class ManifoldKind {
  Sphere,        // unit vectors in R^n
  Stiefel,       // n x p with X'X = I
  Oblique,       // n x p with unit-norm columns
  Grassmann,     // p-dim subspaces of R^n via orthonormal representatives
  FixedRank,     // n x p of rank exactly r
  Spd,           // symmetric positive definite n x n
  FixedRankPsd,  // rank-r PSD matrices via full-rank factors Y (n x r)
  Product,       // block product of the above
};

const char* to_string(ManifoldKind k);

// Descriptor plus every geometric operation. All manifolds are embedded (or
// quotient with ambient representatives) and carry the trace inner product
// <u, v> = tr(u'v) on the ambient space.
class Manifold {
 public:
  static Manifold sphere(int n);
  static Manifold stiefel(int n, int p);
  static Manifold oblique(int n, int p);
  static Manifold grassmann(int n, int p);
  static Manifold fixed_rank(int n, int p, int r);
  static Manifold spd(int n);
  static Manifold fixed_rank_psd(int n, int r);
  static Manifold product(std::vector<Manifold> parts);

  ManifoldKind kind() const { return kind_; }
  int rows() const { return n_; }
  int cols() const { return p_; }
  int rank() const { return r_; }
  const std::vector<Manifold>& parts() const { return parts_; }

  // Ambient shape of point/tangent representations. Products flatten to a
  // single column; part k occupies a contiguous slice.
  int ambient_rows() const;
  int ambient_cols() const;
  int intrinsic_dim() const;
  std::string name() const;

  bool retraction_applicable(RetractionScheme s) const;
  bool transport_applicable(TransportScheme s) const;
  // true when f(R_x(t xi)) matches the quadratic model to O(t^3)
  bool second_order(RetractionScheme s) const;
  RetractionScheme default_retraction() const;
  TransportScheme default_transport() const;

  // Validates shape and constraint residual (tolerance 1e-8), renormalizes to
  // working precision, attaches factors and the identity tag.
  Point make_point(Matrix value) const;
  Point from_factors(Matrix u, Vector sigma, Matrix v) const;
  // Constraint violation of a candidate ambient value.
  double point_residual(const Matrix& value) const;
  void check_point(const Point& x) const;

  Point rand_point(Rng& rng) const;
  Matrix rand_tangent(const Point& x, Rng& rng) const;  // unit Frobenius norm

  // --- core operations on ambient matrices ---
  Matrix project(const Point& x, const Matrix& z) const;
  Point retract(const Point& x, const Matrix& xi, RetractionScheme s) const;
  Point retract(const Point& x, const Matrix& xi) const;
  // Transport xi from T_x to the tangent space at y = R_x(eta); y must have
  // been produced by the retraction paired with the scheme (Cayley for
  // DiffCayley, polar for DiffPolar, QR for DiffQr, any for the rest).
  Matrix transport(const Point& x, const Matrix& eta, const Point& y,
                   const Matrix& xi, TransportScheme s) const;
  // Convenience: retracts internally (paired retraction for Diff* schemes,
  // the manifold default otherwise).
  Matrix transport(const Point& x, const Matrix& eta, const Matrix& xi,
                   TransportScheme s) const;
  Matrix egrad_to_rgrad(const Point& x, const Matrix& g) const;
  // g = Euclidean gradient at x, hxi = Euclidean Hessian applied to xi.
  Matrix ehess_to_rhess(const Point& x, const Matrix& g, const Matrix& hxi,
                        const Matrix& xi) const;

  // --- tagged wrappers enforcing base identity ---
  Tangent tangent_project(const Point& x, const Matrix& z) const;
  double inner(const Point& x, const Tangent& u, const Tangent& v) const;
  Tangent transport(const Point& x, const Tangent& eta, const Tangent& xi,
                    TransportScheme s) const;

  // Recover the (m, up, vp) parametrization of a fixed-rank tangent.
  FixedRankTangent fixed_rank_factors(const Point& x, const Matrix& xi) const;

  // Orthonormal basis of T_x as columns of an (ambient elems) x dim matrix.
  // Deterministic in x; used by the parallelization transport and dense
  // quasi-Newton models.
  Matrix tangent_basis(const Point& x) const;

  // Product slice of part k as a (rows, cols) block view copy.
  Matrix part_of(const Matrix& ambient, int k) const;
  void set_part(Matrix& ambient, int k, const Matrix& block) const;

 private:
  Manifold(ManifoldKind kind, int n, int p, int r) : kind_(kind), n_(n), p_(p), r_(r) {}

  void require_shape(const Matrix& m, const char* what) const;
  Point finalize(Matrix value) const;

  ManifoldKind kind_;
  int n_ = 0, p_ = 0, r_ = 0;
  std::vector<Manifold> parts_;
  std::vector<int> offsets_;  // flat offsets per part (products)
};

}  // namespace maniopt
