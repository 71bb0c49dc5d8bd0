#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "maniopt/diagnostics.hpp"
#include "maniopt/manifold.hpp"
#include "maniopt/rng.hpp"

using namespace maniopt;

namespace {

Matrix randn(long rows, long cols, Rng& rng) {
  Matrix a(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) a(i, j) = rng.normal();
  return a;
}

std::vector<Manifold> all_manifolds() {
  return {
      Manifold::sphere(7),
      Manifold::stiefel(6, 2),
      Manifold::oblique(3, 5),
      Manifold::grassmann(6, 2),
      Manifold::fixed_rank(6, 5, 2),
      Manifold::spd(4),
      Manifold::fixed_rank_psd(6, 2),
      Manifold::product({Manifold::sphere(3), Manifold::stiefel(4, 2)}),
  };
}

std::vector<RetractionScheme> all_retractions() {
  return {RetractionScheme::Exponential, RetractionScheme::Cayley,
          RetractionScheme::Polar, RetractionScheme::Qr,
          RetractionScheme::MetricProjection};
}

std::vector<TransportScheme> all_transports() {
  return {TransportScheme::ProjectionBased, TransportScheme::Parallelization,
          TransportScheme::DiffCayley, TransportScheme::DiffPolar,
          TransportScheme::DiffQr};
}

RetractionScheme paired_retraction(const Manifold& m, TransportScheme ts) {
  switch (ts) {
    case TransportScheme::DiffCayley: return RetractionScheme::Cayley;
    case TransportScheme::DiffPolar: return RetractionScheme::Polar;
    case TransportScheme::DiffQr: return RetractionScheme::Qr;
    default: return m.default_retraction();
  }
}

double fit_order(const std::vector<double>& ts, const std::vector<double>& es) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long n = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(es[i] > 1e-14)) continue;
    double x = std::log2(ts[i]);
    double y = std::log2(es[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  REQUIRE(n >= 3);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("projection is idempotent and self-adjoint on every manifold") {
  for (const Manifold& m : all_manifolds()) {
    CAPTURE(m.name());
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      Point x = m.rand_point(rng);
      Matrix w = randn(m.ambient_rows(), m.ambient_cols(), rng);
      Matrix z = randn(m.ambient_rows(), m.ambient_cols(), rng);
      Matrix pw = m.project(x, w);
      Matrix pz = m.project(x, z);
      CHECK((m.project(x, pw) - pw).norm() <=
            1e-10 * std::max(1.0, pw.norm()));
      CHECK(std::abs(dot(pw, z) - dot(w, pz)) <=
            1e-10 * std::max(1.0, w.norm() * z.norm()));
    }
  }
}

TEST_CASE("random tangents are fixed by projection and random points are on the manifold") {
  for (const Manifold& m : all_manifolds()) {
    CAPTURE(m.name());
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      Point x = m.rand_point(rng);
      CHECK(m.point_residual(x.value) <= 1e-8);
      Matrix xi = m.rand_tangent(x, rng);
      CHECK((m.project(x, xi) - xi).norm() <= 1e-10 * std::max(1.0, xi.norm()));
      CHECK(xi.norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("fixed-rank projection matches a dense least-squares oracle") {
  // independent oracle: orthonormal design matrix for the tangent space built
  // from a full SVD of the point, then normal-equations-free projection
  Rng rng(3);
  Manifold m = Manifold::fixed_rank(6, 5, 2);
  for (int trial = 0; trial < 5; ++trial) {
    Point x = m.rand_point(rng);
    Eigen::JacobiSVD<Matrix> svd(x.value,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    Matrix v = svd.matrixV();
    long n1 = 6, n2 = 5, r = 2;

    std::vector<Matrix> basis;
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < r; ++j)
        basis.push_back(u.col(i) * v.col(j).transpose());
    for (long k = r; k < n1; ++k)
      for (long j = 0; j < r; ++j)
        basis.push_back(u.col(k) * v.col(j).transpose());
    for (long i = 0; i < r; ++i)
      for (long l = r; l < n2; ++l)
        basis.push_back(u.col(i) * v.col(l).transpose());

    Matrix design(n1 * n2, long(basis.size()));
    for (std::size_t c = 0; c < basis.size(); ++c)
      design.col(long(c)) =
          Eigen::Map<const Vector>(basis[c].data(), n1 * n2);

    Matrix z = randn(n1, n2, rng);
    Vector zv = Eigen::Map<const Vector>(z.data(), n1 * n2);
    // the basis elements are orthonormal: distinct outer products of
    // orthonormal vectors
    Vector coeffs = design.transpose() * zv;
    Vector proj = design * coeffs;
    Matrix oracle = Eigen::Map<const Matrix>(proj.data(), n1, n2);

    Matrix got = m.project(x, z);
    CHECK((got - oracle).norm() <= 1e-10 * std::max(1.0, oracle.norm()));
  }
}

TEST_CASE("fixed-rank tangent triples reassemble the projection") {
  Rng rng(17);
  Manifold m = Manifold::fixed_rank(7, 5, 3);
  Point x = m.rand_point(rng);
  Matrix z = randn(7, 5, rng);
  FixedRankTangent t = m.fixed_rank_factors(x, z);
  const SvdFactors& f = *x.factors;
  Matrix assembled = f.u * t.m * f.v.transpose() + t.up * f.v.transpose() +
                     f.u * t.vp.transpose();
  CHECK((assembled - m.project(x, z)).norm() <= 1e-12);
  CHECK((f.u.transpose() * t.up).norm() <= 1e-12);
  CHECK((f.v.transpose() * t.vp).norm() <= 1e-12);
}

TEST_CASE("retractions fix the base point and are rigid to first order") {
  for (const Manifold& m : all_manifolds()) {
    Rng rng(11);
    Point x = m.rand_point(rng);
    Matrix xi = m.rand_tangent(x, rng);
    for (RetractionScheme rs : all_retractions()) {
      if (!m.retraction_applicable(rs)) continue;
      CAPTURE(m.name());
      CAPTURE(to_string(rs));
      Point y0 = m.retract(x, Matrix::Zero(xi.rows(), xi.cols()), rs);
      CHECK((y0.value - x.value).norm() <= 1e-12 * std::max(1.0, x.value.norm()));
      SlopeReport rep = check_retraction(m, x, xi, rs);
      CHECK(rep.pass);
      CHECK(rep.slope >= 1.9);
    }
  }
}

TEST_CASE("retraction outputs stay on the manifold") {
  for (const Manifold& m : all_manifolds()) {
    Rng rng(13);
    Point x = m.rand_point(rng);
    for (RetractionScheme rs : all_retractions()) {
      if (!m.retraction_applicable(rs)) continue;
      CAPTURE(m.name());
      CAPTURE(to_string(rs));
      for (double scale : {1e-3, 0.1, 1.0}) {
        Matrix xi = scale * m.rand_tangent(x, rng);
        Point y = m.retract(x, xi, rs);
        CHECK(m.point_residual(y.value) <= 1e-8);
      }
    }
  }
}

TEST_CASE("sphere retractions against hand values") {
  Manifold m = Manifold::sphere(3);
  Matrix xv = Matrix::Zero(3, 1);
  xv(0, 0) = 1.0;
  Point x = m.make_point(xv);

  Matrix xi = Matrix::Zero(3, 1);
  xi(1, 0) = M_PI / 2.0;
  Point quarter = m.retract(x, xi, RetractionScheme::Exponential);
  CHECK(std::abs(quarter.value(0, 0)) <= 1e-12);
  CHECK(quarter.value(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // Cayley on the sphere is the rational rotation
  // ((1 - |xi|^2/4) x + xi) / (1 + |xi|^2/4); unit xi gives (0.6, 0.8)
  Matrix e2 = Matrix::Zero(3, 1);
  e2(1, 0) = 1.0;
  Point cay = m.retract(x, e2, RetractionScheme::Cayley);
  CHECK(cay.value(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cay.value(1, 0) == doctest::Approx(0.8).epsilon(1e-12));

  Point pol = m.retract(x, e2, RetractionScheme::Polar);
  CHECK(pol.value(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(pol.value(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("stiefel cayley retraction matches the dense rational map") {
  Rng rng(5);
  Manifold m = Manifold::stiefel(7, 3);
  for (int trial = 0; trial < 5; ++trial) {
    Point x = m.rand_point(rng);
    Matrix xi = m.rand_tangent(x, rng);
    // dense oracle: W = P eta X^T - X eta^T P with P = I - X X^T / 2,
    // then solve (I - W/2) Y = (I + W/2) X
    Matrix p = Matrix::Identity(7, 7) -
               0.5 * x.value * x.value.transpose();
    Matrix w = (p * xi) * x.value.transpose() -
               x.value * (p * xi).transpose();
    Matrix lhs = Matrix::Identity(7, 7) - 0.5 * w;
    Matrix rhs = (Matrix::Identity(7, 7) + 0.5 * w) * x.value;
    Matrix oracle = lhs.fullPivLu().solve(rhs);

    Point got = m.retract(x, xi, RetractionScheme::Cayley);
    CHECK((got.value - oracle).norm() <= 1e-12 * std::max(1.0, oracle.norm()));
  }
}

TEST_CASE("stiefel polar retraction matches a dense inverse square root") {
  Rng rng(19);
  Manifold m = Manifold::stiefel(6, 2);
  Point x = m.rand_point(rng);
  Matrix xi = 0.7 * m.rand_tangent(x, rng);
  Matrix y = x.value + xi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(y.transpose() * y));
  Matrix isqrt = es.eigenvectors() *
                 es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
  Matrix oracle = y * isqrt;
  Point got = m.retract(x, xi, RetractionScheme::Polar);
  CHECK((got.value - oracle).norm() <= 1e-12);
}

TEST_CASE("stiefel exponential reduces to the sphere geodesic at one column") {
  Rng rng(23);
  Manifold st = Manifold::stiefel(5, 1);
  Manifold sp = Manifold::sphere(5);
  Point x = st.rand_point(rng);
  Matrix xi = 0.8 * st.rand_tangent(x, rng);
  Point a = st.retract(x, xi, RetractionScheme::Exponential);
  Point b = sp.retract(sp.make_point(x.value), xi, RetractionScheme::Exponential);
  CHECK((a.value - b.value).norm() <= 1e-12);
}

TEST_CASE("cayley and exponential agree to second order on stiefel") {
  Rng rng(29);
  Manifold m = Manifold::stiefel(4, 2);
  Point x = m.rand_point(rng);
  Matrix xi = m.rand_tangent(x, rng);
  std::vector<double> ts, es;
  for (int k = 2; k <= 12; ++k) {
    double t = std::ldexp(1.0, -k);
    Point a = m.retract(x, t * xi, RetractionScheme::Cayley);
    Point b = m.retract(x, t * xi, RetractionScheme::Exponential);
    ts.push_back(t);
    es.push_back((a.value - b.value).norm());
  }
  double order = fit_order(ts, es);
  CHECK(order >= 2.9);
}

TEST_CASE("metric projection on fixed-rank refuses ambiguous truncations") {
  Manifold m = Manifold::fixed_rank(4, 4, 2);
  Matrix u = Matrix::Zero(4, 2), v = Matrix::Zero(4, 2);
  u(0, 0) = 1; u(1, 1) = 1;
  v(0, 0) = 1; v(1, 1) = 1;
  Vector sigma(2);
  sigma << 2.0, 1.0;
  Point x = m.from_factors(u, sigma, v);

  // tangent direction that moves x to singular values (3, 1, 1, 0)
  double a = std::sqrt(3.0);
  Matrix xi = Matrix::Zero(4, 4);
  xi(2, 0) = a;  // up part
  xi(0, 2) = a;  // vp part
  CHECK((m.project(x, xi) - xi).norm() <= 1e-12);
  CHECK_THROWS_AS(m.retract(x, xi, RetractionScheme::MetricProjection),
                  NumericalError);

  // rank collapse: remove the second singular value entirely
  Matrix drop = -x.value + u.col(0) * 2.0 * v.col(0).transpose();
  Matrix drop_tangent = m.project(x, drop);
  CHECK((drop_tangent - drop).norm() <= 1e-12);
  CHECK_THROWS_AS(m.retract(x, drop_tangent, RetractionScheme::MetricProjection),
                  NumericalError);
}

TEST_CASE("spd straight-line retraction refuses leaving the cone") {
  Manifold m = Manifold::spd(2);
  Point x = m.make_point(Matrix::Identity(2, 2));
  Matrix xi = -2.0 * Matrix::Identity(2, 2);
  CHECK_THROWS_AS(m.retract(x, xi, RetractionScheme::Exponential),
                  NumericalError);
  Point ok = m.retract(x, Matrix(0.5 * Matrix::Identity(2, 2)),
                       RetractionScheme::Exponential);
  CHECK((ok.value - 1.5 * Matrix::Identity(2, 2)).norm() <= 1e-14);
}

TEST_CASE("transports are tangent, linear, identity at zero, and isometric when promised") {
  for (const Manifold& m : all_manifolds()) {
    Rng rng(31);
    Point x = m.rand_point(rng);
    Matrix xi = m.rand_tangent(x, rng);
    Matrix zero = Matrix::Zero(xi.rows(), xi.cols());
    for (TransportScheme ts : all_transports()) {
      if (!m.transport_applicable(ts)) continue;
      RetractionScheme rs = paired_retraction(m, ts);
      if (!m.retraction_applicable(rs)) continue;
      CAPTURE(m.name());
      CAPTURE(to_string(ts));

      Matrix eta = 0.4 * m.rand_tangent(x, rng);
      TransportReport rep = check_transport(m, x, eta, xi, ts, rs);
      CHECK(rep.pass);

      Point x_again = m.retract(x, zero, rs);
      Matrix id = m.transport(x, zero, x_again, xi, ts);
      CHECK((id - xi).norm() <= 1e-8 * std::max(1.0, xi.norm()));
    }
  }
}

TEST_CASE("differentiated transports match finite differences of their retraction") {
  Rng rng(37);
  Manifold m = Manifold::stiefel(6, 2);
  Point x = m.rand_point(rng);
  Matrix eta = 0.5 * m.rand_tangent(x, rng);
  Matrix xi = m.rand_tangent(x, rng);

  for (TransportScheme ts : {TransportScheme::DiffPolar,
                             TransportScheme::DiffQr}) {
    CAPTURE(to_string(ts));
    RetractionScheme rs = paired_retraction(m, ts);
    Point y = m.retract(x, eta, rs);
    Matrix got = m.transport(x, eta, y, xi, ts);

    double h = 1e-6;
    Point yp = m.retract(x, eta + h * xi, rs);
    Point ym = m.retract(x, eta - h * xi, rs);
    Matrix fd = (yp.value - ym.value) / (2.0 * h);
    CHECK((got - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("cayley transport agrees with the dense rational map on the sphere") {
  Rng rng(41);
  Manifold m = Manifold::sphere(5);
  Point x = m.rand_point(rng);
  Matrix eta = 0.6 * m.rand_tangent(x, rng);
  Matrix xi = m.rand_tangent(x, rng);

  Matrix p = Matrix::Identity(5, 5) - 0.5 * x.value * x.value.transpose();
  Matrix w = (p * eta) * x.value.transpose() - x.value * (p * eta).transpose();
  Matrix lhs = Matrix::Identity(5, 5) - 0.5 * w;
  Matrix rhs = (Matrix::Identity(5, 5) + 0.5 * w) * xi;
  Matrix oracle = lhs.fullPivLu().solve(rhs);

  Point y = m.retract(x, eta, RetractionScheme::Cayley);
  Matrix got = m.transport(x, eta, y, xi, TransportScheme::DiffCayley);
  CHECK((got - oracle).norm() <= 1e-12);
  CHECK(std::abs(got.norm() - xi.norm()) <= 1e-12);
}

TEST_CASE("parallelization is an exact isometry and deterministic") {
  for (const Manifold& m : all_manifolds()) {
    if (!m.transport_applicable(TransportScheme::Parallelization)) continue;
    CAPTURE(m.name());
    Rng rng(43);
    Point x = m.rand_point(rng);
    Matrix eta = 0.3 * m.rand_tangent(x, rng);
    Matrix xi = m.rand_tangent(x, rng);
    RetractionScheme rs = m.default_retraction();
    Point y = m.retract(x, eta, rs);
    Matrix a = m.transport(x, eta, y, xi, TransportScheme::Parallelization);
    Matrix b = m.transport(x, eta, y, xi, TransportScheme::Parallelization);
    CHECK((a - b).norm() == 0.0);
    CHECK(std::abs(a.norm() - xi.norm()) <= 1e-10 * std::max(1.0, xi.norm()));
  }
}

TEST_CASE("tangent bases are orthonormal and span the tangent space") {
  for (const Manifold& m : all_manifolds()) {
    CAPTURE(m.name());
    Rng rng(47);
    Point x = m.rand_point(rng);
    Matrix basis = m.tangent_basis(x);
    CHECK(basis.cols() == m.intrinsic_dim());
    Matrix gram = basis.transpose() * basis;
    CHECK((gram - Matrix::Identity(basis.cols(), basis.cols())).norm() <= 1e-10);
    Matrix xi = m.rand_tangent(x, rng);
    Vector coords =
        basis.transpose() * Eigen::Map<const Vector>(xi.data(), xi.size());
    Vector back = basis * coords;
    Matrix recon = Eigen::Map<const Matrix>(back.data(), xi.rows(), xi.cols());
    CHECK((recon - xi).norm() <= 1e-10);
  }
}

TEST_CASE("tangent tags reject mixing base points") {
  Manifold m = Manifold::sphere(4);
  Rng rng(53);
  Point x = m.rand_point(rng);
  Point y = m.rand_point(rng);
  Tangent tx = m.tangent_project(x, randn(4, 1, rng));
  Tangent ty = m.tangent_project(y, randn(4, 1, rng));
  CHECK_THROWS_AS(m.inner(x, tx, ty), InvalidArgument);
  CHECK(m.inner(x, tx, tx) == doctest::Approx(dot(tx.value, tx.value)));
  Tangent eta = m.tangent_project(x, randn(4, 1, rng));
  Tangent moved = m.transport(x, eta, tx, TransportScheme::ProjectionBased);
  CHECK(moved.base_tag != x.tag);
  CHECK_THROWS_AS(m.inner(x, tx, moved), InvalidArgument);
  CHECK_THROWS_AS(m.transport(x, eta, moved, TransportScheme::ProjectionBased),
                  InvalidArgument);
}

TEST_CASE("make_point validates input and normalizes drift") {
  Manifold m = Manifold::sphere(3);
  Matrix bad = Matrix::Ones(3, 1);
  CHECK_THROWS_AS(m.make_point(bad), InvalidArgument);

  Matrix drift = Matrix::Zero(3, 1);
  drift(0, 0) = 1.0 + 5e-9;
  Point x = m.make_point(drift);
  CHECK(std::abs(x.value.norm() - 1.0) <= 1e-15);

  Manifold st = Manifold::stiefel(4, 2);
  Matrix nonorth = Matrix::Zero(4, 2);
  nonorth(0, 0) = 1.0;
  nonorth(1, 1) = 2.0;
  CHECK_THROWS_AS(st.make_point(nonorth), InvalidArgument);

  Matrix nan_mat = Matrix::Zero(3, 1);
  nan_mat(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.make_point(nan_mat), InvalidArgument);
}

TEST_CASE("product manifold operations act componentwise") {
  Manifold a = Manifold::sphere(3);
  Manifold b = Manifold::stiefel(4, 2);
  Manifold prod = Manifold::product({a, b});
  Rng rng(59);
  Point x = prod.rand_point(rng);
  Point xa = a.make_point(prod.part_of(x.value, 0));
  Point xb = b.make_point(prod.part_of(x.value, 1));
  CHECK(a.point_residual(xa.value) <= 1e-10);
  CHECK(b.point_residual(xb.value) <= 1e-10);

  Matrix z = randn(prod.ambient_rows(), 1, rng);
  Matrix pz = prod.project(x, z);
  Matrix za = a.project(xa, Eigen::Map<const Matrix>(z.data(), 3, 1));
  Matrix zb_in(4, 2);
  std::copy(z.data() + 3, z.data() + 11, zb_in.data());
  Matrix zb = b.project(xb, zb_in);
  CHECK((Eigen::Map<const Matrix>(pz.data(), 3, 1) - za).norm() <= 1e-14);
  CHECK((Eigen::Map<const Matrix>(pz.data() + 3, 4, 2) - zb).norm() <= 1e-14);

  Matrix xi = prod.rand_tangent(x, rng);
  Point y = prod.retract(x, xi, RetractionScheme::Polar);
  Point ya = a.retract(xa, Eigen::Map<const Matrix>(xi.data(), 3, 1),
                       RetractionScheme::Polar);
  Matrix xib(4, 2);
  std::copy(xi.data() + 3, xi.data() + 11, xib.data());
  Point yb = b.retract(xb, xib, RetractionScheme::Polar);
  CHECK((Eigen::Map<const Matrix>(y.value.data(), 3, 1) - ya.value).norm() <= 1e-14);
  CHECK((Eigen::Map<const Matrix>(y.value.data() + 3, 4, 2) - yb.value).norm() <= 1e-14);
}

TEST_CASE("random points are reproducible from the seed") {
  for (const Manifold& m : all_manifolds()) {
    CAPTURE(m.name());
    Rng r1(1234), r2(1234);
    Point a = m.rand_point(r1);
    Point b = m.rand_point(r2);
    CHECK((a.value - b.value).norm() == 0.0);
    CHECK(a.tag == b.tag);
  }
}

TEST_CASE("oblique zero-column inputs are rejected by the polar retraction") {
  Manifold m = Manifold::oblique(2, 2);
  Matrix xv(2, 2);
  xv << 1, 0, 0, 1;
  Point x = m.make_point(xv);
  CHECK_THROWS_AS(m.retract(x, Matrix(-xv), RetractionScheme::Polar),
                  NumericalError);
}

TEST_CASE("grassmann retractions are invariant to the representative rotation") {
  Rng rng(61);
  Manifold m = Manifold::grassmann(6, 2);
  Point x = m.rand_point(rng);
  Matrix xi = 0.5 * m.rand_tangent(x, rng);

  // rotate the representative; the retracted subspace must not change
  double c = std::cos(0.3), s = std::sin(0.3);
  Matrix q(2, 2);
  q << c, -s, s, c;
  Point xq = m.make_point(x.value * q);
  Matrix xiq = xi * q;

  Point y = m.retract(x, xi, RetractionScheme::Polar);
  Point yq = m.retract(xq, xiq, RetractionScheme::Polar);
  Matrix py = y.value * y.value.transpose();
  Matrix pyq = yq.value * yq.value.transpose();
  CHECK((py - pyq).norm() <= 1e-10);
}
