#include "maniopt/manifold.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace maniopt {

namespace {

constexpr double kDriftTol = 1e-8;   // re-orthonormalize beyond this
constexpr double kPointTol = 1e-8;   // accepted input feasibility residual
constexpr double kRankTol = 1e-12;   // singular value floor, relative

Matrix gaussian(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Thin QR with R's diagonal forced positive so the factor is unique.
void qr_positive(const Matrix& a, Matrix* q, Matrix* r = nullptr) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix thinq = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  Matrix rr = qr.matrixQR()
                  .topLeftCorner(a.cols(), a.cols())
                  .triangularView<Eigen::Upper>();
  for (int i = 0; i < a.cols(); ++i) {
    if (rr(i, i) < 0.0) {
      thinq.col(i) = -thinq.col(i);
      rr.row(i) = -rr.row(i);
    }
  }
  *q = std::move(thinq);
  if (r) *r = std::move(rr);
}

void require_full_rank_r(const Matrix& r, double scale, const char* what) {
  for (int i = 0; i < r.rows(); ++i) {
    if (std::abs(r(i, i)) <= kRankTol * std::max(1.0, scale))
      throw NumericalError(std::string(what) + ": rank-deficient factorization");
  }
}

// (I - W/2)^{-1} (I + W/2) rhs with W = P eta x' - x eta' P and P = I - xx'/2,
// evaluated through the 2p x 2p Woodbury identity W = U V'.
Matrix cayley_apply(const Matrix& x, const Matrix& eta, const Matrix& rhs) {
  const int p = static_cast<int>(x.cols());
  Matrix peta = eta - 0.5 * x * (x.transpose() * eta);
  Matrix u(x.rows(), 2 * p), v(x.rows(), 2 * p);
  u << peta, x;
  v << x, -peta;
  Matrix core = Matrix::Identity(2 * p, 2 * p) - 0.5 * v.transpose() * u;
  Eigen::FullPivLU<Matrix> lu(core);
  if (!lu.isInvertible())
    throw NumericalError("Cayley map: I - W/2 is singular");
  return rhs + u * lu.solve(v.transpose() * rhs);
}

// Solves om*S + S*om = rhs for symmetric positive definite S.
Matrix sylvester_spd(const Matrix& s, const Matrix& rhs, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": eigendecomposition failed");
  const Vector& lam = es.eigenvalues();
  double lmax = lam.cwiseAbs().maxCoeff();
  Matrix b = es.eigenvectors().transpose() * rhs * es.eigenvectors();
  for (int j = 0; j < b.cols(); ++j)
    for (int i = 0; i < b.rows(); ++i) {
      double den = lam(i) + lam(j);
      if (std::abs(den) <= kRankTol * std::max(1.0, lmax))
        throw GeometryError(std::string(what) + ": singular Gram matrix");
      b(i, j) /= den;
    }
  return es.eigenvectors() * b * es.eigenvectors().transpose();
}

Matrix inv_sqrt_spd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  Vector d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) {
    if (d(i) <= 0.0) throw NumericalError("polar factor: Gram matrix not positive");
    d(i) = 1.0 / std::sqrt(d(i));
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Matrix normalize_columns(const Matrix& z) {
  Matrix out = z;
  for (int j = 0; j < z.cols(); ++j) {
    double nj = z.col(j).norm();
    if (nj <= 0.0) throw NumericalError("column normalization hit a zero column");
    out.col(j) /= nj;
  }
  return out;
}

Eigen::Map<const Vector> as_vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

const char* to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Sphere: return "Sphere";
    case ManifoldKind::Stiefel: return "Stiefel";
    case ManifoldKind::Oblique: return "Oblique";
    case ManifoldKind::Grassmann: return "Grassmann";
    case ManifoldKind::FixedRank: return "FixedRank";
    case ManifoldKind::Spd: return "Spd";
    case ManifoldKind::FixedRankPsd: return "FixedRankPsd";
    case ManifoldKind::Product: return "Product";
  }
  return "?";
}

const char* to_string(RetractionScheme s) {
  switch (s) {
    case RetractionScheme::Exponential: return "exponential";
    case RetractionScheme::Cayley: return "cayley";
    case RetractionScheme::Polar: return "polar";
    case RetractionScheme::Qr: return "qr";
    case RetractionScheme::MetricProjection: return "metric_projection";
  }
  return "?";
}

const char* to_string(TransportScheme s) {
  switch (s) {
    case TransportScheme::ProjectionBased: return "projection";
    case TransportScheme::Parallelization: return "parallelization";
    case TransportScheme::DiffCayley: return "diff_cayley";
    case TransportScheme::DiffPolar: return "diff_polar";
    case TransportScheme::DiffQr: return "diff_qr";
    case TransportScheme::EuclideanIdentity: return "euclidean_identity";
  }
  return "?";
}

std::optional<RetractionScheme> parse_retraction(const std::string& s) {
  if (s == "exponential") return RetractionScheme::Exponential;
  if (s == "cayley") return RetractionScheme::Cayley;
  if (s == "polar") return RetractionScheme::Polar;
  if (s == "qr") return RetractionScheme::Qr;
  if (s == "metric_projection") return RetractionScheme::MetricProjection;
  return std::nullopt;
}

std::optional<TransportScheme> parse_transport(const std::string& s) {
  if (s == "projection") return TransportScheme::ProjectionBased;
  if (s == "parallelization") return TransportScheme::Parallelization;
  if (s == "diff_cayley") return TransportScheme::DiffCayley;
  if (s == "diff_polar") return TransportScheme::DiffPolar;
  if (s == "diff_qr") return TransportScheme::DiffQr;
  if (s == "euclidean_identity") return TransportScheme::EuclideanIdentity;
  return std::nullopt;
}

std::uint64_t hash_bytes(const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_matrix(const Matrix& m) {
  std::uint64_t h = hash_bytes(m.data(), sizeof(double) * m.size());
  h ^= (std::uint64_t)m.rows() * 0x9e3779b97f4a7c15ULL + (std::uint64_t)m.cols();
  return h;
}

// --- constructors -----------------------------------------------------------

Manifold Manifold::sphere(int n) {
  if (n < 2) throw InvalidArgument("sphere: n must be >= 2");
  return Manifold(ManifoldKind::Sphere, n, 1, 0);
}

Manifold Manifold::stiefel(int n, int p) {
  if (p < 1 || n < p) throw InvalidArgument("stiefel: need 1 <= p <= n");
  return Manifold(ManifoldKind::Stiefel, n, p, 0);
}

Manifold Manifold::oblique(int n, int p) {
  if (n < 2 || p < 1) throw InvalidArgument("oblique: need n >= 2, p >= 1");
  return Manifold(ManifoldKind::Oblique, n, p, 0);
}

Manifold Manifold::grassmann(int n, int p) {
  if (p < 1 || n <= p) throw InvalidArgument("grassmann: need 1 <= p < n");
  return Manifold(ManifoldKind::Grassmann, n, p, 0);
}

Manifold Manifold::fixed_rank(int n, int p, int r) {
  if (r < 1 || r > std::min(n, p))
    throw InvalidArgument("fixed_rank: need 1 <= r <= min(n, p)");
  return Manifold(ManifoldKind::FixedRank, n, p, r);
}

Manifold Manifold::spd(int n) {
  if (n < 1) throw InvalidArgument("spd: n must be >= 1");
  return Manifold(ManifoldKind::Spd, n, n, 0);
}

Manifold Manifold::fixed_rank_psd(int n, int r) {
  if (r < 1 || r > n) throw InvalidArgument("fixed_rank_psd: need 1 <= r <= n");
  return Manifold(ManifoldKind::FixedRankPsd, n, r, r);
}

Manifold Manifold::product(std::vector<Manifold> parts) {
  if (parts.empty()) throw InvalidArgument("product: needs at least one part");
  Manifold m(ManifoldKind::Product, 0, 1, 0);
  m.offsets_.reserve(parts.size());
  int off = 0;
  for (const Manifold& part : parts) {
    m.offsets_.push_back(off);
    off += part.ambient_rows() * part.ambient_cols();
  }
  m.n_ = off;
  m.parts_ = std::move(parts);
  return m;
}

// --- shape -------------------------------------------------------------------

int Manifold::ambient_rows() const { return kind_ == ManifoldKind::FixedRankPsd ? n_ : n_; }

int Manifold::ambient_cols() const {
  switch (kind_) {
    case ManifoldKind::Sphere: return 1;
    case ManifoldKind::FixedRankPsd: return r_;
    case ManifoldKind::Product: return 1;
    default: return p_;
  }
}

int Manifold::intrinsic_dim() const {
  switch (kind_) {
    case ManifoldKind::Sphere: return n_ - 1;
    case ManifoldKind::Stiefel: return n_ * p_ - p_ * (p_ + 1) / 2;
    case ManifoldKind::Oblique: return (n_ - 1) * p_;
    case ManifoldKind::Grassmann: return p_ * (n_ - p_);
    case ManifoldKind::FixedRank: return r_ * (n_ + p_ - r_);
    case ManifoldKind::Spd: return n_ * (n_ + 1) / 2;
    case ManifoldKind::FixedRankPsd: return n_ * r_ - r_ * (r_ - 1) / 2;
    case ManifoldKind::Product: {
      int d = 0;
      for (const auto& part : parts_) d += part.intrinsic_dim();
      return d;
    }
  }
  return 0;
}

std::string Manifold::name() const {
  std::ostringstream os;
  switch (kind_) {
    case ManifoldKind::Sphere: os << "Sphere(" << n_ << ")"; break;
    case ManifoldKind::Stiefel: os << "Stiefel(" << n_ << "," << p_ << ")"; break;
    case ManifoldKind::Oblique: os << "Oblique(" << n_ << "," << p_ << ")"; break;
    case ManifoldKind::Grassmann: os << "Grassmann(" << n_ << "," << p_ << ")"; break;
    case ManifoldKind::FixedRank:
      os << "FixedRank(" << n_ << "," << p_ << "," << r_ << ")";
      break;
    case ManifoldKind::Spd: os << "Spd(" << n_ << ")"; break;
    case ManifoldKind::FixedRankPsd:
      os << "FixedRankPsd(" << n_ << "," << r_ << ")";
      break;
    case ManifoldKind::Product: {
      os << "Product(";
      for (std::size_t i = 0; i < parts_.size(); ++i)
        os << (i ? "," : "") << parts_[i].name();
      os << ")";
      break;
    }
  }
  return os.str();
}

// --- scheme tables -----------------------------------------------------------

bool Manifold::retraction_applicable(RetractionScheme s) const {
  using R = RetractionScheme;
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Stiefel:
      return true;
    case ManifoldKind::Oblique:
      return s == R::Exponential || s == R::Polar || s == R::MetricProjection;
    case ManifoldKind::Grassmann:
      return s == R::Exponential || s == R::Polar || s == R::Qr ||
             s == R::MetricProjection;
    case ManifoldKind::FixedRank:
      return s == R::MetricProjection;
    case ManifoldKind::Spd:
    case ManifoldKind::FixedRankPsd:
      return s == R::Exponential;
    case ManifoldKind::Product:
      return std::all_of(parts_.begin(), parts_.end(), [s](const Manifold& m) {
        return m.retraction_applicable(s);
      });
  }
  return false;
}

bool Manifold::transport_applicable(TransportScheme s) const {
  using T = TransportScheme;
  if (s == T::ProjectionBased || s == T::EuclideanIdentity) return true;
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Stiefel:
      return true;  // all six
    case ManifoldKind::Oblique:
    case ManifoldKind::Grassmann:
      return s == T::Parallelization;
    case ManifoldKind::Spd:
      return s == T::Parallelization;
    case ManifoldKind::FixedRank:
    case ManifoldKind::FixedRankPsd:
      return false;
    case ManifoldKind::Product:
      return std::all_of(parts_.begin(), parts_.end(), [s](const Manifold& m) {
        return m.transport_applicable(s);
      });
  }
  return false;
}

bool Manifold::second_order(RetractionScheme s) const {
  using R = RetractionScheme;
  switch (kind_) {
    case ManifoldKind::Sphere:
      return true;  // all schemes coincide with or match the geodesic to t^2
    case ManifoldKind::Stiefel:
      // Exponential implements the canonical-metric geodesic, which for p >= 2
      // carries tangential acceleration w.r.t. the trace metric; it joins
      // Cayley/Qr on the first-order-only list.
      return s == R::Polar || s == R::MetricProjection;
    case ManifoldKind::Oblique:
      return s == R::Exponential || s == R::Polar || s == R::MetricProjection;
    case ManifoldKind::Grassmann:
      return s == R::Exponential || s == R::Polar || s == R::MetricProjection;
    case ManifoldKind::FixedRank:
      return s == R::MetricProjection;
    case ManifoldKind::Spd:
    case ManifoldKind::FixedRankPsd:
      return s == R::Exponential;
    case ManifoldKind::Product:
      return std::all_of(parts_.begin(), parts_.end(), [s](const Manifold& m) {
        return m.second_order(s);
      });
  }
  return false;
}

RetractionScheme Manifold::default_retraction() const {
  using R = RetractionScheme;
  for (R s : {R::Polar, R::MetricProjection, R::Exponential})
    if (retraction_applicable(s)) return s;
  return R::Exponential;
}

TransportScheme Manifold::default_transport() const {
  return TransportScheme::ProjectionBased;
}

// --- points ------------------------------------------------------------------

void Manifold::require_shape(const Matrix& m, const char* what) const {
  if (m.rows() != ambient_rows() || m.cols() != ambient_cols()) {
    std::ostringstream os;
    os << name() << " " << what << ": expected " << ambient_rows() << "x"
       << ambient_cols() << ", got " << m.rows() << "x" << m.cols();
    throw InvalidArgument(os.str());
  }
}

double Manifold::point_residual(const Matrix& value) const {
  switch (kind_) {
    case ManifoldKind::Sphere:
      return std::abs(value.norm() - 1.0);
    case ManifoldKind::Stiefel:
    case ManifoldKind::Grassmann:
      return (value.transpose() * value - Matrix::Identity(p_, p_)).norm();
    case ManifoldKind::Oblique: {
      double worst = 0.0;
      for (int j = 0; j < p_; ++j)
        worst = std::max(worst, std::abs(value.col(j).norm() - 1.0));
      return worst;
    }
    case ManifoldKind::FixedRank: {
      Eigen::JacobiSVD<Matrix> svd(value);
      const Vector& s = svd.singularValues();
      if (s(0) <= 0.0) return 1.0;
      if (s(r_ - 1) <= kRankTol * s(0)) return 1.0;
      return r_ < s.size() ? s(r_) / s(0) : 0.0;
    }
    case ManifoldKind::Spd: {
      double asymmetry = (value - value.transpose()).norm() /
                         std::max(1.0, value.norm());
      Eigen::LLT<Matrix> llt(sym(value));
      return asymmetry + (llt.info() == Eigen::Success ? 0.0 : 1.0);
    }
    case ManifoldKind::FixedRankPsd: {
      Eigen::JacobiSVD<Matrix> svd(value);
      const Vector& s = svd.singularValues();
      return (s(0) <= 0.0 || s(r_ - 1) <= kRankTol * s(0)) ? 1.0 : 0.0;
    }
    case ManifoldKind::Product: {
      double worst = 0.0;
      for (std::size_t k = 0; k < parts_.size(); ++k)
        worst = std::max(worst, parts_[k].point_residual(part_of(value, (int)k)));
      return worst;
    }
  }
  return 0.0;
}

Point Manifold::finalize(Matrix value) const {
  Point pt;
  switch (kind_) {
    case ManifoldKind::Sphere:
      pt.value = value / value.norm();
      break;
    case ManifoldKind::Stiefel:
    case ManifoldKind::Grassmann: {
      if (point_residual(value) > kDriftTol) {
        Matrix q;
        qr_positive(value, &q);
        pt.value = std::move(q);
      } else {
        pt.value = std::move(value);
      }
      break;
    }
    case ManifoldKind::Oblique:
      pt.value = point_residual(value) > kDriftTol ? normalize_columns(value)
                                                   : std::move(value);
      break;
    case ManifoldKind::FixedRank: {
      Eigen::JacobiSVD<Matrix> svd(value,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector& s = svd.singularValues();
      if (s(r_ - 1) <= kRankTol * std::max(s(0), 1e-300))
        throw NumericalError(name() + ": rank collapsed below r");
      SvdFactors f;
      f.u = svd.matrixU().leftCols(r_);
      f.sigma = s.head(r_);
      f.v = svd.matrixV().leftCols(r_);
      pt.value = f.u * f.sigma.asDiagonal() * f.v.transpose();
      pt.factors = std::move(f);
      break;
    }
    case ManifoldKind::Spd: {
      Matrix s = sym(value);
      Eigen::LLT<Matrix> llt(s);
      if (llt.info() != Eigen::Success)
        throw NumericalError(name() + ": point left the positive definite cone");
      pt.value = std::move(s);
      break;
    }
    case ManifoldKind::FixedRankPsd: {
      Eigen::JacobiSVD<Matrix> svd(value);
      const Vector& s = svd.singularValues();
      if (s(0) <= 0.0 || s(r_ - 1) <= kRankTol * s(0))
        throw NumericalError(name() + ": factor lost full column rank");
      pt.value = std::move(value);
      break;
    }
    case ManifoldKind::Product: {
      pt.value = std::move(value);
      pt.parts.reserve(parts_.size());
      for (std::size_t k = 0; k < parts_.size(); ++k) {
        Point sub = parts_[k].finalize(part_of(pt.value, (int)k));
        set_part(pt.value, (int)k, sub.value);
        pt.parts.push_back(std::move(sub));
      }
      break;
    }
  }
  pt.tag = hash_matrix(pt.value);
  return pt;
}

Point Manifold::make_point(Matrix value) const {
  require_shape(value, "point");
  if (!value.allFinite()) throw InvalidArgument(name() + ": point has non-finite entries");
  if (point_residual(value) > kPointTol)
    throw InvalidArgument(name() + ": value is not on the manifold (residual > 1e-8)");
  return finalize(std::move(value));
}

Point Manifold::from_factors(Matrix u, Vector sigma, Matrix v) const {
  if (kind_ != ManifoldKind::FixedRank)
    throw InvalidArgument("from_factors: only fixed-rank manifolds carry factors");
  if (u.rows() != n_ || u.cols() != r_ || v.rows() != p_ || v.cols() != r_ ||
      sigma.size() != r_)
    throw InvalidArgument("from_factors: factor shapes do not match (n, p, r)");
  return finalize(u * sigma.asDiagonal() * v.transpose());
}

void Manifold::check_point(const Point& x) const {
  require_shape(x.value, "point");
  if (point_residual(x.value) > kPointTol)
    throw GeometryError(name() + ": point drifted off the manifold");
}

Point Manifold::rand_point(Rng& rng) const {
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Oblique:
    case ManifoldKind::Stiefel:
    case ManifoldKind::Grassmann: {
      Matrix g = gaussian(ambient_rows(), ambient_cols(), rng);
      if (kind_ == ManifoldKind::Sphere) return finalize(std::move(g));
      if (kind_ == ManifoldKind::Oblique) return finalize(normalize_columns(g));
      Matrix q;
      qr_positive(g, &q);
      return finalize(std::move(q));
    }
    case ManifoldKind::FixedRank: {
      Matrix qu, qv;
      qr_positive(gaussian(n_, r_, rng), &qu);
      qr_positive(gaussian(p_, r_, rng), &qv);
      Vector s(r_);
      for (int i = 0; i < r_; ++i) s(i) = rng.uniform(1.0, 2.0);
      std::sort(s.data(), s.data() + r_, std::greater<double>());
      return finalize(qu * s.asDiagonal() * qv.transpose());
    }
    case ManifoldKind::Spd: {
      Matrix q;
      qr_positive(gaussian(n_, n_, rng), &q);
      Vector d(n_);
      for (int i = 0; i < n_; ++i) d(i) = rng.uniform(1.0, 2.0);
      return finalize(q * d.asDiagonal() * q.transpose());
    }
    case ManifoldKind::FixedRankPsd:
      return finalize(gaussian(n_, r_, rng));
    case ManifoldKind::Product: {
      Matrix flat(n_, 1);
      for (std::size_t k = 0; k < parts_.size(); ++k)
        set_part(flat, (int)k, parts_[k].rand_point(rng).value);
      return finalize(std::move(flat));
    }
  }
  throw InvalidArgument("rand_point: unsupported manifold");
}

Matrix Manifold::rand_tangent(const Point& x, Rng& rng) const {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix xi = project(x, gaussian(ambient_rows(), ambient_cols(), rng));
    double norm = xi.norm();
    if (norm > 1e-12) return xi / norm;
  }
  throw NumericalError(name() + ": could not sample a tangent direction");
}

// --- core operations ---------------------------------------------------------

Matrix Manifold::project(const Point& x, const Matrix& z) const {
  require_shape(z, "ambient vector");
  const Matrix& xv = x.value;
  switch (kind_) {
    case ManifoldKind::Sphere:
      return z - xv * (xv.col(0).dot(z.col(0)));
    case ManifoldKind::Stiefel:
      return z - xv * sym(xv.transpose() * z);
    case ManifoldKind::Oblique: {
      Matrix out = z;
      for (int j = 0; j < p_; ++j)
        out.col(j) -= xv.col(j) * xv.col(j).dot(z.col(j));
      return out;
    }
    case ManifoldKind::Grassmann:
      return z - xv * (xv.transpose() * z);
    case ManifoldKind::FixedRank: {
      FixedRankTangent t = fixed_rank_factors(x, z);
      const SvdFactors& f = *x.factors;
      return f.u * t.m * f.v.transpose() + t.up * f.v.transpose() +
             f.u * t.vp.transpose();
    }
    case ManifoldKind::Spd:
      return sym(z);
    case ManifoldKind::FixedRankPsd: {
      Matrix s = xv.transpose() * xv;
      Matrix rhs = xv.transpose() * z - z.transpose() * xv;
      Matrix om = sylvester_spd(s, rhs, "horizontal projection");
      return z - xv * om;
    }
    case ManifoldKind::Product: {
      Matrix out(n_, 1);
      for (std::size_t k = 0; k < parts_.size(); ++k)
        set_part(out, (int)k, parts_[k].project(x.parts[k], part_of(z, (int)k)));
      return out;
    }
  }
  throw InvalidArgument("project: unsupported manifold");
}

FixedRankTangent Manifold::fixed_rank_factors(const Point& x, const Matrix& z) const {
  if (kind_ != ManifoldKind::FixedRank)
    throw InvalidArgument("fixed_rank_factors: not a fixed-rank manifold");
  if (!x.factors) throw InvalidArgument("fixed_rank_factors: point has no factors");
  const SvdFactors& f = *x.factors;
  FixedRankTangent t;
  Matrix zv = z * f.v;              // n x r
  Matrix ztu = z.transpose() * f.u; // p x r
  t.m = f.u.transpose() * zv;       // r x r
  t.up = zv - f.u * t.m;
  t.vp = ztu - f.v * t.m.transpose();
  return t;
}

Point Manifold::retract(const Point& x, const Matrix& xi) const {
  return retract(x, xi, default_retraction());
}

Point Manifold::retract(const Point& x, const Matrix& xi, RetractionScheme s) const {
  require_shape(xi, "tangent vector");
  if (!retraction_applicable(s))
    throw InvalidArgument(name() + ": retraction '" + to_string(s) + "' not applicable");
  if (!xi.allFinite())
    throw NumericalError(name() + ": tangent vector has non-finite entries");
  const Matrix& xv = x.value;
  using R = RetractionScheme;
  switch (kind_) {
    case ManifoldKind::Sphere: {
      if (s == R::Exponential) {
        double t = xi.norm();
        if (t < 1e-300) return finalize(xv);
        return finalize(std::cos(t) * xv + (std::sin(t) / t) * xi);
      }
      if (s == R::Cayley) return finalize(cayley_apply(xv, xi, xv));
      return finalize(xv + xi);  // polar, qr, metric projection all normalize
    }
    case ManifoldKind::Stiefel: {
      switch (s) {
        case R::Exponential: {
          Matrix a = xv.transpose() * xi;
          Matrix k = xi - xv * a;
          Matrix q, r;
          qr_positive(k, &q, &r);
          Matrix b = Matrix::Zero(2 * p_, 2 * p_);
          b.topLeftCorner(p_, p_) = a;
          b.topRightCorner(p_, p_) = -r.transpose();
          b.bottomLeftCorner(p_, p_) = r;
          Matrix e = b.exp();
          return finalize(xv * e.topLeftCorner(p_, p_) + q * e.bottomLeftCorner(p_, p_));
        }
        case R::Cayley:
          return finalize(cayley_apply(xv, xi, xv));
        case R::Polar:
        case R::MetricProjection: {
          // Gram of the displaced point rather than I + xi'xi, so the map
          // restores orthonormality instead of assuming it
          Matrix z = xv + xi;
          return finalize(z * inv_sqrt_spd(z.transpose() * z));
        }
        case R::Qr: {
          Matrix q, r;
          qr_positive(xv + xi, &q, &r);
          require_full_rank_r(r, (xv + xi).norm(), "qr retraction");
          return finalize(std::move(q));
        }
      }
      break;
    }
    case ManifoldKind::Oblique: {
      if (s == R::Exponential) {
        Matrix out(n_, p_);
        for (int j = 0; j < p_; ++j) {
          double t = xi.col(j).norm();
          if (t < 1e-300)
            out.col(j) = xv.col(j);
          else
            out.col(j) = std::cos(t) * xv.col(j) + (std::sin(t) / t) * xi.col(j);
        }
        return finalize(std::move(out));
      }
      return finalize(normalize_columns(xv + xi));
    }
    case ManifoldKind::Grassmann: {
      if (s == R::Exponential) {
        Eigen::JacobiSVD<Matrix> svd(xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& sv = svd.singularValues();
        Matrix y = xv * svd.matrixV() * sv.array().cos().matrix().asDiagonal() *
                       svd.matrixV().transpose() +
                   svd.matrixU() * sv.array().sin().matrix().asDiagonal() *
                       svd.matrixV().transpose();
        Matrix q;
        qr_positive(y, &q);
        return finalize(std::move(q));
      }
      if (s == R::Qr) {
        Matrix q, r;
        qr_positive(xv + xi, &q, &r);
        require_full_rank_r(r, (xv + xi).norm(), "qr retraction");
        return finalize(std::move(q));
      }
      Matrix z = xv + xi;
      return finalize(z * inv_sqrt_spd(z.transpose() * z));
    }
    case ManifoldKind::FixedRank: {
      Matrix z = xv + xi;
      Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector& sv = svd.singularValues();
      double top = std::max(sv(0), 1e-300);
      if (sv(r_ - 1) <= kRankTol * top)
        throw NumericalError(name() + ": retraction hit the singular value floor");
      if (r_ < sv.size() && sv(r_ - 1) - sv(r_) <= kRankTol * top)
        throw NumericalError(name() + ": tied singular values make the rank-r projection ambiguous");
      Point pt;
      SvdFactors f;
      f.u = svd.matrixU().leftCols(r_);
      f.sigma = sv.head(r_);
      f.v = svd.matrixV().leftCols(r_);
      pt.value = f.u * f.sigma.asDiagonal() * f.v.transpose();
      pt.factors = std::move(f);
      pt.tag = hash_matrix(pt.value);
      return pt;
    }
    case ManifoldKind::Spd: {
      Matrix y = sym(xv + xi);
      Eigen::LLT<Matrix> llt(y);
      if (llt.info() != Eigen::Success)
        throw NumericalError(name() + ": retraction left the positive definite cone");
      Point pt;
      pt.value = std::move(y);
      pt.tag = hash_matrix(pt.value);
      return pt;
    }
    case ManifoldKind::FixedRankPsd:
      return finalize(xv + xi);
    case ManifoldKind::Product: {
      Point pt;
      pt.value = Matrix(n_, 1);
      pt.parts.reserve(parts_.size());
      for (std::size_t k = 0; k < parts_.size(); ++k) {
        Point sub = parts_[k].retract(x.parts[k], part_of(xi, (int)k), s);
        set_part(pt.value, (int)k, sub.value);
        pt.parts.push_back(std::move(sub));
      }
      pt.tag = hash_matrix(pt.value);
      return pt;
    }
  }
  throw InvalidArgument("retract: unsupported manifold");
}

Matrix Manifold::transport(const Point& x, const Matrix& eta, const Point& y,
                           const Matrix& xi, TransportScheme s) const {
  require_shape(eta, "tangent vector");
  require_shape(xi, "tangent vector");
  if (!transport_applicable(s))
    throw InvalidArgument(name() + ": transport '" + to_string(s) + "' not applicable");
  using T = TransportScheme;
  switch (s) {
    case T::EuclideanIdentity:
      return xi;
    case T::ProjectionBased:
      return project(y, xi);
    case T::Parallelization: {
      if (kind_ == ManifoldKind::Product) break;  // componentwise below
      Matrix bx = tangent_basis(x);
      Matrix by = tangent_basis(y);
      Vector coords = bx.transpose() * as_vec(xi);
      Vector out = by * coords;
      return Eigen::Map<const Matrix>(out.data(), ambient_rows(), ambient_cols());
    }
    case T::DiffCayley: {
      if (kind_ == ManifoldKind::Product) break;
      return cayley_apply(x.value, eta, xi);
    }
    case T::DiffPolar: {
      if (kind_ == ManifoldKind::Product) break;
      Matrix s_mat = y.value.transpose() * (x.value + eta);
      Matrix rhs = y.value.transpose() * xi - xi.transpose() * y.value;
      Matrix om = sylvester_spd(sym(s_mat), rhs, "differentiated polar transport");
      Eigen::PartialPivLU<Matrix> lu(s_mat);
      return y.value * om + (xi - y.value * (y.value.transpose() * xi)) *
                                lu.solve(Matrix::Identity(p_, p_));
    }
    case T::DiffQr: {
      if (kind_ == ManifoldKind::Product) break;
      Matrix s_mat = y.value.transpose() * (x.value + eta);
      Eigen::FullPivLU<Matrix> lu(s_mat);
      if (!lu.isInvertible())
        throw NumericalError("differentiated qr transport: singular R factor");
      Matrix w = lu.solve(Matrix::Identity(p_, p_));  // S^{-1}
      Matrix a = y.value.transpose() * xi * w;
      Matrix rho = Matrix::Zero(p_, p_);
      for (int i = 0; i < p_; ++i)
        for (int j = 0; j < i; ++j) {
          rho(i, j) = a(i, j);
          rho(j, i) = -a(i, j);
        }
      return y.value * rho + (xi - y.value * (y.value.transpose() * xi)) * w;
    }
  }
  // product manifolds: componentwise with the same scheme
  Matrix out(n_, 1);
  for (std::size_t k = 0; k < parts_.size(); ++k)
    set_part(out, (int)k,
             parts_[k].transport(x.parts[k], part_of(eta, (int)k), y.parts[k],
                                 part_of(xi, (int)k), s));
  return out;
}

Matrix Manifold::transport(const Point& x, const Matrix& eta, const Matrix& xi,
                           TransportScheme s) const {
  using T = TransportScheme;
  RetractionScheme rs = default_retraction();
  if (s == T::DiffCayley) rs = RetractionScheme::Cayley;
  if (s == T::DiffPolar) rs = RetractionScheme::Polar;
  if (s == T::DiffQr) rs = RetractionScheme::Qr;
  if (s == T::EuclideanIdentity) return xi;
  Point y = retract(x, eta, rs);
  return transport(x, eta, y, xi, s);
}

Matrix Manifold::egrad_to_rgrad(const Point& x, const Matrix& g) const {
  if (kind_ == ManifoldKind::FixedRankPsd) {
    require_shape(g, "gradient");
    return g;  // gradients of factor-invariant objectives are horizontal
  }
  return project(x, g);
}

Matrix Manifold::ehess_to_rhess(const Point& x, const Matrix& g,
                                const Matrix& hxi, const Matrix& xi) const {
  require_shape(g, "gradient");
  require_shape(hxi, "hessian product");
  require_shape(xi, "tangent vector");
  const Matrix& xv = x.value;
  switch (kind_) {
    case ManifoldKind::Sphere:
      return project(x, hxi - xi * (xv.col(0).dot(g.col(0))));
    case ManifoldKind::Stiefel:
      return project(x, hxi - xi * sym(xv.transpose() * g));
    case ManifoldKind::Oblique: {
      Matrix corr = hxi;
      for (int j = 0; j < p_; ++j)
        corr.col(j) -= xi.col(j) * xv.col(j).dot(g.col(j));
      return project(x, corr);
    }
    case ManifoldKind::Grassmann:
      return project(x, hxi - xi * (xv.transpose() * g));
    case ManifoldKind::FixedRank: {
      const SvdFactors& f = *x.factors;
      FixedRankTangent t = fixed_rank_factors(x, xi);
      Matrix m_h = f.u.transpose() * hxi * f.v;
      Matrix up_h = hxi * f.v - f.u * m_h;
      Matrix vp_h = hxi.transpose() * f.u - f.v * m_h.transpose();
      Vector sinv = f.sigma.cwiseInverse();
      Matrix gvp = g * t.vp;                // n x r
      gvp -= f.u * (f.u.transpose() * gvp);
      Matrix gup = g.transpose() * t.up;    // p x r
      gup -= f.v * (f.v.transpose() * gup);
      Matrix up_hat = up_h + gvp * sinv.asDiagonal();
      Matrix vp_hat = vp_h + gup * sinv.asDiagonal();
      return f.u * m_h * f.v.transpose() + up_hat * f.v.transpose() +
             f.u * vp_hat.transpose();
    }
    case ManifoldKind::Spd:
      return sym(hxi);
    case ManifoldKind::FixedRankPsd:
      return project(x, hxi);
    case ManifoldKind::Product: {
      Matrix out(n_, 1);
      for (std::size_t k = 0; k < parts_.size(); ++k)
        set_part(out, (int)k,
                 parts_[k].ehess_to_rhess(x.parts[k], part_of(g, (int)k),
                                          part_of(hxi, (int)k),
                                          part_of(xi, (int)k)));
      return out;
    }
  }
  throw InvalidArgument("ehess_to_rhess: unsupported manifold");
}

// --- tagged wrappers ---------------------------------------------------------

Tangent Manifold::tangent_project(const Point& x, const Matrix& z) const {
  Tangent t;
  t.value = project(x, z);
  t.base_tag = x.tag;
  return t;
}

double Manifold::inner(const Point& x, const Tangent& u, const Tangent& v) const {
  if (u.base_tag != x.tag || v.base_tag != x.tag)
    throw InvalidArgument(name() + ": inner product of tangents with mismatched base points");
  return dot(u.value, v.value);
}

Tangent Manifold::transport(const Point& x, const Tangent& eta, const Tangent& xi,
                            TransportScheme s) const {
  if (eta.base_tag != x.tag || xi.base_tag != x.tag)
    throw InvalidArgument(name() + ": transport of tangents with mismatched base points");
  using T = TransportScheme;
  RetractionScheme rs = default_retraction();
  if (s == T::DiffCayley) rs = RetractionScheme::Cayley;
  if (s == T::DiffPolar) rs = RetractionScheme::Polar;
  if (s == T::DiffQr) rs = RetractionScheme::Qr;
  Point y = retract(x, eta.value, rs);
  Tangent out;
  out.value = transport(x, eta.value, y, xi.value, s);
  out.base_tag = y.tag;
  return out;
}

// --- bases and product plumbing ----------------------------------------------

namespace {

// Orthonormal frame of the hyperplane orthogonal to the unit vector x, built
// from a single Householder reflector. Deterministic and smooth in x away
// from the x(0) = 0 plane, so frames at nearby points stay aligned.
Matrix sphere_frame(const Vector& x) {
  const long n = x.size();
  const double s = x(0) >= 0.0 ? 1.0 : -1.0;
  Vector v = x;
  v(0) += s;
  const double vv = v.squaredNorm();
  Matrix frame(n, n - 1);
  for (long j = 1; j < n; ++j) {
    Vector col = (-2.0 * v(j) / vv) * v;
    col(j) += 1.0;
    frame.col(j - 1) = col;
  }
  return frame;
}

// Trailing columns of an unpivoted Householder QR: an orthonormal basis of
// the complement of range(x).
Matrix orth_complement(const Matrix& x) {
  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix q = qr.householderQ();
  return q.rightCols(x.rows() - x.cols());
}

// Orthonormal basis of n x n symmetric matrices, vectorized columnwise.
Matrix symmetric_vec_basis(int n) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Matrix basis = Matrix::Zero(n * n, n * (n + 1) / 2);
  int c = 0;
  for (int i = 0; i < n; ++i) basis(i * n + i, c++) = 1.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      basis(j * n + i, c) = inv_sqrt2;
      basis(i * n + j, c) = inv_sqrt2;
      ++c;
    }
  return basis;
}

}  // namespace

Matrix Manifold::tangent_basis(const Point& x) const {
  const int rows = ambient_rows(), cols = ambient_cols();
  const int amb = rows * cols;
  const int dim = intrinsic_dim();
  Matrix basis = Matrix::Zero(amb, dim);
  switch (kind_) {
    case ManifoldKind::Product: {
      int col0 = 0;
      for (std::size_t k = 0; k < parts_.size(); ++k) {
        Matrix sub = parts_[k].tangent_basis(x.parts[k]);
        basis.block(offsets_[k], col0, sub.rows(), sub.cols()) = sub;
        col0 += (int)sub.cols();
      }
      return basis;
    }
    case ManifoldKind::Sphere:
      return sphere_frame(x.value.col(0));
    case ManifoldKind::Oblique: {
      int c = 0;
      for (int j = 0; j < p_; ++j) {
        Matrix f = sphere_frame(x.value.col(j));
        basis.block(j * n_, c, n_, n_ - 1) = f;
        c += n_ - 1;
      }
      return basis;
    }
    case ManifoldKind::Stiefel: {
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      int c = 0;
      Matrix e = Matrix::Zero(n_, p_);
      for (int j = 0; j < p_; ++j)
        for (int i = 0; i < j; ++i) {
          e.col(j) = inv_sqrt2 * x.value.col(i);
          e.col(i) = -inv_sqrt2 * x.value.col(j);
          basis.col(c++) = as_vec(e);
          e.col(j).setZero();
          e.col(i).setZero();
        }
      Matrix xp = orth_complement(x.value);
      for (int j = 0; j < p_; ++j)
        for (int k = 0; k < n_ - p_; ++k) {
          e.col(j) = xp.col(k);
          basis.col(c++) = as_vec(e);
          e.col(j).setZero();
        }
      return basis;
    }
    case ManifoldKind::Grassmann: {
      int c = 0;
      Matrix e = Matrix::Zero(n_, p_);
      Matrix xp = orth_complement(x.value);
      for (int j = 0; j < p_; ++j)
        for (int k = 0; k < n_ - p_; ++k) {
          e.col(j) = xp.col(k);
          basis.col(c++) = as_vec(e);
          e.col(j).setZero();
        }
      return basis;
    }
    case ManifoldKind::Spd:
      return symmetric_vec_basis(n_);
    case ManifoldKind::FixedRank: {
      const SvdFactors& f = *x.factors;
      Matrix up = orth_complement(f.u);
      Matrix vp = orth_complement(f.v);
      int c = 0;
      for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) {
          Matrix b = f.u.col(i) * f.v.col(j).transpose();
          basis.col(c++) = as_vec(b);
        }
      for (int k = 0; k < n_ - r_; ++k)
        for (int j = 0; j < r_; ++j) {
          Matrix b = up.col(k) * f.v.col(j).transpose();
          basis.col(c++) = as_vec(b);
        }
      for (int i = 0; i < r_; ++i)
        for (int l = 0; l < p_ - r_; ++l) {
          Matrix b = f.u.col(i) * vp.col(l).transpose();
          basis.col(c++) = as_vec(b);
        }
      return basis;
    }
    case ManifoldKind::FixedRankPsd: {
      // horizontal space at Y: { Z : Y^T Z symmetric }. With Y = Q R the free
      // block lives in the complement of range(Q); the constrained block is
      // Q R^{-T} S over symmetric S, orthonormalized by the inverse square
      // root of its Gram matrix, which keeps the construction basis-invariant.
      Eigen::HouseholderQR<Matrix> qr(x.value);
      Matrix q = qr.householderQ() * Matrix::Identity(n_, r_);
      Matrix rfac = Matrix(qr.matrixQR().topRows(r_).triangularView<Eigen::Upper>());
      Matrix qp = orth_complement(x.value);
      int c = 0;
      Matrix e = Matrix::Zero(n_, r_);
      for (int j = 0; j < r_; ++j)
        for (int k = 0; k < n_ - r_; ++k) {
          e.col(j) = qp.col(k);
          basis.col(c++) = as_vec(e);
          e.col(j).setZero();
        }
      Matrix sym_basis = symmetric_vec_basis(r_);
      const int ns = r_ * (r_ + 1) / 2;
      Matrix raw(amb, ns);
      for (int m = 0; m < ns; ++m) {
        Matrix s = Eigen::Map<const Matrix>(sym_basis.col(m).data(), r_, r_);
        Matrix z = q * rfac.transpose()
                           .triangularView<Eigen::Lower>()
                           .solve(s);
        raw.col(m) = as_vec(z);
      }
      Matrix gram = raw.transpose() * raw;
      Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
      Matrix gram_isqrt = es.eigenvectors() *
                          es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().transpose();
      basis.rightCols(ns) = raw * gram_isqrt;
      return basis;
    }
  }
  return basis;
}

Matrix Manifold::part_of(const Matrix& ambient, int k) const {
  const Manifold& mk = parts_.at(k);
  return Eigen::Map<const Matrix>(ambient.data() + offsets_[k],
                                  mk.ambient_rows(), mk.ambient_cols());
}

void Manifold::set_part(Matrix& ambient, int k, const Matrix& block) const {
  const Manifold& mk = parts_.at(k);
  Eigen::Map<Matrix>(ambient.data() + offsets_[k], mk.ambient_rows(),
                     mk.ambient_cols()) = block;
}

}  // namespace maniopt
