#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace maniopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Contract violations: bad shapes, off-manifold inputs, invalid scheme picks.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A geometric operation received data it cannot represent (rank drop, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerically ill-posed step: singular solves, SVD ties, non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RetractionScheme { Exponential, Cayley, Polar, Qr, MetricProjection };

enum class TransportScheme {
  ProjectionBased,
  Parallelization,
  DiffCayley,
  DiffPolar,
  DiffQr,
  EuclideanIdentity,
};

const char* to_string(RetractionScheme s);
const char* to_string(TransportScheme s);
std::optional<RetractionScheme> parse_retraction(const std::string& s);
std::optional<TransportScheme> parse_transport(const std::string& s);

// Rank-r factorization cached on fixed-rank points (value = u * sigma * v').
struct SvdFactors {
  Matrix u;      // n x r
  Vector sigma;  // r, decreasing, positive
  Matrix v;      // p x r
};

struct Point {
  Matrix value;                        // ambient representation
  std::optional<SvdFactors> factors;   // fixed-rank only
  std::vector<Point> parts;            // product manifolds only
  std::uint64_t tag = 0;               // identity token, set by the manifold
};

// Tangent vectors are ambient matrices tagged with the base point identity so
// that cross-base mixing is caught instead of silently producing garbage.
struct Tangent {
  Matrix value;
  std::uint64_t base_tag = 0;
};

// Parametrized fixed-rank tangent: value = u*m*v' + up*v' + u*vp'.
struct FixedRankTangent {
  Matrix m;   // r x r
  Matrix up;  // n x r, u'up = 0
  Matrix vp;  // p x r, v'vp = 0
};

std::uint64_t hash_bytes(const void* data, std::size_t n);
std::uint64_t hash_matrix(const Matrix& m);

inline double dot(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum();
}

inline double fnorm(const Matrix& a) { return a.norm(); }

inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline Matrix skew(const Matrix& a) { return 0.5 * (a - a.transpose()); }

}  // namespace maniopt
