#pragma once

#include <limits>

#include "maniopt/objective.hpp"
#include "maniopt/rng.hpp"

namespace maniopt {

// min tr(X^T A X) over orthonormal X: the p smallest eigenvalues of the
// symmetric matrix A. The certificate is the dense eigensolver optimum.
ProblemInstance make_eigen(long n, long p, std::uint64_t seed);
ProblemInstance make_eigen_from(const Matrix& a, long p);

// Rank-p relaxation of max cut: unit columns v_i, maximize tr(L V^T V)/4.
// Stored objective is the negated value (all solvers minimize).
ProblemInstance make_maxcut(long n, long p, std::uint64_t seed,
                            double edge_prob = 0.5);
ProblemInstance make_maxcut_from(const Matrix& w, long p);

struct CutResult {
  double value = 0.0;
  Vector signs;
};
double cut_value(const Matrix& w, const Vector& signs);
// Exhaustive search over sign patterns; n is capped at 24.
CutResult maxcut_bruteforce(const Matrix& w);

// Rank-p nearest low-rank correlation matrix under an elementwise weight:
// 0.5 |H o (V^T V - C)|_F^2 over unit columns V. H must be nonnegative.
ProblemInstance make_ncm(long n, long p, std::uint64_t seed, bool weighted);
ProblemInstance make_ncm_from(const Matrix& c, const Matrix& h, long p);

// Phase recovery via the measurement-phase formulation: unit phase vectors
// u_i against M = diag(b) (I - A A^+) diag(b), in real 2x2 block form.
// Planted noiseless measurements give optimal value 0. data["m"] holds the
// embedded quadratic form.
ProblemInstance make_phase_retrieval(long m, long n, std::uint64_t seed);
ProblemInstance make_phase_retrieval_from(const Matrix& a_re,
                                          const Matrix& a_im, const Vector& b);

// Ground state of a discretized 1D condensate energy on the sphere:
// 0.5 x^T A x + (beta/2) sum x_i^4, with the quadratic/quartic split exposed
// for structured quasi-Newton runs.
ProblemInstance make_bec(long n, double beta, std::uint64_t seed);
ProblemInstance make_bec_from(const Matrix& a, double beta);

// Sparse principal subspace: g = -tr(X^T A^T A X) on the Stiefel manifold
// plus h = rho |X|_1 with its prox and activity pattern.
ProblemInstance make_spca(long m, long n, long p, double rho,
                          std::uint64_t seed);
ProblemInstance make_spca_from(const Matrix& a, double rho, long p);

// Low-rank matrix completion on the fixed-rank manifold with a planted
// rank-r matrix observed on a Bernoulli mask.
ProblemInstance make_completion(long n1, long n2, long r, double sample_rate,
                                std::uint64_t seed);
// Entries of observed must vanish wherever the 0/1 mask does.
ProblemInstance make_completion_from(const Matrix& observed, const Matrix& mask,
                                     long r);

// Rank-d relaxation of max_x x^T C x over signs, C positive semidefinite.
ProblemInstance make_grothendieck(long n, long d, std::uint64_t seed);
ProblemInstance make_grothendieck_from(const Matrix& c, long d);

// Exhaustive max of x^T C x over sign vectors; n capped at 24.
double quadratic_sign_bruteforce(const Matrix& c);

struct RoundingResult {
  double mean = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  Vector best_signs;
};
// Random-hyperplane rounding of a rank-d solution: sample r ~ N(0, I_d),
// x_i = sign(r^T v_i), evaluate x^T C x; d = 1 reduces to sign rounding.
RoundingResult groth_round(const Matrix& c, const Matrix& v, int draws,
                           Rng& rng);

struct BlockRoundingResult {
  std::vector<Matrix> blocks;
  double value = 0.0;
};
// Orthogonal-block rounding for block size d: given C (nd x nd, PSD) and a
// factor L with G = L L^T split into block rows X_i (d rows each), sample
// Gaussian R with entries N(0, 1/d) and return V_i = polar_factor(X_i R)
// together with sum_ij tr(C_ij^T V_i V_j^T). Rank-deficient X_i R triggers a
// capped resample. d = 1 reduces groth_round's sign rounding.
BlockRoundingResult groth_round_blocks(const Matrix& c, const Matrix& l,
                                       long d, Rng& rng);

// Leading eigenvector of a sample covariance as a finite sum over samples,
// for stochastic solvers. data["principal"] holds the dense eigenvector.
ProblemInstance make_pca_stream(long n, long samples, std::uint64_t seed);

}  // namespace maniopt
