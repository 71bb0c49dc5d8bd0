#include "maniopt/problems.hpp"

#include <cmath>
#include <memory>

namespace maniopt {
namespace {

Matrix gaussian(long rows, long cols, Rng& rng) {
  Matrix a(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) a(i, j) = rng.normal();
  return a;
}

Matrix symmetric_gaussian(long n, Rng& rng) {
  Matrix g = gaussian(n, n, rng);
  return 0.5 * (g + g.transpose());
}

}  // namespace

ProblemInstance make_eigen_from(const Matrix& a, long p) {
  if (a.rows() != a.cols()) throw InvalidArgument("eigen: matrix must be square");
  if ((a - a.transpose()).norm() > 1e-10 * std::max(1.0, a.norm()))
    throw InvalidArgument("eigen: matrix must be symmetric");
  long n = a.rows();
  auto ap = std::make_shared<Matrix>(a);

  ProblemInstance inst{Manifold::stiefel(n, p), {}, "eigen", {}, 0, {}, {}};
  inst.dims = {{"n", double(n)}, {"p", double(p)}};
  inst.objective.value = [ap](const Point& x) {
    return (x.value.transpose() * (*ap) * x.value).trace();
  };
  inst.objective.egrad = [ap](const Point& x) -> Matrix {
    return 2.0 * (*ap) * x.value;
  };
  inst.objective.ehess_vec = [ap](const Point&, const Matrix& u) -> Matrix {
    return 2.0 * (*ap) * u;
  };

  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  double opt = es.eigenvalues().head(p).sum();
  inst.certificate = Certificate{opt, "sum of the p smallest eigenvalues"};
  inst.data["a"] = a;
  return inst;
}

ProblemInstance make_eigen(long n, long p, std::uint64_t seed) {
  Rng rng(seed);
  ProblemInstance inst = make_eigen_from(symmetric_gaussian(n, rng), p);
  inst.seed = seed;
  return inst;
}

double cut_value(const Matrix& w, const Vector& signs) {
  double total = 0.0;
  for (long i = 0; i < w.rows(); ++i)
    for (long j = i + 1; j < w.cols(); ++j)
      if (signs(i) * signs(j) < 0) total += w(i, j);
  return total;
}

CutResult maxcut_bruteforce(const Matrix& w) {
  long n = w.rows();
  if (n > 24) throw InvalidArgument("maxcut_bruteforce: n must be at most 24");
  CutResult best;
  if (n == 0) {
    best.value = 0.0;
    return best;
  }
  best.value = -std::numeric_limits<double>::infinity();
  Vector signs(n);
  // fix the last sign to +1; cuts are symmetric under global sign flips
  std::uint64_t patterns = 1ULL << (n - 1);
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    for (long i = 0; i < n - 1; ++i)
      signs(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    signs(n - 1) = 1.0;
    double v = cut_value(w, signs);
    if (v > best.value) {
      best.value = v;
      best.signs = signs;
    }
  }
  return best;
}

ProblemInstance make_maxcut_from(const Matrix& w, long p) {
  long n = w.rows();
  if (p < 2) throw InvalidArgument("maxcut: relaxation rank must be at least 2");
  if (n < 1) throw InvalidArgument("maxcut: graph must have at least one vertex");
  if (w.cols() != n) throw InvalidArgument("maxcut: weight matrix must be square");
  if ((w - w.transpose()).norm() > 1e-12 * std::max(1.0, w.norm()))
    throw InvalidArgument("maxcut: weight matrix must be symmetric");
  if (w.diagonal().cwiseAbs().maxCoeff() > 0)
    throw InvalidArgument("maxcut: weight matrix must have a zero diagonal");
  if (w.minCoeff() < 0)
    throw InvalidArgument("maxcut: weights must be nonnegative");
  Vector degree = w.rowwise().sum();
  Matrix lap = Matrix(degree.asDiagonal()) - w;
  auto lp = std::make_shared<Matrix>(lap);

  ProblemInstance inst{Manifold::oblique(p, n), {}, "maxcut", {}, 0, {}, {}};
  inst.dims = {{"n", double(n)}, {"p", double(p)}};
  inst.objective.value = [lp](const Point& x) {
    return -0.25 * (x.value * (*lp)).cwiseProduct(x.value).sum();
  };
  inst.objective.egrad = [lp](const Point& x) -> Matrix {
    return -0.5 * x.value * (*lp);
  };
  inst.objective.ehess_vec = [lp](const Point&, const Matrix& u) -> Matrix {
    return -0.5 * u * (*lp);
  };
  inst.data["w"] = w;
  inst.data["laplacian"] = lap;
  return inst;
}

ProblemInstance make_maxcut(long n, long p, std::uint64_t seed,
                            double edge_prob) {
  Rng rng(seed);
  Matrix w = Matrix::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j)
      if (rng.uniform() < edge_prob) {
        double weight = rng.uniform();
        w(i, j) = weight;
        w(j, i) = weight;
      }
  ProblemInstance inst = make_maxcut_from(w, p);
  inst.seed = seed;
  return inst;
}

ProblemInstance make_ncm_from(const Matrix& c, const Matrix& h, long p) {
  long n = c.rows();
  if (c.cols() != n) throw InvalidArgument("ncm: target must be square");
  if ((c - c.transpose()).norm() > 1e-10 * std::max(1.0, c.norm()))
    throw InvalidArgument("ncm: target must be symmetric");
  if (h.rows() != n || h.cols() != n)
    throw InvalidArgument("ncm: weight shape must match the target");
  if (h.minCoeff() < 0) throw InvalidArgument("ncm: weights must be nonnegative");
  if ((h - h.transpose()).norm() > 1e-10 * std::max(1.0, h.norm()))
    throw InvalidArgument("ncm: weights must be symmetric");

  auto cp = std::make_shared<Matrix>(c);
  auto h2 = std::make_shared<Matrix>(h.cwiseProduct(h));

  ProblemInstance inst{Manifold::oblique(p, n), {}, "ncm", {}, 0, {}, {}};
  inst.dims = {{"n", double(n)}, {"p", double(p)}};
  inst.objective.value = [cp, h2](const Point& x) {
    Matrix r = x.value.transpose() * x.value - *cp;
    return 0.5 * h2->cwiseProduct(r).cwiseProduct(r).sum();
  };
  inst.objective.egrad = [cp, h2](const Point& x) -> Matrix {
    Matrix w = h2->cwiseProduct(x.value.transpose() * x.value - *cp);
    return 2.0 * x.value * w;
  };
  inst.objective.ehess_vec = [cp, h2](const Point& x,
                                      const Matrix& u) -> Matrix {
    const Matrix& v = x.value;
    Matrix w = h2->cwiseProduct(v.transpose() * v - *cp);
    Matrix dw = h2->cwiseProduct(u.transpose() * v + v.transpose() * u);
    return 2.0 * u * w + 2.0 * v * dw;
  };
  inst.data["target"] = c;
  inst.data["weights"] = h;
  return inst;
}

ProblemInstance make_ncm(long n, long p, std::uint64_t seed, bool weighted) {
  Rng rng(seed);
  // noisy correlation target: correlation of a random factor model
  Matrix b = gaussian(n, std::max<long>(2, n / 2), rng);
  Matrix cov = b * b.transpose() / double(b.cols());
  Matrix c(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      c(i, j) = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
  Matrix noise = symmetric_gaussian(n, rng) * 0.3;
  noise.diagonal().setZero();
  c += noise;
  c = 0.5 * (c + c.transpose());

  Matrix h = Matrix::Ones(n, n);
  if (weighted)
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) {
        if (j > i) h(i, j) = rng.uniform() < 0.5 ? 0.1 : 1.0;
        if (j < i) h(i, j) = h(j, i);
      }

  ProblemInstance inst = make_ncm_from(c, h, p);
  inst.seed = seed;
  inst.dims["weighted"] = weighted ? 1.0 : 0.0;
  return inst;
}

ProblemInstance make_phase_retrieval_from(const Matrix& a_re,
                                          const Matrix& a_im, const Vector& b) {
  long m = a_re.rows();
  long n = a_re.cols();
  if (a_im.rows() != m || a_im.cols() != n)
    throw InvalidArgument("phase retrieval: real and imaginary parts must share a shape");
  if (b.size() != m)
    throw InvalidArgument("phase retrieval: need one magnitude per measurement");
  if (m > 0 && b.minCoeff() < 0)
    throw InvalidArgument("phase retrieval: magnitudes must be nonnegative");

  // real block embedding of the complex measurement matrix
  Matrix ahat(2 * m, 2 * n);
  ahat.topLeftCorner(m, n) = a_re;
  ahat.topRightCorner(m, n) = -a_im;
  ahat.bottomLeftCorner(m, n) = a_im;
  ahat.bottomRightCorner(m, n) = a_re;

  Eigen::JacobiSVD<Matrix> svd(ahat, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  double cut = sv.size() > 0 ? 1e-12 * sv(0) : 0.0;
  long rank = 0;
  for (long i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  Matrix ur = svd.matrixU().leftCols(rank);

  Vector bb(2 * m);
  bb.head(m) = b;
  bb.tail(m) = b;
  Matrix proj = Matrix::Identity(2 * m, 2 * m) - ur * ur.transpose();
  Matrix mr = bb.asDiagonal() * proj * bb.asDiagonal();
  mr = 0.5 * (mr + mr.transpose());
  auto mp = std::make_shared<Matrix>(mr);

  // phases live on the oblique manifold of unit 2-columns; the objective is
  // the real quadratic form of the embedded Hermitian matrix
  auto stack = [m](const Matrix& v) {
    Vector w(2 * m);
    w.head(m) = v.row(0).transpose();
    w.tail(m) = v.row(1).transpose();
    return w;
  };
  auto unstack = [m](const Vector& w) {
    Matrix g(2, m);
    g.row(0) = w.head(m).transpose();
    g.row(1) = w.tail(m).transpose();
    return g;
  };

  ProblemInstance inst{Manifold::oblique(2, m), {}, "phase", {}, 0, {}, {}};
  inst.dims = {{"m", double(m)}, {"n", double(n)}};
  inst.objective.value = [mp, stack](const Point& x) {
    Vector w = stack(x.value);
    return w.dot(*mp * w);
  };
  inst.objective.egrad = [mp, stack, unstack](const Point& x) -> Matrix {
    Vector w = stack(x.value);
    return unstack(2.0 * (*mp * w));
  };
  inst.objective.ehess_vec = [mp, stack, unstack](const Point&,
                                                  const Matrix& u) -> Matrix {
    Vector w = stack(u);
    return unstack(2.0 * (*mp * w));
  };
  inst.data["m"] = mr;
  inst.data["b"] = b;
  return inst;
}

ProblemInstance make_phase_retrieval(long m, long n, std::uint64_t seed) {
  if (m <= n) throw InvalidArgument("phase retrieval: need more measurements than unknowns");
  Rng rng(seed);
  Matrix are = gaussian(m, n, rng) / std::sqrt(2.0);
  Matrix aim = gaussian(m, n, rng) / std::sqrt(2.0);
  Matrix xre = gaussian(n, 1, rng) / std::sqrt(2.0);
  Matrix xim = gaussian(n, 1, rng) / std::sqrt(2.0);

  Matrix zre = are * xre - aim * xim;
  Matrix zim = are * xim + aim * xre;
  Vector b = (zre.cwiseProduct(zre) + zim.cwiseProduct(zim))
                 .cwiseSqrt()
                 .col(0);

  ProblemInstance inst = make_phase_retrieval_from(are, aim, b);
  inst.seed = seed;
  inst.certificate = Certificate{0.0, "planted noiseless measurements"};
  Matrix uphase(2, m);
  for (long i = 0; i < m; ++i) {
    double r = std::hypot(zre(i, 0), zim(i, 0));
    uphase(0, i) = r > 0 ? zre(i, 0) / r : 1.0;
    uphase(1, i) = r > 0 ? zim(i, 0) / r : 0.0;
  }
  inst.data["planted_phases"] = uphase;
  return inst;
}

ProblemInstance make_bec_from(const Matrix& a, double beta) {
  long n = a.rows();
  if (a.cols() != n) throw InvalidArgument("bec: matrix must be square");
  if ((a - a.transpose()).norm() > 1e-10 * std::max(1.0, a.norm()))
    throw InvalidArgument("bec: matrix must be symmetric");
  if (beta < 0) throw InvalidArgument("bec: interaction strength must be nonnegative");
  auto ap = std::make_shared<Matrix>(a);

  ProblemInstance inst{Manifold::sphere(n), {}, "bec", {}, 0, {}, {}};
  inst.dims = {{"n", double(n)}, {"beta", beta}};
  inst.objective.value = [ap, beta](const Point& x) {
    double quad = 0.5 * x.value.col(0).dot((*ap) * x.value.col(0));
    double quart = 0.5 * beta * x.value.array().pow(4).sum();
    return quad + quart;
  };
  inst.objective.egrad = [ap, beta](const Point& x) -> Matrix {
    return (*ap) * x.value + 2.0 * beta * x.value.array().cube().matrix();
  };
  inst.objective.ehess_vec = [ap, beta](const Point& x,
                                        const Matrix& u) -> Matrix {
    Matrix diag = 6.0 * beta * x.value.array().square().matrix();
    return (*ap) * u + diag.cwiseProduct(u);
  };
  HessianSplit split;
  split.cheap_hess_vec = [beta](const Point& x, const Matrix& u) -> Matrix {
    Matrix diag = 6.0 * beta * x.value.array().square().matrix();
    return diag.cwiseProduct(u);
  };
  split.expensive_egrad = [ap](const Point& x) -> Matrix {
    return (*ap) * x.value;
  };
  split.expensive_hess_vec = [ap](const Point&, const Matrix& u) -> Matrix {
    return (*ap) * u;
  };
  inst.objective.split = split;

  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  double lmin = es.eigenvalues()(0);
  inst.certificate = Certificate{
      0.5 * lmin + (beta > 0 ? 0.5 * beta / double(n) : 0.0),
      "energy lower bound from the smallest eigenvalue and the quartic mean"};
  inst.data["a"] = a;
  return inst;
}

ProblemInstance make_bec(long n, double beta, std::uint64_t seed) {
  Rng rng(seed);
  double hstep = 1.0 / double(n + 1);
  Matrix a = Matrix::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    a(i, i) = 2.0 / (hstep * hstep);
    if (i + 1 < n) {
      a(i, i + 1) = -1.0 / (hstep * hstep);
      a(i + 1, i) = -1.0 / (hstep * hstep);
    }
  }
  for (long i = 0; i < n; ++i) {
    double pos = (double(i) + 1.0) * hstep - 0.5;
    a(i, i) += 100.0 * pos * pos + 0.5 * rng.uniform();
  }
  a = 0.5 * (a + a.transpose());
  ProblemInstance inst = make_bec_from(a, beta);
  inst.seed = seed;
  return inst;
}

ProblemInstance make_spca_from(const Matrix& a, double rho, long p) {
  long n = a.cols();
  if (rho < 0) throw InvalidArgument("spca: penalty must be nonnegative");
  Matrix gram = a.transpose() * a;
  gram = 0.5 * (gram + gram.transpose());
  auto gp = std::make_shared<Matrix>(gram);

  ProblemInstance inst{Manifold::stiefel(n, p), {}, "spca", {}, 0, {}, {}};
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  double lmax = es.eigenvalues()(n - 1);
  inst.dims = {{"m", double(a.rows())}, {"n", double(n)}, {"p", double(p)},
               {"rho", rho}, {"smooth_lipschitz", 2.0 * lmax}};
  inst.objective.value = [gp](const Point& x) {
    return -(x.value.transpose() * (*gp) * x.value).trace();
  };
  inst.objective.egrad = [gp](const Point& x) -> Matrix {
    return -2.0 * (*gp) * x.value;
  };
  inst.objective.ehess_vec = [gp](const Point&, const Matrix& u) -> Matrix {
    return -2.0 * (*gp) * u;
  };

  Nonsmooth h;
  h.value = [rho](const Matrix& x) { return rho * x.cwiseAbs().sum(); };
  h.prox = [rho](const Matrix& z, double t) -> Matrix {
    double thr = t * rho;
    return z.unaryExpr([thr](double v) {
      if (v > thr) return v - thr;
      if (v < -thr) return v + thr;
      return 0.0;
    });
  };
  h.prox_jacobian_diag = [rho](const Matrix& z, double t) -> Matrix {
    double thr = t * rho;
    return z.unaryExpr([thr](double v) {
      return std::abs(v) > thr ? 1.0 : 0.0;
    });
  };
  h.lipschitz = rho;
  inst.objective.nonsmooth = h;

  if (rho == 0.0) {
    double opt = -es.eigenvalues().tail(p).sum();
    inst.certificate = Certificate{opt, "sum of the p largest gram eigenvalues, negated"};
  }
  inst.data["gram"] = gram;
  return inst;
}

ProblemInstance make_spca(long m, long n, long p, double rho,
                          std::uint64_t seed) {
  Rng rng(seed);
  Matrix a = gaussian(m, n, rng) / std::sqrt(double(m));
  ProblemInstance inst = make_spca_from(a, rho, p);
  inst.seed = seed;
  return inst;
}

ProblemInstance make_completion_from(const Matrix& observed, const Matrix& mask,
                                     long r) {
  long n1 = observed.rows();
  long n2 = observed.cols();
  if (mask.rows() != n1 || mask.cols() != n2)
    throw InvalidArgument("completion: mask shape must match the data");
  if (r < 1 || r > std::min(n1, n2))
    throw InvalidArgument("completion: rank must fit the matrix dimensions");
  for (long j = 0; j < n2; ++j)
    for (long i = 0; i < n1; ++i) {
      double mv = mask(i, j);
      if (mv != 0.0 && mv != 1.0)
        throw InvalidArgument("completion: mask entries must be 0 or 1");
      if (mv == 0.0 && observed(i, j) != 0.0)
        throw InvalidArgument("completion: data present outside the mask");
    }
  auto mp = std::make_shared<Matrix>(mask);
  auto op = std::make_shared<Matrix>(observed);

  ProblemInstance inst{Manifold::fixed_rank(n1, n2, r), {}, "completion",
                       {}, 0, {}, {}};
  inst.dims = {{"n1", double(n1)}, {"n2", double(n2)}, {"r", double(r)}};
  inst.objective.value = [mp, op](const Point& x) {
    Matrix res = mp->cwiseProduct(x.value) - *op;
    return 0.5 * res.squaredNorm();
  };
  inst.objective.egrad = [mp, op](const Point& x) -> Matrix {
    return mp->cwiseProduct(x.value) - *op;
  };
  inst.objective.ehess_vec = [mp](const Point&, const Matrix& u) -> Matrix {
    return mp->cwiseProduct(u);
  };
  inst.data["mask"] = mask;
  inst.data["observed"] = observed;
  return inst;
}

ProblemInstance make_completion(long n1, long n2, long r, double sample_rate,
                                std::uint64_t seed) {
  Rng rng(seed);
  Matrix left = gaussian(n1, r, rng) / std::pow(double(n1), 0.25);
  Matrix right = gaussian(n2, r, rng) / std::pow(double(n2), 0.25);
  Matrix planted = left * right.transpose();
  Matrix mask(n1, n2);
  for (long j = 0; j < n2; ++j)
    for (long i = 0; i < n1; ++i)
      mask(i, j) = rng.uniform() < sample_rate ? 1.0 : 0.0;
  Matrix observed = mask.cwiseProduct(planted);

  ProblemInstance inst = make_completion_from(observed, mask, r);
  inst.seed = seed;
  inst.dims["sample_rate"] = sample_rate;
  inst.certificate = Certificate{0.0, "planted exactly rank-r data"};
  inst.data["planted"] = planted;
  return inst;
}

double quadratic_sign_bruteforce(const Matrix& c) {
  long n = c.rows();
  if (n > 24) throw InvalidArgument("quadratic_sign_bruteforce: n must be at most 24");
  double best = -std::numeric_limits<double>::infinity();
  Vector signs(n);
  std::uint64_t patterns = 1ULL << (n - 1);
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    for (long i = 0; i < n - 1; ++i)
      signs(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    signs(n - 1) = 1.0;
    best = std::max(best, signs.dot(c * signs));
  }
  return best;
}

ProblemInstance make_grothendieck_from(const Matrix& c, long d) {
  long n = c.rows();
  if (c.cols() != n) throw InvalidArgument("grothendieck: matrix must be square");
  auto cp = std::make_shared<Matrix>(0.5 * (c + c.transpose()));

  ProblemInstance inst{Manifold::oblique(d, n), {}, "grothendieck",
                       {}, 0, {}, {}};
  inst.dims = {{"n", double(n)}, {"d", double(d)}};
  inst.objective.value = [cp](const Point& x) {
    return -(x.value * (*cp)).cwiseProduct(x.value).sum();
  };
  inst.objective.egrad = [cp](const Point& x) -> Matrix {
    return -2.0 * x.value * (*cp);
  };
  inst.objective.ehess_vec = [cp](const Point&, const Matrix& u) -> Matrix {
    return -2.0 * u * (*cp);
  };
  inst.data["c"] = *cp;
  return inst;
}

ProblemInstance make_grothendieck(long n, long d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix g = gaussian(n, n, rng);
  Matrix c = g * g.transpose() / double(n);
  ProblemInstance inst = make_grothendieck_from(c, d);
  inst.seed = seed;
  return inst;
}

RoundingResult groth_round(const Matrix& c, const Matrix& v, int draws,
                           Rng& rng) {
  long d = v.rows();
  long n = v.cols();
  RoundingResult out;
  Vector signs(n);
  double total = 0.0;
  for (int k = 0; k < draws; ++k) {
    Vector r(d);
    for (long i = 0; i < d; ++i) r(i) = rng.normal();
    for (long j = 0; j < n; ++j) {
      double s = r.dot(v.col(j));
      signs(j) = s >= 0 ? 1.0 : -1.0;
    }
    double val = signs.dot(c * signs);
    total += val;
    if (val > out.best) {
      out.best = val;
      out.best_signs = signs;
    }
  }
  out.mean = total / double(draws);
  return out;
}

BlockRoundingResult groth_round_blocks(const Matrix& c, const Matrix& l,
                                       long d, Rng& rng) {
  if (d < 1)
    throw InvalidArgument("groth_round_blocks: block size must be positive");
  long nd = c.rows();
  if (c.cols() != nd)
    throw InvalidArgument("groth_round_blocks: matrix must be square");
  if (nd % d != 0 || nd == 0)
    throw InvalidArgument(
        "groth_round_blocks: matrix size must be a positive multiple of the block size");
  if (l.rows() != nd)
    throw InvalidArgument(
        "groth_round_blocks: factor must carry one row block per variable");
  long n = nd / d;
  double sigma = 1.0 / std::sqrt(double(d));
  for (int attempt = 0; attempt < 32; ++attempt) {
    Matrix r(l.cols(), d);
    for (long j = 0; j < d; ++j)
      for (long i = 0; i < l.cols(); ++i) r(i, j) = sigma * rng.normal();
    Matrix stacked(nd, d);
    bool degenerate = false;
    BlockRoundingResult out;
    for (long i = 0; i < n; ++i) {
      Matrix y = l.middleRows(i * d, d) * r;
      Eigen::JacobiSVD<Matrix> svd(y,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vector& sv = svd.singularValues();
      if (!(sv(d - 1) > 1e-12 * sv(0))) {
        degenerate = true;
        break;
      }
      Matrix v = svd.matrixU() * svd.matrixV().transpose();
      stacked.middleRows(i * d, d) = v;
      out.blocks.push_back(std::move(v));
    }
    if (degenerate) continue;
    out.value = (stacked.transpose() * c * stacked).trace();
    return out;
  }
  throw NumericalError(
      "groth_round_blocks: projected blocks stayed rank deficient across resamples");
}

ProblemInstance make_pca_stream(long n, long samples, std::uint64_t seed) {
  Rng rng(seed);
  // spiked covariance sample set: one planted direction plus isotropic noise
  Vector spike = gaussian(n, 1, rng).col(0);
  spike.normalize();
  Matrix a(samples, n);
  for (long i = 0; i < samples; ++i) {
    double coef = 3.0 * rng.normal();
    for (long j = 0; j < n; ++j)
      a(i, j) = coef * spike(j) + 0.5 * rng.normal();
  }
  Matrix cov = a.transpose() * a / double(samples);
  cov = 0.5 * (cov + cov.transpose());
  auto covp = std::make_shared<Matrix>(cov);
  auto asp = std::make_shared<Matrix>(a);

  ProblemInstance inst{Manifold::sphere(n), {}, "pca", {}, seed, {}, {}};
  inst.dims = {{"n", double(n)}, {"samples", double(samples)}};
  inst.objective.value = [covp](const Point& x) {
    return -x.value.col(0).dot((*covp) * x.value.col(0));
  };
  inst.objective.egrad = [covp](const Point& x) -> Matrix {
    return -2.0 * (*covp) * x.value;
  };
  inst.objective.ehess_vec = [covp](const Point&, const Matrix& u) -> Matrix {
    return -2.0 * (*covp) * u;
  };
  double inv_m = 1.0 / double(samples);
  for (long i = 0; i < samples; ++i) {
    Component comp;
    comp.value = [asp, i, inv_m](const Point& x) {
      double t = asp->row(i).dot(x.value.col(0));
      return -t * t * inv_m;
    };
    comp.egrad = [asp, i, inv_m](const Point& x) -> Matrix {
      double t = asp->row(i).dot(x.value.col(0));
      return -2.0 * inv_m * t * asp->row(i).transpose();
    };
    inst.objective.components.push_back(std::move(comp));
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  inst.certificate =
      Certificate{-es.eigenvalues()(n - 1), "negated top covariance eigenvalue"};
  inst.data["principal"] = es.eigenvectors().col(n - 1);
  inst.data["cov"] = cov;
  return inst;
}

}  // namespace maniopt
