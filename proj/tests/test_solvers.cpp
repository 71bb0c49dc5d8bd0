#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "maniopt/problems.hpp"
#include "maniopt/rng.hpp"
#include "maniopt/solvers.hpp"

using namespace maniopt;

namespace {

Point start_of(const ProblemInstance& p, std::uint64_t seed) {
  Rng rng(seed);
  return p.manifold.rand_point(rng);
}

bool traces_identical(const std::vector<TraceRecord>& a,
                      const std::vector<TraceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].iter != b[i].iter) return false;
    if (a[i].f != b[i].f) return false;
    if (a[i].gradnorm != b[i].gradnorm) return false;
    if (a[i].step != b[i].step) return false;
    if (a[i].aux != b[i].aux) return false;
  }
  return true;
}

void check_trace_hygiene(const SolveResult& r) {
  REQUIRE(!r.trace.empty());
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].iter == int(i));
    CHECK(std::isfinite(r.trace[i].f));
    CHECK(std::isfinite(r.trace[i].gradnorm));
    CHECK(std::isfinite(r.trace[i].step));
    CHECK(std::isfinite(r.trace[i].aux));
  }
}

Matrix colvec(std::initializer_list<double> xs) {
  Matrix m((long)xs.size(), 1);
  long i = 0;
  for (double v : xs) m(i++, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("option validation rejects out-of-range values") {
  SolverOptions o;
  CHECK_NOTHROW(validate_options(o));
  SolverOptions bad = o;
  bad.ls_rho = 1.5;
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
  bad = o;
  bad.ls_delta = 1.0;
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
  bad = o;
  bad.nm_rho = -0.1;
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
  bad = o;
  bad.bb_variant = 3;
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
  bad = o;
  bad.cg_beta = "hs";
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
  bad = o;
  bad.max_iter = 0;
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
  bad = o;
  bad.wolfe_c2 = 1e-5;  // must stay above c1
  CHECK_THROWS_AS(validate_options(bad), InvalidArgument);
}

TEST_CASE("nonmonotone reference value follows the averaged recurrence") {
  NonmonotoneState st;
  st.c = 10.0;
  st.q = 1.0;
  st.rho = 0.85;
  // replay the recurrence by hand
  double fs[] = {8.0, 9.5, 7.0};
  double c = 10.0, q = 1.0;
  for (double f : fs) {
    st = update_nonmonotone(st, f);
    double qn = 0.85 * q + 1.0;
    c = (0.85 * q * c + f) / qn;
    q = qn;
    CHECK(st.c == doctest::Approx(c).epsilon(1e-15));
    CHECK(st.q == doctest::Approx(q).epsilon(1e-15));
  }
}

TEST_CASE("barzilai-borwein steps match the two quotients and are clamped") {
  Matrix s = colvec({1.0, 2.0});
  Matrix v = colvec({0.5, 1.0});
  // <s,s> = 5, <s,v> = 2.5, <v,v> = 1.25
  CHECK(bb_step(s, v, 1, 1e-10, 1e10) == doctest::Approx(2.0));
  CHECK(bb_step(s, v, 2, 1e-10, 1e10) == doctest::Approx(2.0));
  Matrix v2 = colvec({-2.0, 1.0});  // <s,v2> = 0: degenerate
  CHECK(bb_step(s, v2, 1, 1e-10, 123.0) == doctest::Approx(123.0));
  CHECK(bb_step(s, v, 1, 1e-10, 1.5) == doctest::Approx(1.5));
  CHECK(bb_step(s, v, 1, 3.0, 1e10) == doctest::Approx(3.0));
}

TEST_CASE("armijo search satisfies its acceptance inequality") {
  ProblemInstance p = make_eigen(20, 2, 11);
  Point x = start_of(p, 5);
  double f0 = p.value(x);
  Matrix g = p.rgrad(x);
  Matrix xi = -g;
  double slope = dot(g, xi);
  SolverOptions o;

  LineSearchResult ls = armijo_search(p.manifold, p.objective, x, xi, slope,
                                      f0, 1.0, o, p.manifold.default_retraction());
  REQUIRE(ls.ok);
  CHECK(ls.f <= f0 + o.ls_rho * ls.t * slope + 1e-14 * std::abs(f0));
  // the accepted point is the retraction at the accepted step
  Point y = p.manifold.retract(x, ls.t * xi, p.manifold.default_retraction());
  CHECK((y.value - ls.x.value).norm() == 0.0);
  CHECK(ls.f == p.value(ls.x));

  // a huge initial step has to backtrack at least once
  LineSearchResult far = armijo_search(p.manifold, p.objective, x, xi, slope,
                                       f0, 1e8, o, p.manifold.default_retraction());
  REQUIRE(far.ok);
  CHECK(far.t < 1e8);
  CHECK(far.evals > 1);

  CHECK_THROWS_AS(armijo_search(p.manifold, p.objective, x, xi, 1.0, f0, 1.0,
                                o, p.manifold.default_retraction()),
                  InvalidArgument);
}

TEST_CASE("wolfe search output satisfies both conditions") {
  ProblemInstance p = make_eigen(16, 2, 3);
  Point x = start_of(p, 9);
  double f0 = p.value(x);
  Matrix g = p.rgrad(x);
  Matrix xi = -g;
  double slope0 = dot(g, xi);
  SolverOptions o;
  RetractionScheme rs = p.manifold.default_retraction();

  LineSearchResult ls = wolfe_search(p.manifold, p.objective, x, xi, f0,
                                     slope0, o, rs);
  REQUIRE(ls.ok);
  CHECK(ls.f <= f0 + o.wolfe_c1 * ls.t * slope0 + 1e-12 * std::abs(f0));

  auto phi = [&](double t) {
    return p.value(p.manifold.retract(x, t * xi, rs));
  };
  double h = 1e-7 * std::max(ls.t, 1.0);
  double dphi = (phi(ls.t + h) - phi(ls.t - h)) / (2.0 * h);
  CHECK(dphi >= o.wolfe_c2 * slope0 - 1e-6 * std::abs(slope0));
}

TEST_CASE("truncated cg solves the interior case to the newton point") {
  Matrix g = colvec({2.0, 1.0});
  auto hess = [](const Matrix& v) {
    Matrix out = v;
    out(0, 0) *= 2.0;
    return out;
  };
  TcgResult r = truncated_cg(g, hess, 100.0, 0.1, 50);
  CHECK(!r.hit_boundary);
  CHECK(r.xi(0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(r.xi(1, 0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(r.reason == "residual");
}

TEST_CASE("truncated cg stops on the trust region boundary") {
  Matrix g = colvec({2.0, 1.0});
  auto hess = [](const Matrix& v) {
    Matrix out = v;
    out(0, 0) *= 2.0;
    return out;
  };
  TcgResult r = truncated_cg(g, hess, 0.5, 0.1, 50);
  CHECK(r.hit_boundary);
  CHECK(r.xi.norm() == doctest::Approx(0.5).epsilon(1e-12));
  // the boundary step still decreases the model
  double model = dot(g, r.xi) + 0.5 * dot(r.xi, hess(r.xi));
  CHECK(model < 0.0);
}

TEST_CASE("truncated cg follows negative curvature to the boundary") {
  Matrix g = colvec({1.0, 1.0});
  auto hess = [](const Matrix& v) {
    Matrix out = v;
    out(1, 0) *= -1.0;
    return out;
  };
  // first direction -g has curvature exactly zero
  TcgResult r = truncated_cg(g, hess, 2.0, 0.1, 50);
  CHECK(r.hit_boundary);
  CHECK(r.reason == "negative curvature");
  CHECK(r.xi.norm() == doctest::Approx(2.0).epsilon(1e-12));
  double model = dot(g, r.xi) + 0.5 * dot(r.xi, hess(r.xi));
  CHECK(model < 0.0);
}

TEST_CASE("modified cg matches a dense solve on a definite system") {
  Matrix g = colvec({1.0, -2.0, 0.5});
  auto hess = [](const Matrix& v) {
    Matrix out = v;
    out(0, 0) *= 3.0;
    out(1, 0) *= 2.0;
    out(2, 0) *= 1.5;
    return out;
  };
  McgResult r = modified_cg(g, hess, 1e-10, 1.5, 0.1, 50);
  CHECK(!r.negative_curvature);
  CHECK(!r.small_curvature);
  CHECK(r.d.norm() == 0.0);
  // the default exit rule is the capped relative residual
  CHECK((hess(r.xi) + g).norm() <= 0.1 * g.norm() * (1.0 + 1e-12));

  McgResult tight = modified_cg(g, hess, 1e-10, 1.5, 1e-12, 50);
  CHECK(tight.xi(0, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-8));
  CHECK(tight.xi(1, 0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(tight.xi(2, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("modified cg exits along decisively negative curvature") {
  Matrix g = colvec({1.0, 0.3});
  auto hess = [](const Matrix& v) {
    Matrix out = v;
    out(1, 0) *= -1.0;
    return out;
  };
  McgResult r = modified_cg(g, hess, 1e-10, 1.5, 0.1, 50);
  CHECK(r.negative_curvature);
  CHECK(r.d.norm() > 0.0);
  CHECK(dot(r.d, hess(r.d)) < 0.0);
  // sigma_est = |<d, H d>| / <d, d>
  CHECK(r.sigma_est ==
        doctest::Approx(std::abs(dot(r.d, hess(r.d))) / dot(r.d, r.d))
            .epsilon(1e-10));
  // xi = s + tau d with tau = <d, g> / <d, H d>
  double tau = dot(r.d, g) / dot(r.d, hess(r.d));
  CHECK((r.xi - (r.s + tau * r.d)).norm() <= 1e-12);
}

TEST_CASE("modified cg first-step curvature exit returns steepest descent") {
  Matrix g = colvec({1.0, 1.0});
  auto hess = [](const Matrix& v) {
    Matrix out = v;
    out(1, 0) *= -1.0;  // curvature along -g is exactly zero
    return out;
  };
  McgResult r = modified_cg(g, hess, 1e-10, 1.5, 0.1, 50);
  CHECK(r.small_curvature);
  CHECK((r.s + g).norm() <= 1e-14);
  CHECK(r.d.norm() == 0.0);
  CHECK((r.xi + g).norm() <= 1e-14);
}

TEST_CASE("dense bfgs update enforces the secant equation") {
  Rng rng(77);
  long d = 6;
  Matrix a(d, d);
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) a(i, j) = rng.normal();
  Matrix b = a * a.transpose() + 0.5 * Matrix::Identity(d, d);
  Vector s(d), y(d);
  for (long i = 0; i < d; ++i) s(i) = rng.normal();
  y = b * s + 0.3 * s;  // guarantees <y, s> > 0
  Matrix bn = rbfgs_update(b, s, y);
  CHECK((bn * s - y).norm() <= 1e-10 * y.norm());
  CHECK((bn - bn.transpose()).norm() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(bn);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  Vector y_bad = -y;
  CHECK_THROWS_AS(rbfgs_update(b, s, y_bad), InvalidArgument);
}

TEST_CASE("gradient descent reaches the eigenvalue certificate") {
  ProblemInstance p = make_eigen(30, 3, 21);
  Point x0 = start_of(p, 4);
  SolverOptions o;
  o.max_iter = 2000;
  SolveResult r = solve_rgd(p, x0, o);
  CHECK(r.status == SolveStatus::GradTol);
  CHECK(r.gradnorm <= o.grad_tol);
  REQUIRE(p.certificate.has_value());
  CHECK(std::abs(r.f - p.certificate->value) <= 1e-8 * std::max(1.0, std::abs(p.certificate->value)));
  check_trace_hygiene(r);

  // the averaged reference decreases strictly and dominates the value
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    CHECK(r.trace[k].aux < r.trace[k - 1].aux);
    CHECK(r.trace[k].f <= r.trace[k].aux + 1e-12 * std::abs(r.trace[k].aux));
  }
}

TEST_CASE("gradient descent traces are byte-identical across reruns") {
  ProblemInstance p = make_eigen(25, 2, 33);
  Point x0 = start_of(p, 8);
  SolverOptions o;
  o.max_iter = 300;
  SolveResult a = solve_rgd(p, x0, o);
  SolveResult b = solve_rgd(p, x0, o);
  CHECK(traces_identical(a.trace, b.trace));
  CHECK((a.x.value - b.x.value).norm() == 0.0);
}

TEST_CASE("conjugate gradient with zero beta reproduces gradient descent") {
  ProblemInstance p = make_eigen(25, 2, 13);
  Point x0 = start_of(p, 2);
  SolverOptions o;
  o.max_iter = 400;
  SolveResult gd = solve_rgd(p, x0, o);
  SolverOptions oz = o;
  oz.cg_beta = "zero";
  SolveResult cg0 = solve_rcg(p, x0, oz);
  CHECK(traces_identical(gd.trace, cg0.trace));
  CHECK((gd.x.value - cg0.x.value).norm() == 0.0);
}

TEST_CASE("conjugate gradient converges with both direction rules") {
  ProblemInstance p = make_eigen(30, 3, 17);
  Point x0 = start_of(p, 6);
  for (const char* rule : {"prp", "fr"}) {
    CAPTURE(rule);
    SolverOptions o;
    o.max_iter = 3000;
    o.cg_beta = rule;
    SolveResult r = solve_rcg(p, x0, o);
    CHECK(r.status == SolveStatus::GradTol);
    CHECK(std::abs(r.f - p.certificate->value) <= 1e-8);
    check_trace_hygiene(r);
  }
}

TEST_CASE("trust region respects the radius cap and rejected steps keep the iterate") {
  ProblemInstance p = make_eigen(30, 3, 29);
  Point x0 = start_of(p, 12);
  SolverOptions o;
  o.max_iter = 500;
  SolveResult r = solve_rtr(p, x0, o);
  CHECK(r.status == SolveStatus::GradTol);
  CHECK(std::abs(r.f - p.certificate->value) <= 1e-8);
  check_trace_hygiene(r);
  double cap = 10.0 * x0.value.norm();
  for (std::size_t k = 0; k < r.trace.size(); ++k)
    CHECK(r.trace[k].aux <= cap * (1.0 + 1e-12));
  // monotone objective along accepted iterates
  for (std::size_t k = 1; k < r.trace.size(); ++k)
    CHECK(r.trace[k].f <= r.trace[k - 1].f + 1e-12 * std::abs(r.trace[k - 1].f));
}

TEST_CASE("regularized newton converges fast on the eigenvalue problem") {
  ProblemInstance p = make_eigen(30, 3, 41);
  Point x0 = start_of(p, 3);
  SolverOptions o;
  o.max_iter = 100;
  SolveResult r = solve_arnt(p, x0, o);
  CHECK(r.status == SolveStatus::GradTol);
  CHECK(r.iterations <= 60);
  CHECK(std::abs(r.f - p.certificate->value) <= 1e-8);
  check_trace_hygiene(r);
}

TEST_CASE("bfgs dense mode satisfies gradient tolerance and records the mode") {
  ProblemInstance p = make_eigen(40, 1, 55);
  Point x0 = start_of(p, 7);
  SolverOptions o;
  o.max_iter = 500;
  SolveResult r = solve_rbfgs(p, x0, o);
  CHECK(r.status == SolveStatus::GradTol);
  CHECK(std::abs(r.f - p.certificate->value) <= 1e-8);
  REQUIRE(r.stats.count("dense"));
  CHECK(r.stats.at("dense") == 1.0);
  check_trace_hygiene(r);
}

TEST_CASE("bfgs limited-memory mode engages above the dense cap") {
  ProblemInstance p = make_eigen(40, 1, 55);
  Point x0 = start_of(p, 7);
  SolverOptions o;
  o.max_iter = 500;
  o.bfgs_dense_dim_cap = 10;  // force the two-loop recursion
  SolveResult r = solve_rbfgs(p, x0, o);
  CHECK(r.status == SolveStatus::GradTol);
  CHECK(std::abs(r.f - p.certificate->value) <= 1e-8);
  REQUIRE(r.stats.count("dense"));
  CHECK(r.stats.at("dense") == 0.0);
}

TEST_CASE("secant surrogate tracks the exact-hessian solver on the condensate") {
  ProblemInstance p = make_bec(40, 10.0, 61);
  REQUIRE(p.objective.split.has_value());
  Point x0 = start_of(p, 14);
  SolverOptions o;
  o.max_iter = 300;
  o.grad_tol = 1e-5;
  SolveResult lm = solve_sqn(p, x0, o, SqnMode::SecantLm);
  CHECK(lm.status == SolveStatus::GradTol);
  REQUIRE(lm.stats.count("sqn_mode"));
  CHECK(lm.stats.at("sqn_mode") == 0.0);
  SolveResult newton = solve_arnt(p, x0, o);
  REQUIRE(newton.status == SolveStatus::GradTol);
  CHECK(std::abs(lm.f - newton.f) <= 1e-8 * std::max(1.0, std::abs(newton.f)));
  check_trace_hygiene(lm);
}

// quadratic plus a quartic coupling through a rank-3 operator, so the
// expensive curvature fits entirely inside the default sketch
static ProblemInstance make_lowrank_split(int n, int r, double c,
                                          std::uint64_t seed) {
  ProblemInstance p{Manifold::sphere(n)};
  p.name = "lowrank_split";
  p.seed = seed;
  Rng rng(seed);
  Matrix a0(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) a0(i, j) = rng.normal();
  Matrix a = 0.5 * (a0 + a0.transpose());
  Matrix v(n, r);
  for (long j = 0; j < r; ++j)
    for (long i = 0; i < n; ++i) v(i, j) = rng.normal();
  Matrix b = v * v.transpose() / static_cast<double>(n);
  p.objective.value = [a, b, c](const Point& x) {
    double q = (x.value.transpose() * b * x.value)(0, 0);
    return 0.5 * (x.value.transpose() * a * x.value)(0, 0) + 0.25 * c * q * q;
  };
  p.objective.egrad = [a, b, c](const Point& x) -> Matrix {
    double q = (x.value.transpose() * b * x.value)(0, 0);
    return a * x.value + c * q * (b * x.value);
  };
  p.objective.ehess_vec = [a, b, c](const Point& x, const Matrix& u) -> Matrix {
    double q = (x.value.transpose() * b * x.value)(0, 0);
    Matrix bx = b * x.value;
    return a * u + c * (q * (b * u) + 2.0 * bx * (bx.transpose() * u));
  };
  HessianSplit split;
  split.cheap_hess_vec = [a](const Point&, const Matrix& u) -> Matrix {
    return a * u;
  };
  split.expensive_egrad = [b, c](const Point& x) -> Matrix {
    double q = (x.value.transpose() * b * x.value)(0, 0);
    return c * q * (b * x.value);
  };
  split.expensive_hess_vec = [b, c](const Point& x,
                                    const Matrix& u) -> Matrix {
    double q = (x.value.transpose() * b * x.value)(0, 0);
    Matrix bx = b * x.value;
    return c * (q * (b * u) + 2.0 * bx * (bx.transpose() * u));
  };
  p.objective.split = split;
  return p;
}

TEST_CASE("low-rank sketch drives both structured surrogates to tolerance") {
  ProblemInstance p = make_lowrank_split(30, 3, 5.0, 17);
  Point x0 = start_of(p, 14);
  SolverOptions o;
  o.max_iter = 200;
  SolveResult ny = solve_sqn(p, x0, o, SqnMode::Nystrom);
  CHECK(ny.status == SolveStatus::GradTol);
  CHECK(ny.stats.at("sqn_mode") == 1.0);
  SolveResult lm = solve_sqn(p, x0, o, SqnMode::SecantLm);
  CHECK(lm.status == SolveStatus::GradTol);
  // both surrogates land on the same minimizer value
  CHECK(std::abs(lm.f - ny.f) <= 1e-6 * std::max(1.0, std::abs(lm.f)));
  check_trace_hygiene(ny);
}

TEST_CASE("variance reduction cancels the correction at the epoch anchor") {
  ProblemInstance p = make_pca_stream(10, 60, 71);
  Point x0 = start_of(p, 5);
  SolverOptions o;
  o.svrg_epochs = 20;
  o.svrg_step = 5e-2;
  SolveResult r = solve_rsvrg(p, x0, o);
  REQUIRE(r.stats.count("anchor_residual_max"));
  CHECK(r.stats.at("anchor_residual_max") == 0.0);
  double g0 = r.trace.front().gradnorm;
  CHECK(r.gradnorm < 0.5 * g0);
  check_trace_hygiene(r);
}

TEST_CASE("proximal subproblem with a vanishing nonsmooth term is one newton step") {
  Manifold m = Manifold::sphere(8);
  Rng rng(91);
  Point x = m.rand_point(rng);
  Matrix g = m.project(x, Matrix::Ones(8, 1));
  Nonsmooth none;
  none.value = [](const Matrix&) { return 0.0; };
  none.prox = [](const Matrix& z, double) { return z; };
  none.prox_jacobian_diag = [](const Matrix& z, double) {
    return Matrix::Ones(z.rows(), z.cols());
  };
  double t = 1e-2;
  ManpgSubResult sub = manpg_subproblem(m, x, g, none, t, 1e-12, 50, Vector());
  CHECK(sub.converged);
  CHECK(sub.iterations <= 2);
  CHECK(!sub.used_fallback);
  CHECK((sub.d + t * g).norm() <= 1e-10 * std::max(1.0, g.norm()));
}

TEST_CASE("proximal gradient descends the composite objective monotonically") {
  ProblemInstance p = make_spca(40, 20, 4, 0.5, 83);
  REQUIRE(p.objective.has_nonsmooth());
  Point x0 = start_of(p, 19);
  SolverOptions o;
  o.max_iter = 400;
  o.grad_tol = 1e-7;
  SolveResult r = solve_manpg(p, x0, o);
  CHECK((r.status == SolveStatus::GradTol || r.status == SolveStatus::MaxIter));
  for (std::size_t k = 1; k < r.trace.size(); ++k)
    CHECK(r.trace[k].f <= r.trace[k - 1].f + 1e-10 * std::abs(r.trace[k - 1].f));
  REQUIRE(r.stats.count("subproblem_residual_max"));
  CHECK(r.stats.at("subproblem_residual_max") <= 1e-10);
  check_trace_hygiene(r);
}

TEST_CASE("mismatched transport and retraction pairings are rejected") {
  ProblemInstance p = make_eigen(12, 2, 5);
  Point x0 = start_of(p, 1);
  SolverOptions o;
  o.retraction = RetractionScheme::Polar;
  o.transport = TransportScheme::DiffCayley;
  CHECK_THROWS_AS(solve_rcg(p, x0, o), InvalidArgument);
  CHECK_THROWS_AS(solve_rbfgs(p, x0, o), InvalidArgument);
  SolverOptions o2;
  o2.retraction = RetractionScheme::Cayley;
  o2.transport = TransportScheme::DiffQr;
  CHECK_THROWS_AS(solve_rcg(p, x0, o2), InvalidArgument);
}

TEST_CASE("a lying gradient produces a line search failure status") {
  Manifold m = Manifold::sphere(6);
  Vector c = Vector::LinSpaced(6, 1.0, 2.0);
  ProblemInstance p{m};
  p.name = "liar";
  p.objective.value = [c](const Point& x) { return c.dot(x.value.col(0)); };
  p.objective.egrad = [c](const Point&) { return Matrix(-c); };
  Rng rng(123);
  Point x0 = m.rand_point(rng);
  SolverOptions o;
  SolveResult r = solve_rgd(p, x0, o);
  CHECK(r.status == SolveStatus::LineSearchFail);
}

TEST_CASE("iteration budget exhaustion reports max_iter") {
  ProblemInstance p = make_eigen(20, 2, 9);
  Point x0 = start_of(p, 22);
  SolverOptions o;
  o.max_iter = 3;
  o.grad_tol = 1e-18;
  SolveResult r = solve_rgd(p, x0, o);
  CHECK(r.status == SolveStatus::MaxIter);
  CHECK(r.iterations == 3);
}
