#include <cmath>
#include <deque>
#include <memory>

#include "maniopt/rng.hpp"
#include "solver_util.hpp"

namespace maniopt {
namespace {

// Hessian surrogate used inside the regularized Newton model. update(x) is
// called once per outer iteration before any apply(x, u).
struct HessSurrogate {
  std::function<void(const Point&)> update;
  std::function<Matrix(const Point&, const Matrix&)> apply;
};

SolveResult regularized_newton_loop(const ProblemInstance& p, const Point& x0,
                                    const SolverOptions& o,
                                    const HessSurrogate& surrogate,
                                    std::map<std::string, double> extra_stats) {
  validate_options(o);
  const Manifold& m = p.manifold;
  RetractionScheme rs = detail::pick_retraction(m, o);
  auto t0 = detail::Clock::now();

  SolveResult res;
  res.x = detail::checked_start(p, x0);
  res.f = p.value(res.x);
  Matrix eg = p.objective.egrad(res.x);
  Matrix g = m.egrad_to_rgrad(res.x, eg);
  res.gradnorm = g.norm();

  double sigma = o.arnt_sigma0;
  int max_inner = detail::inner_cap(o.mcg_max_inner, m.intrinsic_dim());
  NonmonotoneState nm{res.f, 1.0, o.nm_rho};

  detail::push_trace(res, 0, res.f, res.gradnorm, 0.0, sigma, t0);
  double rejected = 0, gradient_fallbacks = 0;
  int stalled = 0;

  for (int k = 1; k <= o.max_iter; ++k) {
    if (res.gradnorm <= o.grad_tol) {
      res.status = SolveStatus::GradTol;
      break;
    }

    if (surrogate.update) surrogate.update(res.x);
    auto model_hess = [&](const Matrix& u) -> Matrix {
      Matrix hu = m.ehess_to_rhess(res.x, eg, surrogate.apply(res.x, u), u);
      return hu + sigma * u;
    };

    McgResult sub = modified_cg(g, model_hess, o.mcg_eps, o.mcg_theta,
                                o.mcg_tau, max_inner);
    Matrix xi = sub.xi;
    double slope = dot(g, xi);
    if (!(slope < 0) || !std::isfinite(slope)) {
      xi = -g;
      slope = -dot(g, g);
      gradient_fallbacks += 1;
    }
    double reference = o.arnt_nonmonotone ? nm.c : res.f;
    LineSearchResult ls =
        armijo_search(m, p.objective, res.x, xi, slope, reference, 1.0, o, rs);
    if (!ls.ok) {
      res.status = SolveStatus::LineSearchFail;
      break;
    }

    // Regularized quadratic model on the ambient displacement. Adding the
    // same offset to both reductions keeps the ratio meaningful once the
    // decrease falls to rounding noise.
    Matrix e = ls.x.value - res.x.value;
    double model = dot(eg, e) + 0.5 * dot(surrogate.apply(res.x, e), e) +
                   0.5 * sigma * dot(e, e);
    double reg = 1e-13 * std::max(1.0, std::abs(res.f));
    double rho = -1.0;
    if (std::isfinite(model) && model < reg)
      rho = (res.f - ls.f + reg) / (-model + reg);

    if (rho >= o.arnt_eta2) {
      sigma *= o.arnt_gamma0;
    } else if (rho >= o.arnt_eta1) {
      sigma *= 0.5 * (o.arnt_gamma0 + o.arnt_gamma1);
    } else {
      sigma *= 0.5 * (o.arnt_gamma1 + o.arnt_gamma2);
    }
    sigma = std::min(std::max(sigma, o.arnt_sigma_min), o.arnt_sigma_max);

    res.iterations = k;
    if (rho >= o.arnt_eta1) {
      bool strict = ls.f < res.f;
      res.x = std::move(ls.x);
      res.f = ls.f;
      eg = p.objective.egrad(res.x);
      g = m.egrad_to_rgrad(res.x, eg);
      res.gradnorm = g.norm();
      nm = update_nonmonotone(nm, res.f);
      detail::push_trace(res, k, res.f, res.gradnorm, ls.t, sigma, t0);
      stalled = strict ? 0 : stalled + 1;
      if (stalled >= 5) {
        // accepted steps are no longer lowering f in floating point
        res.status = SolveStatus::LineSearchFail;
        break;
      }
    } else {
      rejected += 1;
      detail::push_trace(res, k, res.f, res.gradnorm, 0.0, sigma, t0);
    }
  }

  if ((res.status == SolveStatus::MaxIter ||
       res.status == SolveStatus::LineSearchFail) &&
      res.gradnorm <= o.grad_tol)
    res.status = SolveStatus::GradTol;
  res.stats["rejected_steps"] = rejected;
  res.stats["gradient_fallbacks"] = gradient_fallbacks;
  for (const auto& [k, v] : extra_stats) res.stats[k] = v;
  return res;
}

struct SecantPair {
  Matrix s, y, w;
  double delta = 0.0;
  bool usable = false;
};

struct SqnState {
  std::deque<SecantPair> pairs;
  Matrix prev_value, prev_eg;
  bool have_prev = false;
  double gamma = 1.0;
  Matrix probes, hprobes, gram_pinv;
  std::uint64_t probe_round = 0;
  double skipped = 0;
};

Matrix apply_secant(const SqnState& st, const Matrix& u) {
  Matrix out = st.gamma * u;
  for (const auto& pr : st.pairs) {
    if (!pr.usable) continue;
    out += pr.w * (dot(pr.w, u) / pr.delta);
  }
  return out;
}

}  // namespace

SolveResult solve_arnt(const ProblemInstance& p, const Point& x0,
                       const SolverOptions& o) {
  bool used_fd = false;
  auto ehess = detail::make_ehess_op(p, &used_fd);
  HessSurrogate s;
  s.apply = ehess;
  return regularized_newton_loop(p, x0, o, s,
                                 {{"hess_fd", used_fd ? 1.0 : 0.0}});
}

SolveResult solve_sqn(const ProblemInstance& p, const Point& x0,
                      const SolverOptions& o, SqnMode mode) {
  if (!p.objective.split.has_value())
    throw InvalidArgument("solve_sqn needs a HessianSplit on the objective");
  const HessianSplit& split = *p.objective.split;
  if (!split.cheap_hess_vec || !split.expensive_egrad)
    throw InvalidArgument(
        "HessianSplit must provide cheap_hess_vec and expensive_egrad");
  if (mode == SqnMode::Nystrom && !split.expensive_hess_vec)
    throw InvalidArgument("sketched surrogate needs expensive_hess_vec");

  auto st = std::make_shared<SqnState>();
  HessSurrogate s;

  if (mode == SqnMode::SecantLm) {
    int memory = o.lbfgs_memory;
    double skip_tol = o.curvature_skip > 0 ? o.curvature_skip : 1e-12;
    s.update = [st, &split, memory, skip_tol](const Point& x) {
      Matrix eg = split.expensive_egrad(x);
      if (st->have_prev) {
        SecantPair pr;
        pr.s = x.value - st->prev_value;
        pr.y = eg - st->prev_eg;
        // displacements at rounding scale produce difference quotients that
        // are pure noise; keep the memory as it is rather than admit them
        double step_floor = 1e-13 * (1.0 + x.value.norm());
        if (pr.s.norm() > step_floor) {
          st->pairs.push_back(std::move(pr));
          while (static_cast<int>(st->pairs.size()) > memory)
            st->pairs.pop_front();
          double sy = dot(st->pairs.back().s, st->pairs.back().y);
          double ss = dot(st->pairs.back().s, st->pairs.back().s);
          st->gamma = ss > 0 ? std::abs(sy) / ss : 1.0;
          if (!(st->gamma > 1e-8)) st->gamma = 1e-8;
          if (st->gamma > 1e8) st->gamma = 1e8;
          // rebuild the symmetric rank-one terms in insertion order
          SqnState partial;
          partial.gamma = st->gamma;
          for (auto& q : st->pairs) {
            q.w = q.y - apply_secant(partial, q.s);
            q.delta = dot(q.w, q.s);
            q.usable =
                std::abs(q.delta) >= skip_tol * q.w.norm() * q.s.norm() &&
                q.w.norm() > 0;
            if (!q.usable) st->skipped += 1;
            partial.pairs.push_back(q);
          }
        }
      }
      st->prev_value = x.value;
      st->prev_eg = std::move(eg);
      st->have_prev = true;
    };
    s.apply = [st, &split](const Point& x, const Matrix& u) -> Matrix {
      return split.cheap_hess_vec(x, u) + apply_secant(*st, u);
    };
  } else {
    int rank = o.sketch_rank;
    std::uint64_t seed = o.seed;
    s.update = [st, &split, rank, seed](const Point& x) {
      Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (st->probe_round + 1)));
      st->probe_round += 1;
      long amb = x.value.size();
      st->probes.resize(amb, rank);
      st->hprobes.resize(amb, rank);
      for (int j = 0; j < rank; ++j) {
        Matrix w(x.value.rows(), x.value.cols());
        for (long c = 0; c < w.cols(); ++c)
          for (long r = 0; r < w.rows(); ++r) w(r, c) = rng.normal();
        Matrix hw = split.expensive_hess_vec(x, w);
        st->probes.col(j) = Eigen::Map<const Vector>(w.data(), amb);
        st->hprobes.col(j) = Eigen::Map<const Vector>(hw.data(), amb);
      }
      Matrix gram = st->probes.transpose() * st->hprobes;
      gram = 0.5 * (gram + gram.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
      Vector ev = es.eigenvalues();
      double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
      Vector inv = Vector::Zero(ev.size());
      for (long i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i)) > cut) inv(i) = 1.0 / ev(i);
      st->gram_pinv = es.eigenvectors() * inv.asDiagonal() *
                      es.eigenvectors().transpose();
    };
    s.apply = [st, &split](const Point& x, const Matrix& u) -> Matrix {
      Matrix out = split.cheap_hess_vec(x, u);
      Eigen::Map<const Vector> uv(u.data(), u.size());
      Vector z = st->hprobes.transpose() * uv;
      Vector c = st->gram_pinv * z;
      Vector add = st->hprobes * c;
      out += Eigen::Map<const Matrix>(add.data(), u.rows(), u.cols());
      return out;
    };
  }

  SolveResult res = regularized_newton_loop(
      p, x0, o, s, {{"sqn_mode", mode == SqnMode::SecantLm ? 0.0 : 1.0}});
  res.stats["secant_skipped"] = st->skipped;
  return res;
}

}  // namespace maniopt
