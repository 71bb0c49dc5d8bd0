#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "maniopt/acceptance.hpp"
#include "maniopt/diagnostics.hpp"
#include "maniopt/io.hpp"
#include "maniopt/problems.hpp"
#include "maniopt/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace maniopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr const char* kVersion = "0.1.0";

// MANIOPT_THREADS caps how many runs execute concurrently. Eigen itself is
// pinned to one thread so that results never depend on the machine's core
// count; only the scheduling of independent runs does.
int run_thread_cap() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("MANIOPT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) n = v;
  }
  return n;
}

double dim_of(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

ProblemInstance instance_from_json(const json& spec) {
  std::string name = spec.at("name").get<std::string>();
  std::uint64_t seed = spec.contains("seed")
                           ? spec.at("seed").get<std::uint64_t>()
                           : 0;
  if (spec.contains("file")) {
    std::string path = spec.at("file").get<std::string>();
    if (!fs::exists(path))
      throw InvalidArgument("instance file not found: " + path);
    Matrix a = read_matrix_market(path);
    if (name == "eigen") return make_eigen_from(a, long(dim_of(spec, "p", 5)));
    if (name == "maxcut")
      return make_maxcut_from(a, long(dim_of(spec, "p", 6)));
    if (name == "grothendieck")
      return make_grothendieck_from(a, long(dim_of(spec, "d", 1)));
    throw InvalidArgument("problem '" + name + "' cannot be built from a file");
  }
  if (name == "eigen")
    return make_eigen(long(dim_of(spec, "n", 100)), long(dim_of(spec, "p", 5)),
                      seed);
  if (name == "maxcut")
    return make_maxcut(long(dim_of(spec, "n", 12)), long(dim_of(spec, "p", 6)),
                       seed, dim_of(spec, "edge_prob", 0.5));
  if (name == "ncm")
    return make_ncm(long(dim_of(spec, "n", 20)), long(dim_of(spec, "p", 5)),
                    seed, dim_of(spec, "weighted", 0) != 0);
  if (name == "phase")
    return make_phase_retrieval(long(dim_of(spec, "m", 60)),
                                long(dim_of(spec, "n", 15)), seed);
  if (name == "bec")
    return make_bec(long(dim_of(spec, "n", 64)), dim_of(spec, "beta", 100.0),
                    seed);
  if (name == "spca")
    return make_spca(long(dim_of(spec, "m", 50)), long(dim_of(spec, "n", 20)),
                     long(dim_of(spec, "p", 4)), dim_of(spec, "rho", 0.5),
                     seed);
  if (name == "completion")
    return make_completion(long(dim_of(spec, "n1", 40)),
                           long(dim_of(spec, "n2", 40)),
                           long(dim_of(spec, "r", 3)),
                           dim_of(spec, "sample_rate", 0.3), seed);
  if (name == "grothendieck")
    return make_grothendieck(long(dim_of(spec, "n", 8)),
                             long(dim_of(spec, "d", 1)), seed);
  if (name == "pca")
    return make_pca_stream(long(dim_of(spec, "n", 20)),
                           long(dim_of(spec, "samples", 100)), seed);
  throw InvalidArgument("unknown problem name: " + name);
}

SolverOptions options_from_json(const json& j, SolverOptions o) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("max_iter", o.max_iter);
  get("grad_tol", o.grad_tol);
  get("seed", o.seed);
  get("ls_rho", o.ls_rho);
  get("ls_delta", o.ls_delta);
  get("ls_max_backtracks", o.ls_max_backtracks);
  get("nm_rho", o.nm_rho);
  get("bb_min", o.bb_min);
  get("bb_max", o.bb_max);
  get("bb_variant", o.bb_variant);
  get("cg_beta", o.cg_beta);
  get("tr_radius_max", o.tr_radius_max);
  get("tr_radius_init", o.tr_radius_init);
  get("tr_rho_prime", o.tr_rho_prime);
  get("tcg_kappa", o.tcg_kappa);
  get("tcg_max_inner", o.tcg_max_inner);
  get("arnt_sigma0", o.arnt_sigma0);
  get("arnt_nonmonotone", o.arnt_nonmonotone);
  get("mcg_max_inner", o.mcg_max_inner);
  get("wolfe_c1", o.wolfe_c1);
  get("wolfe_c2", o.wolfe_c2);
  get("lbfgs_memory", o.lbfgs_memory);
  get("bfgs_dense_dim_cap", o.bfgs_dense_dim_cap);
  get("sketch_rank", o.sketch_rank);
  get("svrg_epochs", o.svrg_epochs);
  get("svrg_inner", o.svrg_inner);
  get("svrg_step", o.svrg_step);
  get("manpg_t", o.manpg_t);
  get("manpg_subtol", o.manpg_subtol);
  get("manpg_sub_max", o.manpg_sub_max);
  if (j.contains("retraction")) {
    auto rs = parse_retraction(j.at("retraction").get<std::string>());
    if (!rs)
      throw InvalidArgument("unknown retraction: " +
                            j.at("retraction").get<std::string>());
    o.retraction = rs;
  }
  if (j.contains("transport")) {
    auto ts = parse_transport(j.at("transport").get<std::string>());
    if (!ts)
      throw InvalidArgument("unknown transport: " +
                            j.at("transport").get<std::string>());
    o.transport = ts;
  }
  return o;
}

constexpr const char* kSolverNames[] = {"rgd",        "rcg",        "rtr",
                                        "arnt",       "rbfgs",      "sqn_secant",
                                        "sqn_sketch", "rsvrg",      "manpg"};

bool solver_known(const std::string& name) {
  for (const char* s : kSolverNames)
    if (name == s) return true;
  return false;
}

SolveResult dispatch_solver(const std::string& name, const ProblemInstance& p,
                            const Point& x0, const SolverOptions& o) {
  if (name == "rgd") return solve_rgd(p, x0, o);
  if (name == "rcg") return solve_rcg(p, x0, o);
  if (name == "rtr") return solve_rtr(p, x0, o);
  if (name == "arnt") return solve_arnt(p, x0, o);
  if (name == "rbfgs") return solve_rbfgs(p, x0, o);
  if (name == "sqn_secant") return solve_sqn(p, x0, o, SqnMode::SecantLm);
  if (name == "sqn_sketch") return solve_sqn(p, x0, o, SqnMode::Nystrom);
  if (name == "rsvrg") return solve_rsvrg(p, x0, o);
  if (name == "manpg") return solve_manpg(p, x0, o);
  throw InvalidArgument("unknown solver name: " + name);
}

struct RunTask {
  int problem_idx = 0;
  int solver_idx = 0;
  int rep = 0;
  const ProblemInstance* inst = nullptr;
  std::string solver;
  SolverOptions opts;
  Point x0;
  std::string trace_name;
  std::string label;
  // filled by the worker
  SolveResult result;
  double wall_s = 0.0;
  bool errored = false;
  std::string error;
};

void execute_task(RunTask& t, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  try {
    t.result = dispatch_solver(t.solver, *t.inst, t.x0, t.opts);
    write_trace_csv((fs::path(out_dir) / t.trace_name).string(),
                    t.result.trace);
  } catch (const std::exception& e) {
    t.errored = true;
    t.error = e.what();
  }
  t.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           t0)
                 .count();
}

int cmd_run(const std::string& config_path, std::string out_dir,
            bool out_flag_given) {
  json cfg;
  try {
    cfg = json::parse(read_text(config_path));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  // Everything the grid needs is validated before any file is touched.
  std::vector<ProblemInstance> instances;
  std::vector<std::pair<std::string, SolverOptions>> solvers;
  std::vector<RunTask> tasks;
  std::uint64_t seed = 0;
  int reps = 1;
  try {
    seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 0;
    reps = cfg.contains("repetitions") ? cfg.at("repetitions").get<int>() : 1;
    if (reps < 1) throw InvalidArgument("repetitions must be at least 1");
    if (!out_flag_given && cfg.contains("out"))
      out_dir = cfg.at("out").get<std::string>();

    const json& plist = cfg.at("problems");
    if (!plist.is_array() || plist.empty())
      throw InvalidArgument("config needs a non-empty 'problems' array");
    for (const auto& spec : plist) instances.push_back(instance_from_json(spec));

    SolverOptions base = cfg.contains("options")
                             ? options_from_json(cfg.at("options"),
                                                 SolverOptions{})
                             : SolverOptions{};
    validate_options(base);
    const json& slist = cfg.at("solvers");
    if (!slist.is_array() || slist.empty())
      throw InvalidArgument("config needs a non-empty 'solvers' array");
    for (const auto& entry : slist) {
      std::string name;
      SolverOptions o = base;
      if (entry.is_string()) {
        name = entry.get<std::string>();
      } else {
        name = entry.at("algorithm").get<std::string>();
        if (entry.contains("options"))
          o = options_from_json(entry.at("options"), base);
      }
      if (!solver_known(name))
        throw InvalidArgument("unknown solver name: " + name);
      validate_options(o);
      solvers.emplace_back(name, o);
    }

    for (int pi = 0; pi < int(instances.size()); ++pi) {
      for (int r = 0; r < reps; ++r) {
        // one start per (problem, repetition), shared by every solver
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(r + 1));
        Point x0 = instances[pi].manifold.rand_point(rng);
        for (int si = 0; si < int(solvers.size()); ++si) {
          RunTask t;
          t.problem_idx = pi;
          t.solver_idx = si;
          t.rep = r;
          t.inst = &instances[pi];
          t.solver = solvers[si].first;
          t.opts = solvers[si].second;
          t.x0 = x0;
          t.trace_name = "p" + std::to_string(pi) + "_" + instances[pi].name +
                         "_s" + std::to_string(si) + "_" + t.solver + "_rep" +
                         std::to_string(r) + "_trace.csv";
          t.label = instances[pi].name + "[" + std::to_string(pi) + "] " +
                    t.solver + " rep " + std::to_string(r);
          tasks.push_back(std::move(t));
        }
      }
    }
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  fs::create_directories(out_dir);
  int cap = std::min<int>(run_thread_cap(), int(tasks.size()));
  if (cap <= 1) {
    for (auto& t : tasks) execute_task(t, out_dir);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < cap; ++w)
      workers.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) break;
          execute_task(tasks[i], out_dir);
        }
      });
    for (auto& w : workers) w.join();
  }

  json summary;
  summary["config"] = cfg;
  summary["environment"] = {{"toolkit_version", kVersion}, {"seed", seed}};
  summary["runs"] = json::array();
  int bad = 0;
  for (const auto& t : tasks) {
    json run;
    run["problem"] = t.inst->name;
    run["problem_index"] = t.problem_idx;
    run["dims"] = t.inst->dims;
    run["solver"] = t.solver;
    run["repetition"] = t.rep;
    run["wall_time_s"] = t.wall_s;
    if (t.errored) {
      run["error"] = t.error;
      std::cerr << "run failed: " << t.label << ": " << t.error << "\n";
      ++bad;
    } else {
      run["f"] = t.result.f;
      run["gradnorm"] = t.result.gradnorm;
      run["status"] = to_string(t.result.status);
      run["iterations"] = t.result.iterations;
      run["trace"] = t.trace_name;
      run["stats"] = t.result.stats;
      if (t.inst->certificate) {
        run["certificate_value"] = t.inst->certificate->value;
        run["certificate_detail"] = t.inst->certificate->detail;
      }
      std::cout << t.label << ": f=" << format_double(t.result.f)
                << " gradnorm=" << format_double(t.result.gradnorm)
                << " iters=" << t.result.iterations
                << " status=" << to_string(t.result.status) << "\n";
      if (t.result.status != SolveStatus::GradTol &&
          t.result.status != SolveStatus::MaxIter) {
        std::cerr << "run did not finish cleanly: " << t.label << ": "
                  << to_string(t.result.status) << "\n";
        ++bad;
      }
    }
    summary["runs"].push_back(run);
  }
  write_text_atomic((fs::path(out_dir) / "summary.json").string(),
                    summary.dump(2) + "\n");
  return bad == 0 ? kExitOk : kExitNumerical;
}

struct CheckCounter {
  int ran = 0;
  int failed = 0;
  json records = json::array();
  void note(const std::string& what, bool ok, const std::string& detail) {
    ++ran;
    if (!ok) ++failed;
    records.push_back({{"check", what}, {"ok", ok}, {"detail", detail}});
    std::cout << (ok ? "ok   " : "FAIL ") << what;
    if (!detail.empty()) std::cout << " " << detail;
    std::cout << "\n";
  }
};

void check_manifold(const Manifold& m, std::uint64_t seed, CheckCounter& cc) {
  Rng rng(seed);
  Point x = m.rand_point(rng);
  Matrix z = m.rand_tangent(x, rng);
  Matrix w(z.rows(), z.cols());
  for (long j = 0; j < w.cols(); ++j)
    for (long i = 0; i < w.rows(); ++i) w(i, j) = rng.normal();

  Matrix pw = m.project(x, w);
  double idem = (m.project(x, pw) - pw).norm() / std::max(1.0, pw.norm());
  cc.note(m.name() + " projection idempotent",
          idem <= 1e-10, "residual=" + format_double(idem));
  double self_adj = std::abs(dot(pw, z) - dot(w, m.project(x, z))) /
                    std::max(1.0, w.norm() * z.norm());
  cc.note(m.name() + " projection self-adjoint",
          self_adj <= 1e-10, "residual=" + format_double(self_adj));

  for (auto rs : {RetractionScheme::Exponential, RetractionScheme::Cayley,
                  RetractionScheme::Polar, RetractionScheme::Qr,
                  RetractionScheme::MetricProjection}) {
    if (!m.retraction_applicable(rs)) continue;
    Point at0 = m.retract(x, Matrix::Zero(z.rows(), z.cols()), rs);
    double r0 = (at0.value - x.value).norm() / std::max(1.0, x.value.norm());
    cc.note(m.name() + " retract(" + to_string(rs) + ") fixes the base point",
            r0 <= 1e-12, "residual=" + format_double(r0));
    SlopeReport rig = check_retraction(m, x, z, rs);
    cc.note(m.name() + " retract(" + to_string(rs) + ") rigidity",
            rig.pass && rig.slope >= 1.9,
            "slope=" + format_double(rig.slope));
  }

  for (auto ts : {TransportScheme::ProjectionBased,
                  TransportScheme::Parallelization, TransportScheme::DiffCayley,
                  TransportScheme::DiffPolar, TransportScheme::DiffQr}) {
    if (!m.transport_applicable(ts)) continue;
    RetractionScheme rs = m.default_retraction();
    if (ts == TransportScheme::DiffCayley) rs = RetractionScheme::Cayley;
    if (ts == TransportScheme::DiffPolar) rs = RetractionScheme::Polar;
    if (ts == TransportScheme::DiffQr) rs = RetractionScheme::Qr;
    if (!m.retraction_applicable(rs)) continue;
    Matrix eta = 0.3 * m.rand_tangent(x, rng);
    TransportReport tr = check_transport(m, x, eta, z, ts, rs);
    cc.note(m.name() + " transport(" + to_string(ts) + ")", tr.pass,
            "tangency=" + format_double(tr.tangency_residual) +
                " isometry=" + format_double(tr.isometry_residual));
  }
}

void check_problem(const ProblemInstance& p, std::uint64_t seed,
                   CheckCounter& cc) {
  Rng rng(seed);
  Point x = p.manifold.rand_point(rng);
  Matrix xi = p.manifold.rand_tangent(x, rng);
  RetractionScheme rs = p.manifold.default_retraction();

  SlopeReport gr = check_gradient(p, x, xi, rs);
  cc.note(p.name + " gradient order", gr.pass,
          "slope=" + format_double(gr.slope));
  if (p.objective.has_hess()) {
    SlopeReport hr = check_hessian(p, x, xi, rs);
    if (hr.refused) {
      cc.note(p.name + " hessian order (refused)", true, hr.detail);
    } else {
      cc.note(p.name + " hessian order", hr.pass,
              "slope=" + format_double(hr.slope));
    }
  }
}

int cmd_check(const std::string& manifold_filter,
              const std::string& problem_filter, std::uint64_t seed,
              const std::string& report_path) {
  std::vector<std::pair<std::string, Manifold>> manifolds;
  manifolds.emplace_back("sphere", Manifold::sphere(7));
  manifolds.emplace_back("stiefel", Manifold::stiefel(6, 2));
  manifolds.emplace_back("oblique", Manifold::oblique(3, 5));
  manifolds.emplace_back("grassmann", Manifold::grassmann(6, 2));
  manifolds.emplace_back("fixed_rank", Manifold::fixed_rank(6, 5, 2));
  manifolds.emplace_back("spd", Manifold::spd(4));
  manifolds.emplace_back("fixed_rank_psd", Manifold::fixed_rank_psd(6, 2));
  manifolds.emplace_back(
      "product", Manifold::product({Manifold::sphere(3), Manifold::stiefel(4, 2)}));

  std::vector<std::pair<std::string, ProblemInstance>> problems;
  problems.emplace_back("eigen", make_eigen(12, 3, seed));
  problems.emplace_back("maxcut", make_maxcut(8, 3, seed));
  problems.emplace_back("ncm", make_ncm(8, 3, seed, true));
  problems.emplace_back("phase", make_phase_retrieval(12, 4, seed));
  problems.emplace_back("bec", make_bec(16, 100.0, seed));
  problems.emplace_back("spca", make_spca(20, 10, 3, 0.5, seed));
  problems.emplace_back("completion", make_completion(10, 8, 2, 0.5, seed));
  problems.emplace_back("grothendieck", make_grothendieck(8, 2, seed));
  problems.emplace_back("pca", make_pca_stream(8, 20, seed));

  CheckCounter cc;
  bool manifold_mode = problem_filter.empty();
  bool problem_mode = manifold_filter.empty();
  for (const auto& [name, m] : manifolds) {
    if (!manifold_mode) break;
    if (!manifold_filter.empty() && name != manifold_filter) continue;
    check_manifold(m, seed, cc);
  }
  for (const auto& [name, p] : problems) {
    if (!problem_mode) break;
    if (!problem_filter.empty() && name != problem_filter) continue;
    check_problem(p, seed, cc);
  }

  if (cc.ran == 0) {
    std::cerr << "no checks matched the selection\n";
    return kExitUsage;
  }
  json report;
  report["seed"] = seed;
  report["ran"] = cc.ran;
  report["failed"] = cc.failed;
  report["checks"] = cc.records;
  write_text_atomic(report_path, report.dump(2) + "\n");
  std::cout << cc.ran << " checks, " << cc.failed << " failures\n";
  return cc.failed == 0 ? kExitOk : kExitCheckFail;
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir) {
  json spec;
  try {
    spec = json::parse(read_text(spec_path));
  } catch (const std::exception& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::optional<ProblemInstance> built;
  try {
    built.emplace(instance_from_json(spec));
  } catch (const json::exception& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitUsage;
  }
  ProblemInstance& inst = *built;
  fs::path dir(out_dir);
  fs::create_directories(dir);

  json meta;
  meta["name"] = inst.name;
  meta["seed"] = inst.seed;
  meta["dims"] = inst.dims;
  if (inst.certificate) {
    meta["certificate_value"] = inst.certificate->value;
    meta["certificate_detail"] = inst.certificate->detail;
  }
  json files = json::array();
  for (const auto& [key, mat] : inst.data) {
    std::string fname = inst.name + "_" + key + ".mtx";
    if (key == "mask") {
      write_mask((dir / fname).string(), mat);
    } else if (mat.rows() == mat.cols() &&
               (mat - mat.transpose()).norm() <= 1e-14 * (1.0 + mat.norm())) {
      write_matrix_market_symmetric((dir / fname).string(), mat);
    } else {
      write_matrix_market((dir / fname).string(), mat);
    }
    files.push_back(fname);
    std::cout << "wrote " << (dir / fname).string() << "\n";
  }
  meta["files"] = files;
  write_text_atomic((dir / (inst.name + "_meta.json")).string(),
                    meta.dump(2) + "\n");
  std::cout << "wrote " << (dir / (inst.name + "_meta.json")).string() << "\n";
  return kExitOk;
}

// last data row of an iter,f,gradnorm,... trace
bool trace_tail(const std::string& path, std::vector<double>* row) {
  std::istringstream in(read_text(path));
  std::string line, last;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  if (last.empty()) return false;
  row->clear();
  std::istringstream fields(last);
  std::string cell;
  while (std::getline(fields, cell, ',')) row->push_back(std::stod(cell));
  return row->size() >= 3;
}

int cmd_report(const std::string& runs_dir) {
  fs::path dir(runs_dir);
  if (!fs::exists(dir)) {
    std::cerr << "run directory not found: " << runs_dir << "\n";
    return kExitUsage;
  }
  std::vector<fs::path> summaries;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "summary.json")
      summaries.push_back(entry.path());
  std::sort(summaries.begin(), summaries.end());
  if (summaries.empty()) {
    std::cerr << "no summary.json found under " << runs_dir << "\n";
    return kExitUsage;
  }

  std::string md = "# Run report\n";
  std::string csv = "problem,solver,repetition,f,gradnorm,iterations,status,wall_time_s\n";
  for (const auto& spath : summaries) {
    json summary = json::parse(read_text(spath.string()));
    // group rows by problem; every number comes from the run's trace file
    std::map<std::string, std::vector<json>> by_problem;
    for (const auto& run : summary.at("runs")) {
      if (run.contains("error")) continue;
      std::string key = run.at("problem").get<std::string>() + " [" +
                        std::to_string(run.at("problem_index").get<int>()) +
                        "]";
      by_problem[key].push_back(run);
    }
    for (const auto& [prob, runs] : by_problem) {
      md += "\n## " + prob + "\n\n";
      md += "| solver | rep | f | gradnorm | iterations | status | time (s) |\n";
      md += "|---|---|---|---|---|---|---|\n";
      double best_f = std::numeric_limits<double>::infinity();
      std::string best_key;
      std::map<std::string, std::vector<double>> tails;
      for (const auto& run : runs) {
        fs::path tpath =
            spath.parent_path() / run.at("trace").get<std::string>();
        std::vector<double> tail;
        if (!fs::exists(tpath) || !trace_tail(tpath.string(), &tail)) {
          std::cerr << "trace missing or empty: " << tpath << "\n";
          return kExitNumerical;
        }
        std::string key = run.at("solver").get<std::string>() + "#" +
                          std::to_string(run.at("repetition").get<int>());
        tails[key] = tail;
        if (tail[1] < best_f) {
          best_f = tail[1];
          best_key = key;
        }
      }
      for (const auto& run : runs) {
        std::string solver = run.at("solver").get<std::string>();
        int rep = run.at("repetition").get<int>();
        std::string key = solver + "#" + std::to_string(rep);
        const auto& tail = tails[key];
        std::string frep = std::to_string(rep);
        md += "| " + solver + (key == best_key ? " (best)" : "") + " | " +
              frep + " | " + format_double(tail[1]) + " | " +
              format_double(tail[2]) + " | " +
              std::to_string(int(tail[0])) + " | " +
              run.at("status").get<std::string>() + " | " +
              format_double(run.at("wall_time_s").get<double>()) + " |\n";
        csv += run.at("problem").get<std::string>() + "," + solver + "," +
               frep + "," + format_double(tail[1]) + "," +
               format_double(tail[2]) + "," + std::to_string(int(tail[0])) +
               "," + run.at("status").get<std::string>() + "," +
               format_double(run.at("wall_time_s").get<double>()) + "\n";
        fs::path tpath =
            spath.parent_path() / run.at("trace").get<std::string>();
        std::string curve_name = "curve_" +
                                 run.at("trace").get<std::string>();
        write_text_atomic((dir / curve_name).string(),
                          read_text(tpath.string()));
      }
    }
  }
  write_text_atomic((dir / "report.md").string(), md);
  write_text_atomic((dir / "report.csv").string(), csv);
  std::cout << "wrote " << (dir / "report.md").string() << "\n";
  return kExitOk;
}

int cmd_accept(int criterion) {
  auto results = run_acceptance(criterion);
  if (results.empty()) {
    std::cerr << "no acceptance criteria matched\n";
    return kExitUsage;
  }
  bool ok = report_acceptance(results, std::cout);
  return ok ? kExitOk : kExitCheckFail;
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(1);
  CLI::App app{"Riemannian optimization toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "solve a configured problem grid");
  std::string run_config, run_out = "runs";
  run->add_option("--config", run_config, "JSON run configuration")->required();
  auto* run_out_opt = run->add_option("--out", run_out, "output directory");

  auto* check = app.add_subcommand("check", "geometry and derivative checks");
  std::string check_manifold_name, check_problem_name;
  std::string check_report = "check_report.json";
  std::uint64_t check_seed = 7;
  check->add_option("--manifold", check_manifold_name, "restrict to one manifold");
  check->add_option("--problem", check_problem_name, "restrict to one problem");
  check->add_option("--seed", check_seed, "sample seed");
  check->add_option("--report", check_report, "JSON report path");

  auto* gen = app.add_subcommand("gen", "generate a reproducible instance");
  std::string gen_spec, gen_out = "instances";
  gen->add_option("--spec", gen_spec, "JSON instance spec")->required();
  gen->add_option("--out", gen_out, "output directory");

  auto* report = app.add_subcommand("report", "aggregate run outputs");
  std::string report_dir = "runs";
  report->add_option("--dir", report_dir, "directory of run outputs");

  auto* accept = app.add_subcommand("accept", "release gate");
  int accept_criterion = 0;
  accept->add_option("--criterion", accept_criterion,
                     "run a single criterion (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_config, run_out, run_out_opt->count() > 0);
    if (check->parsed())
      return cmd_check(check_manifold_name, check_problem_name, check_seed,
                       check_report);
    if (gen->parsed()) return cmd_gen(gen_spec, gen_out);
    if (report->parsed()) return cmd_report(report_dir);
    if (accept->parsed()) return cmd_accept(accept_criterion);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
