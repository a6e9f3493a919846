#include "qbary/suites.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <json.hpp>

#include "qbary/commands.hpp"
#include "qbary/decnet.hpp"
#include "qbary/dual_oracle.hpp"
#include "qbary/graph.hpp"
#include "qbary/metrics.hpp"
#include "qbary/pdasgd.hpp"
#include "qbary/problem.hpp"
#include "qbary/verify.hpp"

namespace qbary {
namespace {

constexpr double kE = 2.718281828459045;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CheckResult timed(std::string name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = std::move(name);
  try {
    auto [ok, detail] = body();
    r.passed = ok;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

BarycenterProblem finite_problem(SupportGrid grid, std::vector<Measure> measures, double gamma) {
  Point lo{0.0, 0.0}, hi{1.0, 0.0};
  CostOracle cost = CostOracle::normalized(CostKind::SquaredEuclidean, grid, lo, hi);
  return BarycenterProblem{std::move(grid), cost, std::move(measures), 4.0 * gamma, kE, gamma};
}

// Two Diracs at 0 and 1 over the grid {0, 0.5, 1}.
BarycenterProblem two_dirac_problem(double gamma) {
  return finite_problem(SupportGrid::uniform_1d(3, 0.0, 1.0),
                        {Measure::finite({0.0}, {1.0}), Measure::finite({1.0}, {1.0})}, gamma);
}

// m measures with two or three atoms on [0, 1], grid of n points.
BarycenterProblem small_finite_problem(std::size_t m, std::size_t n, double gamma, std::uint64_t seed) {
  RandomStream rs(seed);
  std::vector<Measure> ms;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t atoms = 2 + rs.below(2);
    std::vector<double> a, p;
    double total = 0.0;
    for (std::size_t k = 0; k < atoms; ++k) {
      a.push_back(rs.uniform());
      p.push_back(0.2 + rs.uniform());
      total += p.back();
    }
    for (auto& x : p) x /= total;
    ms.push_back(Measure::finite(a, p));
  }
  return finite_problem(SupportGrid::uniform_1d(n, 0.0, 1.0), std::move(ms), gamma);
}

LaplacianInfo graph_laplacian(GraphKind kind, int m) {
  GraphSpec spec;
  spec.kind = kind;
  spec.m = m;
  return build_laplacian(generate_graph(spec));
}

double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

std::vector<CheckResult> check_gradients() {
  return {timed("finite differences on 20 random instances", [] {
    RandomStream rs(20240601);
    const double gammas[] = {1.0, 0.1, 0.01};
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const std::size_t n = 2 + rs.below(9);
      const std::size_t atoms = 1 + rs.below(5);
      const double gamma = gammas[t % 3];
      std::vector<Point> pts;
      for (std::size_t l = 0; l < n; ++l) pts.push_back({rs.uniform(), 0.0});
      SupportGrid grid(pts, 1);
      std::vector<double> a, p;
      double total = 0.0;
      for (std::size_t k = 0; k < atoms; ++k) {
        a.push_back(rs.uniform());
        p.push_back(0.1 + rs.uniform());
        total += p.back();
      }
      for (auto& x : p) x /= total;
      const Measure mu = Measure::finite(a, p);
      const CostOracle cost(CostKind::SquaredEuclidean, 1.0);
      Vector lam(static_cast<Eigen::Index>(n));
      for (Eigen::Index l = 0; l < lam.size(); ++l) lam[l] = 0.5 * rs.normal();

      const Vector exact = exact_gradient_finite(lam, mu, grid, cost, gamma);
      const double h = 1e-5 * (1.0 + lam.cwiseAbs().maxCoeff());
      const Vector fd = finite_diff_gradient(
          [&](const Vector& x) { return dual_local_value_exact(x, mu, grid, cost, gamma); }, lam, h);
      worst = std::max(worst, (fd - exact).norm() / exact.norm());
    }
    return std::pair{worst <= 1e-5, "max relative error " + fmt("%.3g", worst) + " (tol 1e-5)"};
  })};
}

namespace {

struct Lemma3Case {
  std::string graph;
  GraphKind kind;
  int m;
  std::size_t M1, M2;
};

std::vector<Lemma3Case> lemma3_cases() {
  std::vector<Lemma3Case> out;
  const std::pair<std::size_t, std::size_t> batches[] = {{1, 1}, {1, 10}, {10, 1}};
  for (auto [name, kind, m] : {std::tuple{"K2", GraphKind::Complete, 2}, std::tuple{"path-3", GraphKind::Path, 3}})
    for (auto [M1, M2] : batches) out.push_back({name, kind, m, M1, M2});
  return out;
}

std::vector<DualPotential> random_potentials(std::size_t m, std::size_t n, std::uint64_t seed) {
  RandomStream rs(seed);
  std::vector<DualPotential> out;
  for (std::size_t i = 0; i < m; ++i) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index l = 0; l < v.size(); ++l) v[l] = 0.1 * rs.normal();
    out.push_back(v);
  }
  return out;
}

std::vector<CheckResult> lemma3_check(std::size_t trials, bool variance) {
  std::vector<CheckResult> out;
  std::uint64_t seed = 31;
  for (const auto& c : lemma3_cases()) {
    ++seed;
    const std::string name = std::string(variance ? "variance " : "unbiased ") + c.graph + " M1=" +
                             std::to_string(c.M1) + " M2=" + std::to_string(c.M2);
    out.push_back(timed(name, [&] {
      const auto prob = small_finite_problem(static_cast<std::size_t>(c.m), 4, 0.1, seed);
      const auto lap = graph_laplacian(c.kind, c.m);
      const auto bars = random_potentials(prob.m(), prob.n(), seed + 1000);
      const Lemma3Report rep = lemma3_statistics(prob, lap, bars, c.M1, c.M2, trials, seed + 2000);
      if (variance)
        return std::pair{rep.empirical_variance <= rep.bound, "E||g~ - grad||^2 = " +
                                                                  fmt("%.4g", rep.empirical_variance) +
                                                                  " <= bound " + fmt("%.4g", rep.bound)};
      const double z = rep.max_z_score();
      return std::pair{z <= 5.0, "max |mean error| / standard error = " + fmt("%.3f", z) + " (tol 5)"};
    }));
  }
  return out;
}

}  // namespace

std::vector<CheckResult> check_lemma3_unbiased() { return lemma3_check(100'000, false); }
std::vector<CheckResult> check_lemma3_variance() { return lemma3_check(10'000, true); }

std::vector<CheckResult> check_schedules() {
  std::vector<CheckResult> out;
  auto check = [](const Schedule& s) {
    double worst_ratio = 0.0, worst_sum = 0.0;
    double sum = s.alpha(0);
    bool ok = std::abs(s.A(0) - sum) <= 1e-10 * s.A(0);
    for (long k = 1; k <= 10'000; ++k) {
      sum += s.alpha(k);
      const double a = s.alpha(k);
      const double ratio = a * a * s.beta(k) / (s.A(k) * s.beta(k - 1));
      worst_ratio = std::max(worst_ratio, ratio);
      worst_sum = std::max(worst_sum, std::abs(s.A(k) - sum) / s.A(k));
      ok = ok && ratio <= 1.0;
    }
    ok = ok && worst_sum <= 1e-10;
    return std::pair{ok, "max alpha^2 beta_k / (A_k beta_{k-1}) = " + fmt("%.4f", worst_ratio) +
                             ", max relative |A_k - sum alpha| = " + fmt("%.2g", worst_sum)};
  };

  // Representative instances: the two-Dirac problem with M = 32 on K2, and a
  // 30-node path with n = 100 and (M1, M2) = (10, 10).
  const auto k2 = graph_laplacian(GraphKind::Complete, 2);
  const double L1 = lipschitz_constant(2, k2.lambda_max, 0.1);
  const double R1 = dual_radius_bound(3, 2, k2.lambda_min_plus);
  const std::vector<std::size_t> b32(2, 32);
  const double s1 = std::sqrt(variance_bound(k2.lambda_max, b32, b32));
  const auto p30 = graph_laplacian(GraphKind::Path, 30);
  const double gamma30 = gamma_from_epsilon(0.1, 100.0);
  const double L2 = lipschitz_constant(30, p30.lambda_max, gamma30);
  const double R2 = dual_radius_bound(100, 30, p30.lambda_min_plus);
  const std::vector<std::size_t> b10(30, 10);
  const double s2 = std::sqrt(variance_bound(p30.lambda_max, b10, b10));

  out.push_back(timed("case A, K2 two-Dirac instance", [&] { return check(Schedule::case_a(L1)); }));
  out.push_back(timed("case A, path-30 n=100", [&] { return check(Schedule::case_a(L2)); }));
  out.push_back(timed("case B, K2 two-Dirac instance M=32", [&] { return check(Schedule::case_b(L1, s1, R1)); }));
  out.push_back(timed("case B, path-30 n=100 M=(10,10)", [&] { return check(Schedule::case_b(L2, s2, R2)); }));
  return out;
}

std::vector<CheckResult> check_equivalence() {
  std::vector<CheckResult> out;
  for (auto [name, kind, m] : {std::tuple{"K2", GraphKind::Complete, 2}, std::tuple{"path-3", GraphKind::Path, 3}}) {
    out.push_back(timed(std::string("exact mode, 30 rounds, ") + name, [&, kind = kind, m = m] {
      const auto prob = small_finite_problem(static_cast<std::size_t>(m), 4, 0.1, 77 + static_cast<std::uint64_t>(m));
      const auto lap = graph_laplacian(kind, m);
      const auto n = static_cast<Eigen::Index>(prob.n());
      const long rounds = 30;
      const Schedule sched = Schedule::case_a(lipschitz_constant(m, lap.lambda_max, prob.gamma));

      StackedDualOracle oracle(prob, lap, Mode::Exact);
      std::vector<SolverState> states;
      PdasgdOptions opts;
      opts.observer = [&](const SolverState& s) { states.push_back(s); };
      RandomStream unused(0);
      pdasgd_run(oracle, sched, rounds, unused, opts);

      SimulatorConfig cfg;
      cfg.schedule = sched;
      cfg.mode = Mode::Exact;
      cfg.metrics = false;
      Simulator sim(prob, lap, cfg);
      sim.initialize();
      double worst = 0.0;
      auto compare = [&](const SolverState& st) {
        const auto lam = oracle.lam_bars(st.lambda);
        const auto eta = oracle.lam_bars(st.eta);
        const auto sim_lam = sim.lam_bars();
        const auto sim_eta = sim.etas();
        const auto sim_p = sim.p_hats();
        for (int i = 0; i < m; ++i) {
          worst = std::max(worst, max_abs_diff(sim_lam[static_cast<std::size_t>(i)], lam[static_cast<std::size_t>(i)]));
          worst = std::max(worst, max_abs_diff(sim_eta[static_cast<std::size_t>(i)], eta[static_cast<std::size_t>(i)]));
          worst = std::max(worst, max_abs_diff(sim_p[static_cast<std::size_t>(i)], st.x_hat.segment(i * n, n)));
        }
      };
      compare(states.front());
      for (long r = 1; r <= rounds; ++r) {
        sim.step();
        compare(states[static_cast<std::size_t>(r)]);
      }
      return std::pair{worst <= 1e-10, "max deviation " + fmt("%.3g", worst) + " (tol 1e-10)"};
    }));
  }
  return out;
}

namespace {

// Rounds for the quantized runs on the two-Dirac instance. The theoretical
// counts (35 and 43) target eps = 0.4 accuracy, far looser than the
// tolerances below; with constant batches the consensus gap levels off
// around 5e-3 to 9e-3, reached after a few thousand rounds.
constexpr long kConvergenceRoundsA = 400;
constexpr long kConvergenceRoundsB = 10'000;

}  // namespace

std::vector<CheckResult> check_convergence() {
  std::vector<CheckResult> out;
  const auto prob = two_dirac_problem(0.1);
  const auto lap = graph_laplacian(GraphKind::Complete, 2);
  ReferenceSolution ref;
  out.push_back(timed("reference barycenter, two perturbed solves", [&] {
    ReferenceOptions o1, o2;
    o1.perturbation_seed = 1;
    o1.perturbation = 0.5;
    o2.perturbation_seed = 2;
    o2.perturbation = 0.5;
    const auto a = reference_barycenter(prob, lap, o1);
    const auto b = reference_barycenter(prob, lap, o2);
    ref = reference_barycenter(prob, lap);
    const double d = std::max(max_abs_diff(a.p_average, b.p_average), max_abs_diff(a.p_average, ref.p_average));
    return std::pair{d <= 1e-7, "solves agree to " + fmt("%.3g", d) + " (tol 1e-7), iterations " +
                                    std::to_string(ref.iterations)};
  }));

  auto quantized = [&](const std::string& name, Schedule::Case scheme, BatchPolicy batches, long rounds) {
    out.push_back(timed(name, [&, scheme, batches, rounds] {
      RunSettings s;
      s.scheme = scheme;
      s.batches = batches;
      s.iterations = rounds;
      s.seed = 11;
      s.record_stride = static_cast<std::size_t>(rounds);
      const RunResult res = run(prob, lap, s);
      Vector avg = Vector::Zero(static_cast<Eigen::Index>(prob.n()));
      for (const auto& p : res.p_hats) avg += p;
      avg /= static_cast<double>(res.p_hats.size());
      const double gap = res.trajectory.back().consensus_gap_w;
      const double err = max_abs_diff(avg, ref.p_average);
      return std::pair{gap <= 1e-2 && err <= 2e-2, std::to_string(rounds) + " rounds: gap_w " + fmt("%.3g", gap) +
                                                       " (tol 1e-2), |p_avg - p*|_inf " + fmt("%.3g", err) +
                                                       " (tol 2e-2)"};
    }));
  };
  BatchPolicy autob;
  autob.auto_schedule = true;
  autob.omega = prob.omega;
  BatchPolicy m32;
  m32.M1 = m32.M2 = 32;
  m32.omega = prob.omega;
  quantized("quantized scheme A, auto batches", Schedule::Case::A, autob, kConvergenceRoundsA);
  quantized("quantized scheme B, M = 32", Schedule::Case::B, m32, kConvergenceRoundsB);
  return out;
}

std::vector<CheckResult> check_epsilon_scaling() {
  return {timed("exact mode, epsilon 0.4 / 0.2 / 0.1", [] {
    const auto lap = graph_laplacian(GraphKind::Complete, 2);
    std::vector<double> gaps;
    std::string detail;
    for (double eps : {0.4, 0.2, 0.1}) {
      const auto prob = two_dirac_problem(eps / 4.0);
      const auto ref = reference_barycenter(prob, lap);
      RunSettings s;
      s.mode = Mode::Exact;
      s.batches.omega = prob.omega;
      const RunResult res = run(prob, lap, s);
      gaps.push_back(res.trajectory.back().dual_estimate - ref.dual_value);
      detail += "eps " + fmt("%g", eps) + ": N " + std::to_string(res.resolved.iterations) + " gap " +
                fmt("%.3g", gaps.back()) + "; ";
    }
    const double r1 = gaps[0] / gaps[1], r2 = gaps[1] / gaps[2];
    detail += "ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2) + " (tol >= 1.5)";
    return std::pair{r1 >= 1.5 && r2 >= 1.5, detail};
  })};
}

std::vector<CheckResult> check_accounting() {
  std::vector<CheckResult> out;
  auto body = [](GraphKind kind, int m, std::size_t n, BatchPolicy batches, Schedule::Case scheme, long rounds) {
    return [=] {
      const auto prob = small_finite_problem(static_cast<std::size_t>(m), n, 0.05, 5);
      const auto lap = graph_laplacian(kind, m);
      RunSettings s;
      s.scheme = scheme;
      s.batches = batches;
      const ResolvedRun r = resolve_run(prob, lap, s);
      SimulatorConfig cfg;
      cfg.schedule = r.schedule;
      cfg.batches = batches;
      cfg.seed = 3;
      cfg.metrics = false;
      Simulator sim(prob, lap, cfg);
      GraphSpec gs;
      gs.kind = kind;
      gs.m = m;
      const auto deg = generate_graph(gs).degrees();
      bool ok = true;
      std::uint64_t samples = 0;
      sim.initialize();
      for (long k = 1; k <= rounds; ++k) {
        const RoundLog log = sim.step();
        samples += log.total.samples;
        std::uint64_t coords = 0;
        for (const auto& msg : sim.messages()) {
          const auto& q = std::get<QuantizedMessage>(msg);
          const std::size_t e = q.entries.size();
          ok = ok && e <= std::min(batches.m2(k), n);
          coords += static_cast<std::uint64_t>(deg[static_cast<std::size_t>(q.sender)]) * std::min(e, n);
        }
        ok = ok && coords == log.total.coordinates;
      }
      std::string detail = "coordinates match per round: " + std::string(ok ? "yes" : "no");
      if (batches.auto_schedule) {
        const auto N = static_cast<std::uint64_t>(rounds);
        const std::uint64_t expect = static_cast<std::uint64_t>(m) * (N * (N + 1) / 2 + 2 * N);
        ok = ok && samples == expect;
        detail += ", samples " + std::to_string(samples) + " (expected " + std::to_string(expect) + ")";
      }
      return std::pair{ok, detail};
    };
  };
  BatchPolicy autob;
  autob.auto_schedule = true;
  autob.omega = kE;
  BatchPolicy big;
  big.M1 = 3;
  big.M2 = 40;
  out.push_back(timed("scheme A auto batches, ln omega = 1, path-4, 40 rounds",
                      body(GraphKind::Path, 4, 6, autob, Schedule::Case::A, 40)));
  out.push_back(timed("scheme A auto batches, ln omega = 1, star-5, 25 rounds",
                      body(GraphKind::Star, 5, 30, autob, Schedule::Case::A, 25)));
  out.push_back(timed("scheme B M2 > n, cycle-5, 30 rounds", body(GraphKind::Cycle, 5, 8, big, Schedule::Case::B, 30)));
  return out;
}

namespace {

constexpr double kGaussianEpsilon = 0.05;

}  // namespace

std::vector<CheckResult> check_gaussian_run() {
  return {timed("m=10 Gaussians, n=100, path, 500 rounds, M=(10,10)", [] {
    const int m = 10;
    RandomStream rs = RandomStream::derive(2024, 0, stream_tag::measures);
    std::vector<Measure> ms;
    for (int i = 0; i < m; ++i) ms.emplace_back(Gaussian{{0.1 + 0.8 * rs.uniform(), 0.0}, 0.01 + 0.04 * rs.uniform()}, 1);
    const Point lo{0.0, 0.0}, hi{1.0, 0.0};
    SupportGrid grid = SupportGrid::uniform_1d(100, 0.0, 1.0);
    const CostOracle cost = CostOracle::normalized(CostKind::SquaredEuclidean, grid, lo, hi);
    const double omega = default_omega(100, lo, hi, 1);
    BarycenterProblem prob{std::move(grid), cost, std::move(ms), kGaussianEpsilon, omega,
                           gamma_from_epsilon(kGaussianEpsilon, omega)};
    const auto lap = graph_laplacian(GraphKind::Path, m);
    RunSettings s;
    s.scheme = Schedule::Case::B;
    s.batches.M1 = s.batches.M2 = 10;
    s.batches.omega = omega;
    s.iterations = 500;
    s.seed = 9;
    const RunResult res = run(prob, lap, s);
    const auto& traj = res.trajectory;
    const double g10 = traj.at(10).consensus_gap_w, g500 = traj.back().consensus_gap_w;

    const std::size_t window = 50;
    std::vector<double> avg;
    double acc = 0.0;
    for (std::size_t r = 0; r < traj.size(); ++r) {
      acc += traj[r].dual_estimate;
      if (r >= window) acc -= traj[r - window].dual_estimate;
      avg.push_back(r + 1 >= window ? acc / window : std::nan(""));
    }
    std::size_t violations = 0;
    double worst = 0.0;
    for (std::size_t r = 201; r <= 500; ++r) {
      const double rise = avg[r] - avg[r - 1];
      if (rise > 1e-12 * std::abs(avg[r - 1])) {
        ++violations;
        worst = std::max(worst, rise);
      }
    }
    const bool ok = g500 <= 0.1 * g10 && violations == 0;
    return std::pair{ok, "gap_w round 10 " + fmt("%.3g", g10) + ", round 500 " + fmt("%.3g", g500) +
                             "; moving-average increases over rounds 201-500: " + std::to_string(violations) +
                             (violations ? " (largest " + fmt("%.3g", worst) + ")" : "")};
  })};
}

std::vector<CheckResult> check_determinism() {
  return {timed("repeated runs, 1 and 3 threads", [] {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("qbary_determinism_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    nlohmann::json cfg = {
        {"graph", {{"kind", "erdos_renyi"}, {"m", 6}, {"p", 0.5}, {"seed", 4}}},
        {"problem",
         {{"n", 40},
          {"support", {0.0, 1.0}},
          {"measures", {{"random_gaussians", {{"mean_range", {0.2, 0.8}}, {"std_range", {0.05, 0.2}}, {"seed", 8}}}}},
          {"epsilon", 0.2}}},
        {"scheme", "B"},
        {"batches", {{{"M1", 4}, {"M2", 8}}, {{"M1", 1}, {"M2", 50}}}},
        {"iterations", 60},
        {"mode", "quantized"},
        {"seed", 12345},
        {"per_agent_rows", true}};
    const fs::path path = dir / "config.json";
    std::ofstream(path) << cfg.dump(2);

    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    std::ostringstream sink;
    std::vector<std::map<std::string, std::string>> outputs;
    for (unsigned threads : {1u, 3u, 1u}) {
      RunOverrides ov;
      ov.out = (dir / ("out" + std::to_string(outputs.size()))).string();
      ov.threads = threads;
      if (cmd_run(path.string(), ov, sink, sink) != kExitOk) throw std::runtime_error("run failed: " + sink.str());
      std::map<std::string, std::string> files;
      for (const auto& e : fs::directory_iterator(*ov.out))
        if (e.path().extension() == ".csv") files[e.path().filename().string()] = slurp(e.path());
      outputs.push_back(std::move(files));
    }
    fs::remove_all(dir);
    const bool ok = outputs[0].size() == 4 && outputs[0] == outputs[1] && outputs[0] == outputs[2];
    return std::pair{ok, std::to_string(outputs[0].size()) + " CSV files per run, identical: " + (ok ? "yes" : "no")};
  })};
}

std::vector<std::string> suite_names() {
  return {"gradients", "lemma3", "schedules", "equivalence", "convergence", "scaling", "accounting", "gaussian",
          "determinism"};
}

std::vector<CheckResult> run_suite(const std::string& name) {
  auto cat = [](std::vector<CheckResult> a, const std::vector<CheckResult>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  if (name == "gradients") return check_gradients();
  if (name == "lemma3") return cat(check_lemma3_unbiased(), check_lemma3_variance());
  if (name == "schedules") return check_schedules();
  if (name == "equivalence") return check_equivalence();
  if (name == "convergence") return check_convergence();
  if (name == "scaling") return check_epsilon_scaling();
  if (name == "accounting") return check_accounting();
  if (name == "gaussian") return check_gaussian_run();
  if (name == "determinism") return check_determinism();
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace qbary
