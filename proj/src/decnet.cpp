#include "qbary/decnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "qbary/metrics.hpp"

namespace qbary {

namespace {

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1u), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

unsigned ceil_log2(std::uint64_t v) {
  unsigned bits = 0;
  while ((std::uint64_t{1} << bits) < v) ++bits;
  return bits;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "quantized") return Mode::Quantized;
  if (name == "sampled_only") return Mode::SampledOnly;
  if (name == "exact") return Mode::Exact;
  throw std::invalid_argument("unknown mode '" + name + "'");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Quantized: return "quantized";
    case Mode::SampledOnly: return "sampled_only";
    case Mode::Exact: return "exact";
  }
  return "unknown";
}

SimplexVector QuantizedMessage::decode(std::size_t n) const {
  Histogram h{entries, M2};
  return h.decode(n);
}

std::uint64_t message_bits(const QuantizedMessage& msg, std::size_t n) {
  return static_cast<std::uint64_t>(msg.entries.size()) * (ceil_log2(n) + ceil_log2(msg.M2 + 1));
}

std::uint64_t dense_message_bits(std::size_t n) { return 64 * static_cast<std::uint64_t>(n); }

std::uint64_t message_bits(const Message& msg, std::size_t n) {
  if (auto* q = std::get_if<QuantizedMessage>(&msg)) return message_bits(*q, n);
  return dense_message_bits(n);
}

std::size_t message_coordinates(const Message& msg, std::size_t n) {
  if (auto* q = std::get_if<QuantizedMessage>(&msg)) return std::min(q->entries.size(), n);
  return n;
}

std::vector<LaplacianRow> laplacian_rows(const LaplacianInfo& info) {
  std::vector<LaplacianRow> rows(static_cast<std::size_t>(info.size()));
  for (int i = 0; i < info.size(); ++i)
    for (int j = 0; j < info.size(); ++j)
      if (info.matrix(i, j) != 0.0) rows[static_cast<std::size_t>(i)].emplace_back(j, info.matrix(i, j));
  return rows;
}

Vector aggregate_neighbors(const LaplacianRow& row, std::span<const Vector> decoded, Eigen::Index n) {
  Vector out = Vector::Zero(n);
  for (auto [j, w] : row) {
    if (j < 0 || static_cast<std::size_t>(j) >= decoded.size() || decoded[static_cast<std::size_t>(j)].size() == 0)
      throw std::logic_error("aggregate_neighbors: missing message from agent " + std::to_string(j));
    const Vector& g = decoded[static_cast<std::size_t>(j)];
    if (g.size() != n) throw std::logic_error("aggregate_neighbors: message dimension mismatch");
    out += w * g;
  }
  return out;
}

std::size_t BatchPolicy::m1(long k) const { return auto_schedule ? batch_schedule_a(k, omega) : M1; }
std::size_t BatchPolicy::m2(long k) const { return auto_schedule ? batch_schedule_a(k, omega) : M2; }

AgentCounters& AgentCounters::operator+=(const AgentCounters& o) {
  samples += o.samples;
  messages += o.messages;
  coordinates += o.coordinates;
  bits += o.bits;
  return *this;
}

Simulator::Simulator(const BarycenterProblem& problem, const LaplacianInfo& laplacian, SimulatorConfig config)
    : problem_(problem), laplacian_(laplacian), config_(std::move(config)) {
  problem_.validate();
  if (static_cast<std::size_t>(laplacian_.size()) != problem_.m())
    throw std::invalid_argument("simulator: graph size differs from the number of measures");
  if (config_.mode == Mode::Exact)
    for (const auto& mu : problem_.measures)
      if (!mu.exact_expectation_supported())
        throw std::invalid_argument("simulator: exact mode needs finite-support measures");
  if (!config_.batches.auto_schedule && (config_.batches.M1 == 0 || config_.batches.M2 == 0))
    throw std::invalid_argument("simulator: batch sizes must be positive");
  rows_ = laplacian_rows(laplacian_);
  degrees_.resize(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) degrees_[i] = static_cast<int>(rows_[i].size()) - (rows_[i].empty() ? 0 : 1);
}

void Simulator::local_gradient(AgentState& agent, long k, Message& msg, Vector& decoded, AgentCounters& counters) {
  const auto& mu = problem_.measures[static_cast<std::size_t>(agent.id)];
  const std::size_t n = problem_.n();
  if (config_.mode == Mode::Exact) {
    agent.p_bar = exact_gradient_finite(agent.lam_bar, mu, problem_.grid, problem_.cost, problem_.gamma);
    msg = DenseMessage{agent.id, k, agent.p_bar};
    decoded = agent.p_bar;
  } else {
    const std::size_t M1 = config_.batches.m1(k);
    agent.p_bar = sampled_gradient(agent.lam_bar, mu, problem_.grid, problem_.cost, M1, problem_.gamma, agent.sample_stream);
    counters.samples += M1;
    if (config_.mode == Mode::SampledOnly) {
      msg = DenseMessage{agent.id, k, agent.p_bar};
      decoded = agent.p_bar;
    } else {
      const std::size_t M2 = config_.batches.m2(k);
      Histogram h = quantize_histogram(agent.p_bar, M2, agent.quant_stream);
      QuantizedMessage q{agent.id, k, M2, std::move(h.entries)};
      decoded = q.decode(n);
      msg = std::move(q);
    }
  }
  if (!agent.p_bar.allFinite()) throw std::runtime_error("simulator: non-finite local plan at round " + std::to_string(k));
  const auto deg = static_cast<std::uint64_t>(degrees_[static_cast<std::size_t>(agent.id)]);
  counters.messages += deg;
  counters.coordinates += deg * message_coordinates(msg, n);
  counters.bits += deg * message_bits(msg, n);
}

void Simulator::fill_metrics(RoundLog& log) const {
  for (const auto& c : log.agents) log.total += c;
  if (!config_.metrics) return;
  const auto p = p_hats();
  const auto gap = consensus_gap(p, laplacian_);
  log.consensus_gap_w = gap.gap_w;
  log.consensus_gap_max = gap.gap_max;
  for (const auto& r : consensus_gap_per_agent(p, laplacian_)) {
    log.agent_gap_w.push_back(r.gap_w);
    log.agent_gap_max.push_back(r.gap_max);
  }
  log.agent_dual = local_dual_values(etas(), problem_, config_.dual_samples, config_.seed);
  double acc = 0.0;
  for (double v : log.agent_dual) acc += v;
  log.dual_estimate = acc / static_cast<double>(log.agent_dual.size());
}

RoundLog Simulator::initialize() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = problem_.m();
  const auto n = static_cast<Eigen::Index>(problem_.n());
  agents_.clear();
  agents_.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    AgentState a{static_cast<int>(i),
                 Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n),
                 Vector::Zero(n), Vector::Zero(n),
                 RandomStream::derive(config_.seed, i, stream_tag::samples),
                 RandomStream::derive(config_.seed, i, stream_tag::quantize)};
    agents_.push_back(std::move(a));
  }
  outbox_.assign(m, Message{});
  decoded_.assign(m, Vector());

  RoundLog log;
  log.round = 0;
  log.agents.assign(m, {});
  parallel_for(m, config_.threads, [&](std::size_t i) {
    local_gradient(agents_[i], 0, outbox_[i], decoded_[i], log.agents[i]);
    agents_[i].p_hat = agents_[i].p_bar;
  });
  rounds_ = 0;
  fill_metrics(log);
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

RoundLog Simulator::step() {
  if (rounds_ < 0) throw std::logic_error("simulator: initialize() must run before step()");
  const auto start = std::chrono::steady_clock::now();
  const long k = rounds_;
  const std::size_t m = problem_.m();
  const auto n = static_cast<Eigen::Index>(problem_.n());
  const Schedule& sched = config_.schedule;
  const Coefficients c = schedule_coeffs(sched, k);
  const double alpha_next = sched.alpha(k + 1);
  const double A_next = sched.A(k + 1);
  // Zero beta only arises for an edgeless graph, where every aggregate is zero.
  const double scale = c.beta > 0.0 ? static_cast<double>(m) / c.beta : 0.0;

  RoundLog log;
  log.round = k + 1;
  log.agents.assign(m, {});
  std::vector<Message> next_out(m);
  std::vector<Vector> next_decoded(m);

  parallel_for(m, config_.threads, [&](std::size_t i) {
    AgentState& a = agents_[i];
    a.s += c.alpha * aggregate_neighbors(rows_[i], decoded_, n);
    a.z = -scale * a.s;
    a.lam_bar = c.tau * a.z + (1.0 - c.tau) * a.eta;
    if (!a.lam_bar.allFinite()) throw std::runtime_error("simulator: non-finite potential at round " + std::to_string(k + 1));
    local_gradient(a, k + 1, next_out[i], next_decoded[i], log.agents[i]);
  });

  // Barrier: every round-(k+1) message is delivered before the second phase.
  outbox_ = std::move(next_out);
  decoded_ = std::move(next_decoded);

  parallel_for(m, config_.threads, [&](std::size_t i) {
    AgentState& a = agents_[i];
    a.zeta = a.z - scale * alpha_next * aggregate_neighbors(rows_[i], decoded_, n);
    a.eta = c.tau * a.zeta + (1.0 - c.tau) * a.eta;
    a.p_hat = (alpha_next * a.p_bar + c.A * a.p_hat) / A_next;
  });

  rounds_ = k + 1;
  fill_metrics(log);
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

std::vector<SimplexVector> Simulator::p_hats() const {
  std::vector<SimplexVector> out;
  for (const auto& a : agents_) out.push_back(a.p_hat);
  return out;
}

std::vector<DualPotential> Simulator::lam_bars() const {
  std::vector<DualPotential> out;
  for (const auto& a : agents_) out.push_back(a.lam_bar);
  return out;
}

std::vector<DualPotential> Simulator::etas() const {
  std::vector<DualPotential> out;
  for (const auto& a : agents_) out.push_back(a.eta);
  return out;
}

ResolvedRun resolve_run(const BarycenterProblem& problem, const LaplacianInfo& laplacian, const RunSettings& settings) {
  problem.validate();
  const int m = static_cast<int>(problem.m());
  ResolvedRun r;
  r.gamma = problem.gamma;
  r.L = lipschitz_constant(m, laplacian.lambda_max, problem.gamma);

  if (settings.radius) {
    if (!(*settings.radius > 0.0)) throw std::invalid_argument("radius override must be positive");
    r.R = *settings.radius;
  } else if (laplacian.lambda_min_plus > 0.0) {
    r.R = dual_radius_bound(problem.n(), m, laplacian.lambda_min_plus);
  } else {
    r.R = std::numeric_limits<double>::quiet_NaN();
  }

  const std::size_t M1 = settings.batches.m1(0);
  const std::size_t M2 = settings.batches.m2(0);
  std::vector<std::size_t> m1(static_cast<std::size_t>(m), M1), m2(static_cast<std::size_t>(m), M2);
  switch (settings.mode) {
    case Mode::Quantized: r.sigma2_bound = variance_bound(laplacian.lambda_max, m1, m2); break;
    case Mode::SampledOnly: r.sigma2_bound = variance_bound(laplacian.lambda_max, m1, {}); break;
    case Mode::Exact: r.sigma2_bound = 0.0; break;
  }
  r.sigma = settings.sigma ? *settings.sigma : std::sqrt(r.sigma2_bound);

  if (settings.scheme == Schedule::Case::B) {
    if (settings.batches.auto_schedule) throw std::invalid_argument("scheme B needs explicit batch sizes");
    if (r.sigma > 0.0 && !(r.R > 0.0)) throw std::invalid_argument("scheme B needs a dual radius");
    r.schedule = Schedule::case_b(r.L, r.sigma, r.sigma > 0.0 ? r.R : 1.0);
  } else {
    r.schedule = Schedule::case_a(r.L);
  }

  if (settings.iterations) {
    if (*settings.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    r.iterations = *settings.iterations;
  } else {
    if (!(r.L > 0.0) || !(r.R > 0.0))
      throw std::invalid_argument("iteration count cannot be derived for a single agent; set iterations");
    r.iterations = r.schedule.kind == Schedule::Case::A ? iterations_case_a(r.L, r.R, problem.epsilon)
                                                        : iterations_case_b(r.L, r.R, problem.epsilon, r.sigma);
  }
  return r;
}

RunResult run(const BarycenterProblem& problem, const LaplacianInfo& laplacian, const RunSettings& settings) {
  RunResult out;
  out.resolved = resolve_run(problem, laplacian, settings);
  SimulatorConfig cfg;
  cfg.schedule = out.resolved.schedule;
  cfg.mode = settings.mode;
  cfg.batches = settings.batches;
  cfg.seed = settings.seed;
  cfg.dual_samples = settings.dual_samples;
  cfg.threads = settings.threads;
  Simulator sim(problem, laplacian, cfg);
  const std::size_t stride = std::max<std::size_t>(settings.record_stride, 1);
  out.trajectory.push_back(sim.initialize());
  const long N = out.resolved.iterations;
  for (long r = 1; r <= N; ++r) {
    RoundLog log = sim.step();
    if (r % static_cast<long>(stride) == 0 || r == N) out.trajectory.push_back(std::move(log));
  }
  out.p_hats = sim.p_hats();
  out.lam_bars = sim.lam_bars();
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const std::vector<RoundLog>& trajectory, bool per_agent) {
  os << "round,agent,samples,coords_sent,bits_sent,consensus_gap_w,consensus_gap_max,dual_estimate\n";
  for (const auto& log : trajectory) {
    if (per_agent) {
      for (std::size_t i = 0; i < log.agents.size(); ++i) {
        const auto& c = log.agents[i];
        os << log.round << ',' << (i + 1) << ',' << c.samples << ',' << c.coordinates << ',' << c.bits << ','
           << format_double(i < log.agent_gap_w.size() ? log.agent_gap_w[i] : 0.0) << ','
           << format_double(i < log.agent_gap_max.size() ? log.agent_gap_max[i] : 0.0) << ','
           << format_double(i < log.agent_dual.size() ? log.agent_dual[i] : 0.0) << '\n';
      }
    }
    os << log.round << ",total," << log.total.samples << ',' << log.total.coordinates << ',' << log.total.bits << ','
       << format_double(log.consensus_gap_w) << ',' << format_double(log.consensus_gap_max) << ','
       << format_double(log.dual_estimate) << '\n';
  }
}

void write_barycenters_csv(std::ostream& os, const SupportGrid& grid, const std::vector<SimplexVector>& p_hats) {
  if (grid.dim() == 1)
    os << "z";
  else
    os << "z1,z2";
  for (std::size_t i = 0; i < p_hats.size(); ++i) os << ",agent_" << (i + 1);
  os << ",average\n";
  for (std::size_t l = 0; l < grid.size(); ++l) {
    os << format_double(grid[l][0]);
    if (grid.dim() == 2) os << ',' << format_double(grid[l][1]);
    double avg = 0.0;
    for (const auto& p : p_hats) {
      const double v = p[static_cast<Eigen::Index>(l)];
      avg += v;
      os << ',' << format_double(v);
    }
    os << ',' << format_double(avg / static_cast<double>(p_hats.size())) << '\n';
  }
}

}  // namespace qbary
