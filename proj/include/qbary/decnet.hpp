#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qbary/dual_oracle.hpp"
#include "qbary/graph.hpp"
#include "qbary/pdasgd.hpp"
#include "qbary/problem.hpp"
#include "qbary/random.hpp"

namespace qbary {

/// What agents exchange each round.
///  Quantized:   sparse histogram of M2 categorical draws from the local plan.
///  SampledOnly: the dense M1-sample plan (non-quantized baseline).
///  Exact:       the dense exact gradient; finite-support measures only.
enum class Mode { Quantized, SampledOnly, Exact };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

/// Sparse integer histogram; the only payload in quantized mode.
struct QuantizedMessage {
  int sender = 0;
  long round = 0;
  std::size_t M2 = 0;
  std::vector<std::pair<std::size_t, std::size_t>> entries;  // (coordinate, count), sorted

  SimplexVector decode(std::size_t n) const;
};

struct DenseMessage {
  int sender = 0;
  long round = 0;
  Vector values;
};

using Message = std::variant<QuantizedMessage, DenseMessage>;

/// entries * (ceil(log2 n) + ceil(log2(M2 + 1))).
std::uint64_t message_bits(const QuantizedMessage& msg, std::size_t n);
/// One 64-bit double per coordinate.
std::uint64_t dense_message_bits(std::size_t n);
std::uint64_t message_bits(const Message& msg, std::size_t n);
/// Coordinates carried by one copy of the message.
std::size_t message_coordinates(const Message& msg, std::size_t n);

/// Nonzero entries of one Laplacian row as (column, weight).
using LaplacianRow = std::vector<std::pair<int, double>>;
std::vector<LaplacianRow> laplacian_rows(const LaplacianInfo& info);

/// sum_j Wbar_ij g_j over the nonzero entries of the row. decoded[j] must be
/// non-empty for every j in the row; throws std::logic_error otherwise.
Vector aggregate_neighbors(const LaplacianRow& row, std::span<const Vector> decoded, Eigen::Index n);

/// Batch sizes per gradient evaluation. With auto_schedule, the gradient at
/// the potential of round k uses M1 = M2 = batch_schedule_a(k, omega).
struct BatchPolicy {
  bool auto_schedule = false;
  std::size_t M1 = 1;
  std::size_t M2 = 1;
  double omega = 2.718281828459045;

  std::size_t m1(long k) const;
  std::size_t m2(long k) const;
};

struct AgentState {
  int id = 0;
  DualPotential lam_bar, eta, zeta, z;
  Vector s;             // sum_l alpha_l sum_j Wbar_ij g_j(l)
  SimplexVector p_hat;  // weighted primal average
  SimplexVector p_bar;  // local plan at the current potential
  RandomStream sample_stream;
  RandomStream quant_stream;
};

struct AgentCounters {
  std::uint64_t samples = 0;
  std::uint64_t messages = 0;     // directed deliveries
  std::uint64_t coordinates = 0;  // coordinates delivered
  std::uint64_t bits = 0;         // bits delivered

  AgentCounters& operator+=(const AgentCounters& o);
};

/// Round 0 is the initialization broadcast; round r >= 1 is the r-th step.
struct RoundLog {
  long round = 0;
  std::vector<AgentCounters> agents;
  AgentCounters total;
  double consensus_gap_w = 0.0;
  double consensus_gap_max = 0.0;
  double dual_estimate = 0.0;
  std::vector<double> agent_gap_w;
  std::vector<double> agent_gap_max;
  std::vector<double> agent_dual;
  double seconds = 0.0;  // wall clock, never serialized
};

struct SimulatorConfig {
  Schedule schedule;
  Mode mode = Mode::Quantized;
  BatchPolicy batches;
  std::uint64_t seed = 0;
  /// Monte-Carlo draws per agent for the dual estimate; the draws are the
  /// same every round.
  std::size_t dual_samples = 256;
  /// Worker threads inside a round; results do not depend on this.
  unsigned threads = 1;
  /// Compute consensus gaps and dual estimates for the log.
  bool metrics = true;
};

/// Round-synchronous simulator of the quantized decentralized method.
///
/// Each round, agent i
///   1. adds alpha_k * sum_j Wbar_ij g_j(k) to its running sum s_i using the
///      messages of the previous round,
///   2. sets z_i = -(m / beta_k) s_i and lam_bar_i = tau_k z_i + (1 - tau_k) eta_i,
///   3. forms its local plan at lam_bar_i and broadcasts one message,
/// and, after every message of the round is delivered,
///   4. sets zeta_i = z_i - m (alpha_{k+1} / beta_k) sum_j Wbar_ij g_j(k+1),
///      eta_i = tau_k zeta_i + (1 - tau_k) eta_i and updates p_hat_i.
/// The factor m comes from the change of variables lam_bar = m sqrt(W) lambda,
/// which makes the agents' iterates those of the centralized method on the
/// stacked dual.
class Simulator {
public:
  Simulator(const BarycenterProblem& problem, const LaplacianInfo& laplacian, SimulatorConfig config);

  /// Initialization phase: gradients at lam_bar = 0 are computed and
  /// broadcast, p_hat starts at the local plan. Returns the round-0 log.
  RoundLog initialize();
  /// Executes round k = rounds_done() and returns its log.
  RoundLog step();

  long rounds_done() const { return rounds_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  /// Messages broadcast in the most recent round.
  const std::vector<Message>& messages() const { return outbox_; }
  std::vector<SimplexVector> p_hats() const;
  std::vector<DualPotential> lam_bars() const;
  std::vector<DualPotential> etas() const;

private:
  void local_gradient(AgentState& agent, long k, Message& msg, Vector& decoded, AgentCounters& counters);
  void fill_metrics(RoundLog& log) const;

  const BarycenterProblem& problem_;
  const LaplacianInfo& laplacian_;
  SimulatorConfig config_;
  std::vector<LaplacianRow> rows_;
  std::vector<int> degrees_;
  std::vector<AgentState> agents_;
  std::vector<Message> outbox_;
  std::vector<Vector> decoded_;
  long rounds_ = -1;
};

/// Scheme and batch settings of a run before the derived constants are known.
struct RunSettings {
  Schedule::Case scheme = Schedule::Case::A;
  Mode mode = Mode::Quantized;
  BatchPolicy batches;
  std::optional<long> iterations;
  std::optional<double> sigma;   // overrides the variance bound
  std::optional<double> radius;  // overrides the dual radius bound
  std::uint64_t seed = 0;
  std::size_t dual_samples = 256;
  unsigned threads = 1;
  std::size_t record_stride = 1;
};

/// Derived constants of a run.
struct ResolvedRun {
  double gamma = 0.0;
  double L = 0.0;
  double R = 0.0;
  double sigma2_bound = 0.0;
  double sigma = 0.0;
  long iterations = 0;
  Schedule schedule;
};

/// Computes L, R, sigma and N. N follows the iteration count of the selected
/// case unless settings.iterations is set. Throws std::invalid_argument when
/// N cannot be derived (single agent) and no override is given.
ResolvedRun resolve_run(const BarycenterProblem& problem, const LaplacianInfo& laplacian, const RunSettings& settings);

struct RunResult {
  ResolvedRun resolved;
  std::vector<RoundLog> trajectory;
  std::vector<SimplexVector> p_hats;
  std::vector<DualPotential> lam_bars;
};

/// Initialization plus N rounds; rounds are logged every record_stride rounds
/// and always at 0 and N.
RunResult run(const BarycenterProblem& problem, const LaplacianInfo& laplacian, const RunSettings& settings);

/// Columns: round, agent, samples, coords_sent, bits_sent, consensus_gap_w,
/// consensus_gap_max, dual_estimate. One "total" row per logged round, preceded
/// by one row per agent when per_agent is set.
void write_trajectory_csv(std::ostream& os, const std::vector<RoundLog>& trajectory, bool per_agent);
/// n rows: support coordinates, one column per agent, then the agent average.
void write_barycenters_csv(std::ostream& os, const SupportGrid& grid, const std::vector<SimplexVector>& p_hats);

/// 17 significant digits.
std::string format_double(double v);

}  // namespace qbary
