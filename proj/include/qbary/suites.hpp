#pragma once

#include <string>
#include <vector>

namespace qbary {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Checks behind the `verify` subcommand and the acceptance tests. Each
/// returns one result per tested configuration.
std::vector<CheckResult> check_gradients();          // exact gradients vs finite differences
std::vector<CheckResult> check_lemma3_unbiased();    // quantized stacked gradient mean
std::vector<CheckResult> check_lemma3_variance();    // quantized stacked gradient variance bound
std::vector<CheckResult> check_schedules();          // coupling condition and A_k = sum alpha_l
std::vector<CheckResult> check_equivalence();        // decentralized vs stacked centralized iterates
std::vector<CheckResult> check_convergence();        // quantized runs vs reference barycenter
std::vector<CheckResult> check_epsilon_scaling();    // dual gap shrinks as epsilon halves
std::vector<CheckResult> check_accounting();         // coordinate and sample counters
std::vector<CheckResult> check_gaussian_run();       // consensus and dual trend on Gaussian measures
std::vector<CheckResult> check_determinism();        // byte-identical outputs across thread counts

/// Suite names accepted by `verify`.
std::vector<std::string> suite_names();
/// Throws std::invalid_argument for an unknown name.
std::vector<CheckResult> run_suite(const std::string& name);

}  // namespace qbary
