#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "qbary/suites.hpp"

namespace {

struct Criterion {
  const char* title;
  std::function<std::vector<qbary::CheckResult>()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"gradient correctness", qbary::check_gradients},
      {"quantized gradient unbiasedness", qbary::check_lemma3_unbiased},
      {"quantized gradient variance bound", qbary::check_lemma3_variance},
      {"schedule validity", qbary::check_schedules},
      {"centralized-decentralized equivalence", qbary::check_equivalence},
      {"convergence to reference", qbary::check_convergence},
      {"epsilon scaling", qbary::check_epsilon_scaling},
      {"communication accounting", qbary::check_accounting},
      {"Gaussian-measure run", qbary::check_gaussian_run},
      {"determinism", qbary::check_determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::atoi(argv[a]));
  if (selected.empty())
    for (int c = 1; c <= static_cast<int>(criteria().size()); ++c) selected.push_back(c);

  bool all = true;
  for (int c : selected) {
    if (c < 1 || c > static_cast<int>(criteria().size())) {
      std::fprintf(stderr, "no criterion %d\n", c);
      return 2;
    }
    const Criterion& crit = criteria()[static_cast<std::size_t>(c - 1)];
    const auto results = crit.run();
    bool ok = !results.empty();
    double seconds = 0.0;
    for (const auto& r : results) {
      ok = ok && r.passed;
      seconds += r.seconds;
    }
    for (const auto& r : results)
      std::printf("    %s %s: %s\n", r.passed ? "ok  " : "FAIL", r.name.c_str(), r.detail.c_str());
    std::printf("criterion %2d %-40s %s (%.2fs)\n", c, crit.title, ok ? "PASS" : "FAIL", seconds);
    all = all && ok;
  }
  return all ? 0 : 1;
}
