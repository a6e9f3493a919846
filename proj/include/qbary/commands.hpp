#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace qbary {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitCheckFailed = 3 };

/// Environment variable naming the root under which relative output
/// directories are created.
inline constexpr const char* kOutputRootEnv = "QBARY_OUTPUT_ROOT";

struct RunOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<long> iterations;
  std::optional<unsigned> threads;
};

/// Writes trajectory.csv, barycenters.csv and resolved_config.json. With a
/// list of batch settings, one trajectory/barycenter pair per entry, suffixed
/// with the batch label.
int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err);
int cmd_graph_info(const std::string& config_path, std::ostream& out, std::ostream& err);

}  // namespace qbary
