#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace qkdv {

/// Outcome of one batch workflow. exit_code follows the CLI convention:
///   0 success, 2 invalid config, 3 horizon/contraction failure,
///   4 failed verification assertion, 5 chain envelope budget exceeded.
struct WorkflowResult {
  int exit_code = 0;
  std::string report_json;
};

WorkflowResult run_solve(const std::string& config_text, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override = {});

WorkflowResult run_verify(const std::string& config_text, const std::string& out_dir,
                          std::optional<std::uint64_t> seed_override = {});

WorkflowResult run_chain(const std::string& config_text, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override = {});

}  // namespace qkdv
