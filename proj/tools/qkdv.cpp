// qkdv command-line front end. Links only the shared-library C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qkdv.h"

namespace {

int read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "qkdv: cannot read config file: " << path << "\n";
    return 2;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return 0;
}

using RunFn = qkdv_status (*)(const char*, const char*, int64_t, int*, char**);

int run(RunFn fn, const std::string& config_path, const std::string& out_dir,
        int64_t seed) {
  std::string config;
  if (int rc = read_file(config_path, config)) return rc;

  int exit_code = 0;
  char* report = nullptr;
  qkdv_status st = fn(config.c_str(), out_dir.c_str(), seed, &exit_code, &report);
  if (st != QKDV_OK) {
    std::cerr << "qkdv: " << qkdv_status_name(st) << ": " << qkdv_last_error() << "\n";
    return st == QKDV_ERR_BAD_CONFIG || st == QKDV_ERR_INVALID_ARGUMENT ? 2 : 1;
  }
  std::cout << report << "\n";
  qkdv_string_free(report);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkdv — local KdV solves on quasi-periodic Fourier lattices"};
  app.footer("Exit codes: 0 ok, 2 invalid config, 3 horizon/contraction failure,\n"
             "4 failed verification, 5 chain envelope budget exceeded.\n"
             "QKDV_THREADS caps the worker count.");

  std::string config_path, out_dir = "out";
  int64_t seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")->required();
    cmd->add_option("--out", out_dir, "output directory (default: out)");
    cmd->add_option("--seed", seed, "override the config seed");
  };

  auto* solve_cmd =
      app.add_subcommand("solve", "run one local solve and write its artifacts");
  add_common(solve_cmd);
  auto* verify_cmd = app.add_subcommand(
      "verify", "run a verification suite (task.suite selects which)");
  add_common(verify_cmd);
  auto* chain_cmd =
      app.add_subcommand("chain", "chained restarts from each evaluated end state");
  add_common(chain_cmd);
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (solve_cmd->parsed()) return run(&qkdv_run_solve, config_path, out_dir, seed);
  if (verify_cmd->parsed()) return run(&qkdv_run_verify, config_path, out_dir, seed);
  return run(&qkdv_run_chain, config_path, out_dir, seed);
}
