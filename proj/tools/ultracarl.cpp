// ultracarl <command> --config <path> [--out <dir>] [--seed <u64>] [--workers N]
//
// Exit status: 0 pass, 2 fail, 1 usage, configuration or validation error.

#include "ultracarl/ultracarl.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ultracarl::Error(ultracarl::ErrorCode::config, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of weighted estimates for the ultrahyperbolic wave operator"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  bool quiet = false;

  app.add_option("command", command, "regions | verify-boundary | verify-interior | weight-check | absorption | "
                                     "uniqueness-demo | figures")
      ->required();
  app.add_option("--config", config_path, "INI run configuration")->required();
  app.add_option("--out", out_dir, "output directory (default: [run] out, else ./out/<command>)");
  app.add_option("--seed", seed, "overrides [run] seed");
  app.add_option("--workers", workers, "worker threads (default: [run] workers, else 1)")->check(CLI::Range(1u, 256u));
  app.add_flag("-q,--quiet", quiet, "do not print the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ultracarl::RunEnv env;
    env.cfg = ultracarl::parse_config(read_file(config_path), command, seed);
    env.out = !out_dir.empty() ? out_dir : env.cfg.out ? *env.cfg.out : "out/" + env.cfg.command;
    env.par.workers = workers ? workers : env.cfg.workers;
    const ultracarl::CommandResult r = ultracarl::run_command(env);
    if (!quiet) std::cout << r.summary;
    std::cout << (r.pass ? "PASS" : "FAIL") << " (" << env.out.string() << ")\n";
    return r.pass ? 0 : 2;
  } catch (const ultracarl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
