// Command-line driver: run, steady, reduced, converge, lumped, compare.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "odstokes/odstokes.hpp"

namespace {

enum Exit { kOk = 0, kVerdictFailed = 1, kUsage = 2, kRuntime = 3 };

void write_diagnostic(const std::filesystem::path& dir, const std::string& command, const std::string& what) {
  try {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "error.txt");
    out << "command: " << command << '\n' << what << '\n';
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsteady Stokes flow with open-dissipative outlets"};
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t seed = 1;
  bool quiet = false;
  std::string config_path;

  for (const char* name : {"run", "steady", "reduced", "converge", "lumped", "compare"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("cfg", config_path, "scenario configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the configuration)");
    sub->add_option("--seed", seed, "seed for randomized invariant checks");
    sub->add_flag("--quiet", quiet, "suppress the summary line");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  odstokes::CommandOptions opt;
  opt.out = out_dir;
  opt.seed = seed;
  opt.quiet = quiet;

  odstokes::ScenarioConfig cfg;
  try {
    cfg = odstokes::load_config(config_path);
  } catch (const odstokes::ConfigError& e) {
    std::cerr << "configuration rejected:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return kUsage;
  }
  const std::filesystem::path dir = opt.out.empty() ? std::filesystem::path(cfg.output.directory) : opt.out;

  try {
    if (command == "run" || command == "reduced") return odstokes::command_run(cfg, opt, command);
    if (command == "steady") return odstokes::command_steady(cfg, opt);
    if (command == "converge") return odstokes::command_converge(cfg, opt);
    if (command == "lumped") return odstokes::command_lumped(cfg, opt);
    if (command == "compare") return odstokes::command_compare(cfg, opt);
  } catch (const odstokes::ConfigError& e) {
    std::cerr << command << ": " << e.what() << '\n';
    write_diagnostic(dir, command, e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << command << " failed: " << e.what() << '\n';
    write_diagnostic(dir, command, e.what());
    return kRuntime;
  }
  return kUsage;
}
