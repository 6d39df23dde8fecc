// Command-line front end: run, critical, soliton-speed, check-curvature.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "logflow/commands.hpp"

namespace {

int dispatch(const std::string& command, const std::string& config_path, const std::string& out_dir, bool verbose) {
  using namespace logflow;
  try {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) {
      cfg.output_dir = out_dir;
      cfg.source["output_dir"] = out_dir;
    }
    CommandResult res;
    if (command == "run") res = cmd_run(cfg);
    else if (command == "critical") res = cmd_critical(cfg);
    else if (command == "soliton-speed") res = cmd_soliton_speed(cfg);
    else res = cmd_check_curvature(cfg);
    if (verbose) std::cout << res.manifest.dump(2) << "\n";
    else std::cout << cfg.output_dir << "/manifest.json\n";
    if (res.exit_code != 0 && res.manifest.contains("error"))
      std::cerr << "error: " << res.manifest["error"].get<std::string>() << "\n";
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BracketFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n" << e.sweep_log();
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logarithmic curvature flow laboratory"};
  app.require_subcommand(1);
  std::string config, out;
  int threads = 1;
  bool verbose = false;
  for (const char* name : {"run", "critical", "soliton-speed", "check-curvature"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory, overrides output_dir");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "print the manifest");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return dispatch(app.get_subcommands().front()->get_name(), config, out, verbose);
}
