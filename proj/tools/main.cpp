#include "elmd/cli.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  long seed = -1;
  long paths = -1;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config_path, "configuration file")->required();
  sub->add_option("--seed", opt.seed, "override the configured seed");
  sub->add_option("--out", opt.out_path, "write the report to this file instead of stdout");
  sub->add_option("--format", opt.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--paths", opt.paths, "override the configured path count");
}

int emit(const elmd::cli::CommandResult& result, const Options& opt) {
  if (opt.out_path.empty()) {
    std::cout << result.report;
  } else {
    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot open output file " << opt.out_path << "\n";
      return elmd::cli::kInputError;
    }
    out << result.report;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deflator existence, construction and verification for jump-diffusion markets"};
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::string> commands{"analyze", "solve", "simulate", "verify", "hjm", "bh"};
  for (const auto& name : commands) {
    add_common(app.add_subcommand(name), opt);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  std::ifstream in(opt.config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read config file " << opt.config_path << "\n";
    return elmd::cli::kInputError;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  elmd::config::RunConfig cfg;
  try {
    cfg = elmd::config::parse_config(buf.str());
  } catch (const elmd::config::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return elmd::cli::kInputError;
  }
  if (opt.seed >= 0) cfg.simulation.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.paths >= 1) cfg.simulation.paths = opt.paths;

  const auto result = elmd::cli::run_command(command, cfg, opt.format);
  if (result.exit_code == elmd::cli::kInputError) {
    std::cerr << result.report;
    return result.exit_code;
  }
  return emit(result, opt);
}
