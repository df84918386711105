#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "opflow/experiments.hpp"

namespace ex = opflow::experiments;

namespace {

bool read_file(const std::string& path, std::string& out)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

std::optional<ex::ScenarioConfig> load(const std::string& path)
{
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "CONFIG_INVALID: cannot read " << path << "\n";
    return std::nullopt;
  }
  std::vector<std::string> problems;
  auto cfg = ex::parse_config(text, problems);
  if (!cfg) {
    std::cerr << "CONFIG_INVALID: " << path << "\n";
    for (const std::string& p : problems) std::cerr << "  " << p << "\n";
  }
  return cfg;
}

int cmd_list()
{
  for (const ex::CatalogEntry& e : ex::catalog()) {
    std::cout << ex::name(e.kind) << "\n  " << e.summary << "\n  csv: " << e.csv_columns << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& path)
{
  const auto cfg = load(path);
  if (!cfg) return 2;
  std::cout << "ok\n" << ex::to_json(*cfg).dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& path, const std::string& out, bool quiet)
{
  const auto cfg = load(path);
  if (!cfg) return 2;
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(cfg->output) : std::filesystem::path(out);
  const ex::ExitReport report = ex::run(*cfg, dir);
  if (!quiet) {
    for (const ex::Check& c : report.checks) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  measured=" << ex::format_double(c.measured)
                << "  bound=" << ex::format_double(c.bound) << "\n";
    }
    if (!report.error.empty()) std::cout << report.error << "\n";
    std::cout << "status: " << report.status << "\n";
    if (!report.csv_path.empty()) std::cout << "csv: " << report.csv_path.string() << "\n";
    std::cout << "report: " << report.report_path.string() << "\n";
  }
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Numerical experiments for one-parameter flows on finite-dimensional C*-algebras"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "run the experiment named in a config");
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out, "output directory (overrides the config)");
  run->add_flag("--quiet", quiet, "print nothing on success or failure");

  CLI::App* validate = app.add_subcommand("validate", "check a config without running anything");
  validate->add_option("config", config, "config file")->required();

  app.add_subcommand("list", "list experiments and their CSV columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config, out, quiet);
    if (*validate) return cmd_validate(config);
    return cmd_list();
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}
