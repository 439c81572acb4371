// selfdual: run one experiment from a JSON config.
#include "selfdual/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  namespace cli = selfdual::cli;
  CLI::App app{"Selfdual variational solvers driven by JSON configs"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list-catalog", list, "Print the built-in operators, Lagrangian forms and functions");

  std::string config, report, csv;
  for (const auto& name : cli::commands()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("-c,--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", report, "JSON report path (overrides the config)");
    sub->add_option("--csv", csv, "CSV data path (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list) {
    std::cout << cli::catalog().dump(2) << '\n';
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    cli::ExperimentConfig cfg = cli::load_config(config, command);
    if (!report.empty()) cfg.report_path = report;
    if (!csv.empty()) cfg.csv_path = csv;
    return cli::run(cfg, std::cout, std::cerr);
  } catch (const cli::ConfigError& e) {
    std::cerr << e.format(config) << '\n';
    return 2;
  }
}
