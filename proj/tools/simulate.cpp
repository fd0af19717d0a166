#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "biopsim/config.hpp"
#include "biopsim/errors.hpp"
#include "biopsim/log_csv.hpp"
#include "biopsim/sim_engine.hpp"

using namespace biopsim;

int main(int argc, char** argv) {
  CLI::App app{"Run one scenario file and write its log as CSV"};
  std::string scenario_path;
  std::string out_path = "-";
  std::optional<std::uint64_t> seed;
  app.add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "CSV output path, '-' for stdout");
  app.add_option("--seed", seed, "Override the scenario seed");
  CLI11_PARSE(app, argc, argv);

  try {
    Scenario scenario = load_scenario(scenario_path);
    if (seed) scenario.seed = *seed;
    const auto records = run(scenario);
    if (out_path == "-") {
      write_log_csv(std::cout, records);
    } else {
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + out_path);
      write_log_csv(out, records);
    }
    return 0;
  } catch (const SimulationError& e) {
    std::cerr << "simulate: " << e.what() << " (last valid record " << e.last_valid_record() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    return 2;
  }
}
