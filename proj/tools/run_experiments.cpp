#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biopsim/config.hpp"
#include "biopsim/errors.hpp"
#include "biopsim/experiments.hpp"
#include "biopsim/report.hpp"

namespace fs = std::filesystem;
using namespace biopsim;

int main(int argc, char** argv) {
  CLI::App app{"Run the tracking, admittance and insertion experiments and gate their metrics"};
  std::string which = "all";
  std::string config_path;
  std::string out_dir = "experiment-out";
  std::optional<std::uint64_t> seed;
  bool serial = false;
  app.add_option("experiment", which, "tracking|admittance|insertion|all")
      ->check(CLI::IsMember({"tracking", "admittance", "insertion", "all"}));
  app.add_option("--config", config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory for logs and reports");
  app.add_option("--seed", seed, "Seed for every scenario and the wrench schedule");
  app.add_flag("--serial", serial, "Run scenarios one after another");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config = default_experiment_config();
    if (!config_path.empty()) {
      const fs::path p(config_path);
      config = experiment_config_from_json(read_json_file(p), p.parent_path());
    }
    if (seed) config.seed = *seed;
    if (serial) config.parallel = false;
    config.out_dir = fs::path(out_dir);
    fs::create_directories(*config.out_dir);

    std::vector<MetricsReport> reports;
    if (which == "tracking" || which == "all") reports.push_back(experiment_tracking(config));
    if (which == "admittance" || which == "all") reports.push_back(experiment_admittance(config));
    if (which == "insertion" || which == "all") reports.push_back(experiment_insertion(config));

    bool pass = true;
    for (const auto& r : reports) {
      const fs::path base = *config.out_dir / (r.experiment + "_report");
      emit_report(r, ReportFormat::text, base.string() + ".txt");
      emit_report(r, ReportFormat::csv, base.string() + ".csv");
      emit_report(r, ReportFormat::json_lines, base.string() + ".jsonl");
      std::cout << report_text(r);
      pass = pass && r.passed();
    }
    std::cout << (pass ? "ALL GATES PASS" : "GATES FAILED") << '\n';
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "run-experiments: " << e.what() << '\n';
    return 2;
  }
}
