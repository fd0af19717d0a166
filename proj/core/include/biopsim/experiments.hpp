#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biopsim/metrics.hpp"
#include "biopsim/report.hpp"
#include "biopsim/sim_engine.hpp"

namespace biopsim {

struct TrackingExperiment {
  double amplitude = 0.05;  // m
  double period = 8.0;      // s
  double periods = 3.0;
  std::vector<int> axes{0, 1, 2};
  double mean_gate = 1e-3;           // m
  double std_gate_fraction = 0.06;   // of the amplitude
};

struct AdmittanceExperiment {
  double push_force = 2.0;      // N, mean magnitude
  double force_jitter = 0.5;    // N, uniform ± around push_force
  double push_min = 0.3;        // s
  double push_max = 0.6;        // s
  double hold = 1.0;            // s
  double lead_in = 0.2;         // s of rest before the first push
  std::vector<int> axes{0, 1, 2};
  double drift_gate = 0.5e-3;   // m
  double retain_gate = 0.1e-3;  // m, end of hold vs its settled pose
};

struct InsertionExperiment {
  std::vector<double> speeds{1e-3, 2e-3};  // m/s
  double depth = 10e-3;                     // m
  double settle = 0.5;                      // s after the ramp
  double error_gate_percent = 2.0;
  double puncture_depth = 2e-3;
  double puncture_tolerance = 0.5e-3;
  DropThreshold drop;
};

struct ExperimentConfig {
  /// Arm, gains, dt and everything not set by the experiments themselves.
  Scenario base;
  TrackingExperiment tracking;
  AdmittanceExperiment admittance;
  InsertionExperiment insertion;
  std::uint64_t seed = 1;
  /// Run the scenarios of one experiment concurrently.
  bool parallel = true;
  /// When set, every scenario's log CSV and scenario JSON are written here.
  std::optional<std::filesystem::path> out_dir;
};

/// Built-in configuration: approximate youBot arm at its working
/// configuration, default gains, 1 kHz.
ExperimentConfig default_experiment_config();

/// Keys present in `j` override `base`; see docs/config.md.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir,
                                             ExperimentConfig base = default_experiment_config());

std::vector<Scenario> tracking_scenarios(const ExperimentConfig& config);
/// The single admittance scenario with its seeded push/hold schedule.
Scenario admittance_scenario(const ExperimentConfig& config);
std::vector<Scenario> insertion_scenarios(const ExperimentConfig& config);

MetricsReport tracking_report(const std::vector<Scenario>& scenarios,
                              const std::vector<std::vector<LogRecord>>& logs,
                              const ExperimentConfig& config);
MetricsReport admittance_report(const Scenario& scenario, const std::vector<LogRecord>& log,
                                const ExperimentConfig& config);
MetricsReport insertion_report(const std::vector<Scenario>& scenarios,
                               const std::vector<std::vector<LogRecord>>& logs,
                               const ExperimentConfig& config);

MetricsReport experiment_tracking(const ExperimentConfig& config = default_experiment_config());
MetricsReport experiment_admittance(const ExperimentConfig& config = default_experiment_config());
MetricsReport experiment_insertion(const ExperimentConfig& config = default_experiment_config());

/// Runs every scenario, concurrently when `parallel`; results keep input order.
std::vector<std::vector<LogRecord>> run_all(const std::vector<Scenario>& scenarios, bool parallel);

}  // namespace biopsim
