#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "biopsim/control.hpp"
#include "biopsim/kinematics.hpp"
#include "biopsim/sim_engine.hpp"
#include "biopsim/tissue.hpp"

namespace biopsim {

// JSON schemas are documented in docs/config.md. Every parser throws
// ConfigError naming the offending key.

KinematicChain chain_from_json(const nlohmann::json& j);
nlohmann::json chain_to_json(const KinematicChain& chain);
KinematicChain load_chain(const std::filesystem::path& path);

/// Keys absent from `j` keep the value in `base`.
GainSet gains_from_json(const nlohmann::json& j, GainSet base = {});
nlohmann::json gains_to_json(const GainSet& gains);

VirtualImpedance impedance_from_json(const nlohmann::json& j, VirtualImpedance base = {});
TissueSample tissue_from_json(const nlohmann::json& j);
ToolSpec tool_from_json(const nlohmann::json& j, ToolSpec base = {});
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const Pose& pose);

/// Relative chain paths resolve against `base_dir`.
Scenario scenario_from_json(const nlohmann::json& j,
                            const std::filesystem::path& base_dir = std::filesystem::path("."));
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace biopsim
