#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "biopsim/config.hpp"
#include "biopsim/defaults.hpp"
#include "biopsim/errors.hpp"
#include "biopsim/experiments.hpp"
#include "biopsim/log_csv.hpp"

using namespace biopsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biopsim-test-" + name + "-" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(ChainJson, RoundTripKeepsKinematics) {
  const KinematicChain arm = approximate_youbot_arm();
  const KinematicChain back = chain_from_json(chain_to_json(arm));
  ASSERT_EQ(back.dof(), arm.dof());
  const Eigen::VectorXd q = youbot_working_configuration();
  EXPECT_LT((forward_kinematics(back, q).position - forward_kinematics(arm, q).position).norm(), 1e-15);
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    EXPECT_EQ(back.links()[i].mass, arm.links()[i].mass);
    EXPECT_EQ(back.joints()[i].lower_limit, arm.joints()[i].lower_limit);
  }
}

TEST(ChainJson, ErrorsNameTheProblem) {
  try {
    chain_from_json(json::parse(R"({"joints": [{"axis": [0, 0, 1]}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("link"), std::string::npos);
  }
  EXPECT_THROW(chain_from_json(json::parse(R"({"joints": 3})")), ConfigError);
  EXPECT_THROW(chain_from_json(json::parse(R"({"joints": [{"axis": [0, 0], "link": {"mass": 1}}]})")), ConfigError);
  EXPECT_THROW(chain_from_json(json::parse(R"({"joints": [{"axis": [0, 0, 1], "link": {"mass": -1}}]})")),
               ConfigError);
}

TEST(ChainJson, AxisAngleRotationForm) {
  const json j = json::parse(R"({"joints": [{"axis": [0, 0, 2],
      "offset": {"translation": [0, 0, 0.1], "rotation": {"axis": [1, 0, 0], "angle": 1.5707963267948966}},
      "link": {"mass": 1, "com": [0, 0, 0], "inertia": [0.1, 0.1, 0.1, 0, 0, 0]}}]})");
  const KinematicChain c = chain_from_json(j);
  EXPECT_NEAR((c.joints()[0].axis - Eigen::Vector3d::UnitZ()).norm(), 0.0, 1e-15);
  EXPECT_NEAR(c.joints()[0].offset.rotation(2, 1), 1.0, 1e-15);
}

TEST(GainsJson, PartialOverrideKeepsBase) {
  GainSet base;
  base.insertion_kp = 12.0;
  const GainSet g = gains_from_json(json::parse(R"({"kd": [1, 2, 3, 4, 5, 6]})"), base);
  EXPECT_EQ(g.insertion_kp, 12.0);
  EXPECT_EQ(g.kd[5], 6.0);
  EXPECT_EQ(g.kp, base.kp);
  EXPECT_THROW(gains_from_json(json::parse(R"({"kp": [1, 2]})")), ConfigError);
  EXPECT_THROW(gains_from_json(json::parse(R"({"insertion_ko": -1})")), ConfigError);
}

TEST(ScenarioJson, RoundTripIsStable) {
  auto scenarios = insertion_scenarios(default_experiment_config());
  scenarios.push_back(tracking_scenarios(default_experiment_config())[1]);
  scenarios.push_back(admittance_scenario(default_experiment_config()));
  for (Scenario s : scenarios) {
    s.duration = 0.2;
    const json once = scenario_to_json(s);
    const Scenario back = scenario_from_json(once);
    EXPECT_EQ(scenario_to_json(back), once) << s.name;
    EXPECT_EQ(log_csv(run(back)), log_csv(run(s))) << s.name;
  }
}

TEST(ScenarioJson, LoadsChainRelativeToTheFile) {
  const fs::path dir = temp_dir("chain");
  std::ofstream(dir / "arm.json") << chain_to_json(approximate_youbot_arm()).dump();
  json j = {{"chain", "arm.json"}, {"mode", "insert"}, {"tissue", {{"setup", 2}}}, {"duration", 0.01}};
  std::ofstream(dir / "scenario.json") << j.dump();
  const Scenario s = load_scenario(dir / "scenario.json");
  EXPECT_EQ(s.chain.dof(), 5u);
  EXPECT_EQ(s.tissue.name(), "setup2-skin2-duct15");
  EXPECT_EQ(s.mode, Mode::insert);
  fs::remove_all(dir);
}

TEST(ScenarioJson, RejectsBadInput) {
  const json chain = chain_to_json(approximate_youbot_arm());
  EXPECT_THROW(scenario_from_json(json::array()), ConfigError);
  EXPECT_THROW(scenario_from_json(json{{"mode", "track"}}), ConfigError);
  EXPECT_THROW(scenario_from_json(json{{"chain", chain}, {"mode", "dance"}}), ConfigError);
  EXPECT_THROW(scenario_from_json(json{{"chain", chain}, {"dt", 0}}), ConfigError);
  EXPECT_THROW(scenario_from_json(json{{"chain", chain}, {"initial_q", {0, 0}}}), ConfigError);
  EXPECT_THROW(scenario_from_json(json{{"chain", chain}, {"trajectory", {{"kind", "spiral"}}}}), ConfigError);
  EXPECT_THROW(scenario_from_json(json{{"chain", chain}, {"tissue", {{"setup", 7}}}}), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(ScenarioJson, MalformedFileIsConfigError) {
  const fs::path dir = temp_dir("malformed");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(ExperimentConfigJson, OverridesAndValidates) {
  const json j = json::parse(R"({"seed": 7, "parallel": false,
      "tracking": {"period": 4, "axes": [2]},
      "insertion": {"speeds": [0.001], "depth": 0.008}})");
  const ExperimentConfig c = experiment_config_from_json(j, ".");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_FALSE(c.parallel);
  EXPECT_EQ(c.tracking.period, 4.0);
  EXPECT_EQ(c.tracking.axes, std::vector<int>{2});
  EXPECT_EQ(c.insertion.speeds.size(), 1u);
  EXPECT_EQ(c.insertion.depth, 0.008);
  EXPECT_EQ(c.tracking.amplitude, 0.05);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"tracking": {"axes": [4]}})"), "."), ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"insertion": {"speeds": []}})"), "."), ConfigError);
}

TEST(LogCsv, HeaderFollowsTheColumnContract) {
  const std::string h = log_csv_header(5);
  EXPECT_EQ(h.rfind("t,q1,q2,q3,q4,q5,dq1,", 0), 0u);
  EXPECT_NE(h.find(",dq5,px,py,pz,ox,oy,oz,xd_px,xd_py,xd_pz,xd_ox,xd_oy,xd_oz,err1,"), std::string::npos);
  EXPECT_NE(h.find(",err6,tau1,"), std::string::npos);
  EXPECT_TRUE(h.ends_with(",tau5,depth,theta,v,F_t,event_flags"));
  EXPECT_EQ(std::count(h.begin(), h.end(), ','), 24 + 3 * 5 - 1);
}

TEST(LogCsv, RoundTripIsByteExact) {
  Scenario s = insertion_scenarios(default_experiment_config())[3];
  s.duration = 2.5;
  const auto log = run(s);
  const std::string text = log_csv(log);
  std::istringstream in(text);
  const auto back = read_log_csv(in);
  ASSERT_EQ(back.size(), log.size());
  EXPECT_EQ(log_csv(back), text);
  for (std::size_t k = 0; k < log.size(); k += 97) {
    EXPECT_EQ(back[k].force, log[k].force);
    EXPECT_EQ(back[k].events, log[k].events);
    EXPECT_EQ(back[k].q, log[k].q);
  }
}

TEST(LogCsv, FormatDoubleIsShortestRoundTrip) {
  for (double v : {0.0, 0.1, 1e-3, -2.5e-17, 1.0 / 3.0, 6.02214076e23}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(LogCsv, RejectsSchemaMismatch) {
  std::istringstream bad_header("t,q1,x\n0,0,0\n");
  EXPECT_THROW(read_log_csv(bad_header), IoError);
  std::istringstream short_row(log_csv_header(1) + "\n0,1,2\n");
  EXPECT_THROW(read_log_csv(short_row), IoError);
}

TEST(ShippedConfigs, ExperimentFileMatchesBuiltInDefaults) {
  const fs::path dir = fs::path(BIOPSIM_SOURCE_DIR) / "configs";
  const auto loaded = experiment_config_from_json(read_json_file(dir / "experiments.json"), dir);
  const auto builtin = default_experiment_config();
  const auto a = insertion_scenarios(loaded);
  const auto b = insertion_scenarios(builtin);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(scenario_to_json(a[i]), scenario_to_json(b[i]));
  EXPECT_EQ(scenario_to_json(admittance_scenario(loaded)), scenario_to_json(admittance_scenario(builtin)));
  EXPECT_EQ(scenario_to_json(tracking_scenarios(loaded)[2]), scenario_to_json(tracking_scenarios(builtin)[2]));
}

TEST(ShippedConfigs, ScenarioFilesMatchBuiltInScenarios) {
  const fs::path dir = fs::path(BIOPSIM_SOURCE_DIR) / "configs" / "scenarios";
  const auto config = default_experiment_config();
  std::vector<Scenario> builtin = tracking_scenarios(config);
  builtin.push_back(admittance_scenario(config));
  for (const auto& s : insertion_scenarios(config)) builtin.push_back(s);
  std::size_t found = 0;
  for (const auto& s : builtin) {
    const fs::path file = dir / (s.name + ".json");
    if (!fs::exists(file)) continue;
    ++found;
    EXPECT_EQ(scenario_to_json(load_scenario(file)), scenario_to_json(s)) << file;
  }
  EXPECT_EQ(found, 4u);
}
