#pragma once

// Scenario configuration and the analysis pipelines behind the CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oncodyn/basin.hpp"
#include "oncodyn/equilibrium.hpp"
#include "oncodyn/integrator.hpp"
#include "oncodyn/multipoint_ivp.hpp"
#include "oncodyn/tumor_model.hpp"

namespace oncodyn {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "oncodyn 0.1.0";

struct MultipointConfig {
  std::vector<Vec3> alphas;
  std::vector<double> phase_times;
  double delta = 1.0;
  double tol = 1e-10;
  int max_iter = 100;
  double damping = 1.0;
};

struct StructuralConfig {
  InvariantBox box;
  int grid_n = 11;
  int positivity_starts = 20;
  double positivity_horizon = 100.0;
};

struct LyapunovConfig {
  double region_halfwidth = 0.2;
  int grid_n = 11;
};

struct BasinConfig {
  double r_max = 1.0;
  int n_shell_samples = 2000;
  double margin = 0.01;
};

struct StabilityConfig {
  int probe_starts = 50;
  double probe_radius = 1e-3;
  double probe_horizon = 200.0;
};

struct OutputConfig {
  int resample_points = 101;
  std::vector<std::pair<std::string, std::string>> phase_axes;
  int dump_trajectories = 0;
};

struct Scenario {
  ModelParams params;
  H2Sign h2_sign = H2Sign::GeneralMinus;
  Vec3 initial_state{0.4, 0.6, 0.1};
  double t0 = 0.0;
  double t_end = 50.0;
  std::optional<MultipointConfig> multipoint;
  IntegratorSettings integrator;
  SamplingPlan sampling;
  std::vector<std::string> analyses;
  StructuralConfig structural;
  LyapunovConfig lyapunov;
  BasinConfig basin;
  StabilityConfig stability;
  OutputConfig output;

  [[nodiscard]] bool wants(const std::string& analysis) const;
  [[nodiscard]] MultipointCondition multipoint_condition() const;
};

/// Validates and resolves defaults. Throws ConfigError naming the offending
/// key; unknown keys are rejected.
Scenario parse_scenario(const Json& config);
Scenario load_scenario(const std::filesystem::path& path);

/// Fully resolved configuration, sufficient to re-run the scenario.
Json scenario_to_json(const Scenario& s);

enum class RunMode { Simulate, Analyze, Verify };

struct RunOptions {
  RunMode mode = RunMode::Analyze;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the scenario and writes report.json, timings.json, trajectory.csv
/// and phase_<a>_<b>.csv into the output directory. Returns 0, 2 on a
/// configuration error or 3 on a numerical failure (partial report written).
int run(const std::filesystem::path& config_path, const RunOptions& options);

/// Long-format phase data: header traj_id,t,<a1>,<a2>.
void write_phase_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajs,
                     const std::string& axis1, const std::string& axis2);

/// Trajectory rows at accepted steps merged with a uniform grid of
/// `resample_points` times; header t,x1,x2,x3.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          int resample_points);

}  // namespace oncodyn
