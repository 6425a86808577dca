#pragma once

// Evaluation bench: per-component error metrics, energy drift, autoregressive
// rollouts, collision-category breakdowns, inference timing and the combined
// comparison report.
//
// Conventions used throughout the report:
//  * MSE of a component is the mean squared error over the scalar features of
//    that component for every active body (e.g. position averages over x, y, z).
//  * Predicted quaternions are renormalized and sign-aligned to the target
//    (dot >= 0) before scoring.
//  * Relative error skips scalar targets with |y| < 1e-6 and reports how many
//    were skipped.

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rbd/dataset_io.hpp"
#include "rbd/predictor.hpp"

namespace rbd {

enum class Component { position = 0, orientation = 1, linear_velocity = 2, angular_velocity = 3 };
inline constexpr std::array<Component, 4> kComponents{Component::position, Component::orientation,
                                                      Component::linear_velocity, Component::angular_velocity};
std::string_view component_name(Component c);
std::string_view component_unit(Component c);

/// One scored prediction in physical units.
struct Prediction {
  std::array<double, kTargetDim> predicted{};
  std::array<double, kTargetDim> target{};
  std::array<bool, kMaxBodies> active{};
};

/// Builds a Prediction, renormalizing predicted quaternions (zero-norm ones are left as is).
Prediction make_prediction(const std::vector<RigidBodyState>& predicted, const std::vector<RigidBodyState>& target);

/// Throws Errc::invalid_argument for an empty set.
double mse_component(std::span<const Prediction> set, Component c);

struct RelativeError {
  double percent = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

inline constexpr double kRelativeErrorGuard = 1e-6;

/// Throws Errc::degenerate_targets when every feature falls under the guard.
RelativeError relative_error(std::span<const Prediction> set, Component c);

/// Mean rotation angle (degrees) between predicted and target orientations.
double geodesic_angle_deg(std::span<const Prediction> set);

/// |E_final - E_initial| / |E_initial| in percent.
double relative_energy_drift(double e_initial, double e_final);

struct EnergyConservation {
  double percent = 0.0;
  std::size_t scenarios = 0;
};

/// Minimum |E_initial| for a scenario to count towards energy conservation error.
inline constexpr double kMinInitialEnergy = 1.0;

/// Mean drift over conservative scenarios with |E_initial| >= 1 J after a
/// `steps`-step rollout. Throws Errc::no_qualifying_scenarios if none qualify.
EnergyConservation energy_conservation_error(const Predictor& predictor, std::span<const Scenario> scenarios,
                                             std::size_t steps);

/// Feeds predictions back as inputs for `steps` steps. Quaternions are
/// renormalized and sign-aligned to the previous step. Element 0 is the initial
/// state. Throws Errc::prediction_diverged naming the step on non-finite output.
std::vector<std::vector<RigidBodyState>> predict_rollout(const Predictor& predictor, const SystemState& initial,
                                                         std::size_t steps);

struct RolloutResult {
  std::vector<std::vector<RigidBodyState>> predicted;  // steps + 1 states
  std::vector<std::vector<RigidBodyState>> truth;      // steps + 1 states
  std::vector<double> step_error;                      // per step 1..steps
  std::vector<double> cumulative;                      // running sum of step_error
};

/// Squared state error averaged over bodies (13 features, quaternion sign-aligned).
double state_squared_error(const std::vector<RigidBodyState>& predicted, const std::vector<RigidBodyState>& truth);
std::vector<double> cumulative_error(std::span<const double> step_error);

/// Autoregressive rollout against a fine re-simulation of the same initial state.
RolloutResult rollout(const Predictor& predictor, const SystemState& initial, std::size_t steps,
                      double fine_dt = kDefaultFineDt);

enum class Category { none = 0, single = 1, multiple = 2, simultaneous = 3 };
std::string_view category_name(Category c);

/// none: no events; single: one; simultaneous: two or more share a fine step;
/// multiple: otherwise.
Category categorize_scenario(std::span<const CollisionEvent> events);

struct Timing {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t repeats = 0;
  /// Every timed pass reproduced the warmup predictions bit for bit.
  bool stable = true;
};

/// Per-record single-step prediction time over `repeats` timed passes (one
/// untimed warmup pass first). Throws for an empty record set or repeats < 1.
Timing benchmark_inference(const Predictor& predictor, std::span<const SystemState> systems, std::size_t repeats);

struct Quartiles {
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear-interpolation quartiles; zero count for an empty input.
Quartiles quartiles(std::vector<double> values);

struct MetricsReport {
  std::string predictor;
  std::array<double, 4> mse{};
  std::array<RelativeError, 4> relative{};
  double geodesic_deg = 0.0;
  EnergyConservation ece;
  Timing timing;
  std::map<Category, Quartiles> category_position_mse;
  std::vector<std::vector<double>> rollout_cumulative;  // per rollout scenario
  std::vector<double> mean_cumulative;                  // averaged over scenarios
  std::size_t diverged_rollouts = 0;                    // left out of the curves above
};

struct SuiteOptions {
  std::size_t ece_steps = 250;
  std::size_t rollout_steps = 500;
  std::size_t rollout_scenarios = 5;
  std::size_t timing_repeats = 100;
  std::size_t timing_records = 64;
};

/// Runs every metric for every predictor over the test split of `data`.
/// Conservative test scenarios feed the energy metric; if none exist the
/// energy entry is reported as NaN with a zero scenario count.
std::vector<MetricsReport> evaluate_suite(std::span<const Predictor* const> predictors, const Dataset& data,
                                          const SuiteOptions& options);

inline constexpr int kReportSchemaVersion = 1;

/// CSV: predictor,metric,value,unit with the eleven headline rows per predictor.
std::string report_csv(std::span<const MetricsReport> reports);
/// Structured JSON with every field of every report.
std::string report_json(std::span<const MetricsReport> reports, const SuiteOptions& options);
/// Two columns: t_seconds,E_cumulative.
std::string cumulative_csv(std::span<const double> cumulative);

}  // namespace rbd
