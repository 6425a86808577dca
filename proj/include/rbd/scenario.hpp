#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rbd/random.hpp"
#include "rbd/simulate.hpp"

namespace rbd {

/// Ranges a random scenario is drawn from. Every range is closed and sampled uniformly.
struct ScenarioConfig {
  int min_bodies = 3;
  int max_bodies = 5;
  double mass_min = 0.5, mass_max = 2.0;
  double radius_min = 0.2, radius_max = 0.5;
  double position_min = 0.0, position_max = 4.0;
  double velocity_max = 2.0;
  double angular_velocity_max = 3.0;
  double force_max = 5.0;
  double torque_max = 0.02;
  double restitution_min = 0.5, restitution_max = 1.0;
  double linear_drag_max = 0.5;
  double angular_damping_max = 0.1;
  bool gravity = true;
  /// Forces every scenario conservative.
  bool conservative = false;
  /// Probability that a scenario is conservative when `conservative` is off.
  double conservative_fraction = 0.2;
};

/// Throws Errc::invalid_argument naming the offending field.
void validate(const ScenarioConfig& cfg);

inline constexpr double kStandardGravity = 9.81;
inline constexpr int kMaxBodies = 5;
inline constexpr int kMinBodies = 3;

struct ScenarioFlags {
  bool conservative = false;
  bool gravity = true;

  std::uint8_t bits() const { return static_cast<std::uint8_t>((conservative ? 1 : 0) | (gravity ? 2 : 0)); }
  static ScenarioFlags from_bits(std::uint8_t b) { return {(b & 1) != 0, (b & 2) != 0}; }
  bool operator==(const ScenarioFlags&) const = default;
};

struct Scenario {
  std::uint64_t seed = 0;
  ScenarioFlags flags;
  Trajectory trajectory;
};

struct SampledScenario {
  ScenarioFlags flags;
  SystemState state;
};

/// Deterministic in (seed, cfg). Bodies are solid spheres, (2/5) m r² isotropic
/// inertia, placed without overlap. Throws Errc::cube_too_crowded after 1000
/// consecutive rejected placements.
SampledScenario sample_scenario(std::uint64_t seed, const ScenarioConfig& cfg);

/// Per-scenario seed derived from the global seed.
constexpr std::uint64_t scenario_seed(std::uint64_t global_seed, std::uint64_t index) {
  return splitmix64(global_seed ^ index);
}

/// Samples and simulates `count` scenarios across `threads` workers; the result
/// does not depend on the thread count.
std::vector<Scenario> generate_scenarios(std::uint64_t global_seed, std::size_t count, const ScenarioConfig& cfg,
                                         double duration, double fine_dt, unsigned threads = 1);

// Record layout: each of the 5 body slots holds 19 input features
// (position 3, quaternion wxyz 4, linear velocity 3, angular velocity 3,
// force 3, torque 3), followed by a 5-entry body mask. Targets hold 13 state
// features per slot. Unused slots carry the identity quaternion and zeros.
inline constexpr std::size_t kStateFeatures = 13;
inline constexpr std::size_t kInputFeaturesPerBody = 19;
inline constexpr std::size_t kInputDim = kMaxBodies * kInputFeaturesPerBody + kMaxBodies;  // 100
inline constexpr std::size_t kTargetDim = kMaxBodies * kStateFeatures;                     // 65
inline constexpr std::size_t kMaskOffset = kMaxBodies * kInputFeaturesPerBody;              // 95

struct SampleRecord {
  std::array<double, kInputDim> input{};
  std::array<double, kTargetDim> target{};
  std::uint64_t scenario = 0;
  std::uint32_t step = 0;

  bool active(std::size_t body) const { return input[kMaskOffset + body] != 0.0; }
  std::size_t body_count() const;
};

/// 13 state features of a body, in record order.
std::array<double, kStateFeatures> state_features(const RigidBodyState& b);
RigidBodyState state_from_features(std::span<const double, kStateFeatures> f);

/// Input vector for a system state (params supply the constant external load).
std::array<double, kInputDim> encode_input(const SystemState& sys);
std::array<double, kTargetDim> encode_target(const std::vector<RigidBodyState>& bodies);

/// One record per consecutive sample pair.
std::vector<SampleRecord> make_records(const Trajectory& traj, std::uint64_t scenario_id = 0);

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

/// Shuffled per-scenario assignment. Validation and test counts are floor(n·ratio);
/// the remainder goes to training. Throws for fewer than 3 scenarios.
std::vector<Split> split_dataset(std::size_t scenario_count, std::array<double, 3> ratios, std::uint64_t seed);

/// What the network regresses: the next state, or its difference from the current one.
enum class TargetMode : std::uint8_t { absolute = 0, delta = 1 };

/// Per-feature z-score statistics. Body-slot features are only fit on records
/// where that slot is active; inactive slots and the mask use mean 0, std 1.
struct Normalizer {
  static constexpr double kMinStd = 1e-8;

  TargetMode mode = TargetMode::absolute;
  std::array<double, kInputDim> input_mean{};
  std::array<double, kInputDim> input_std{};
  std::array<double, kTargetDim> target_mean{};
  std::array<double, kTargetDim> target_std{};

  Normalizer();

  /// Input/target normalization is identity on slots the record masks out.
  std::array<double, kInputDim> apply_input(const std::array<double, kInputDim>& x) const;
  std::array<double, kInputDim> invert_input(const std::array<double, kInputDim>& z) const;
  /// `input` is the raw (unnormalized) input the target belongs to; it supplies
  /// the mask and, in delta mode, the reference state.
  std::array<double, kTargetDim> apply_target(const std::array<double, kTargetDim>& y,
                                              const std::array<double, kInputDim>& input) const;
  std::array<double, kTargetDim> invert_target(const std::array<double, kTargetDim>& z,
                                               const std::array<double, kInputDim>& input) const;

  SampleRecord apply(const SampleRecord& r) const;
  SampleRecord invert(const SampleRecord& r) const;

  bool operator==(const Normalizer&) const = default;
};

/// Needs at least two records.
Normalizer fit_normalizer(std::span<const SampleRecord> train, TargetMode mode = TargetMode::absolute);

}  // namespace rbd
