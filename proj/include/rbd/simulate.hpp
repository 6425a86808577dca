#pragma once

#include <cstdint>
#include <vector>

#include "rbd/collision.hpp"
#include "rbd/dynamics.hpp"

namespace rbd {

/// Recording interval of every trajectory (50 Hz).
inline constexpr double kSampleInterval = 0.02;
/// Default ground-truth integration step.
inline constexpr double kDefaultFineDt = 1e-3;

struct Trajectory {
  SystemState initial;
  double sample_interval = kSampleInterval;
  double fine_dt = kDefaultFineDt;
  std::vector<double> times;
  /// samples[k][b] is body b at times[k]; samples[0] equals initial.bodies.
  std::vector<std::vector<RigidBodyState>> samples;
  std::vector<CollisionEvent> events;
  double max_renorm_correction = 0.0;

  std::size_t substeps() const;
  /// SystemState at sample k (params and environment from the initial state).
  SystemState state_at(std::size_t k) const;
};

/// Number of fine steps per sample interval; throws Errc::invalid_argument when
/// fine_dt does not divide the interval.
std::size_t substeps_per_sample(double fine_dt);

/// RK4 at fine_dt with collision resolution after every fine step, recording
/// round(duration * 50) + 1 samples.
Trajectory simulate(const SystemState& initial, double duration, double fine_dt = kDefaultFineDt);

}  // namespace rbd
