#include "rbd/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "rbd/error.hpp"

namespace rbd {

std::size_t substeps_per_sample(double fine_dt) {
  if (!(fine_dt > 0.0) || !std::isfinite(fine_dt)) throw Error(Errc::invalid_argument, "fine_dt must be positive");
  const double ratio = kSampleInterval / fine_dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(rounded * fine_dt - kSampleInterval) > 1e-12) {
    throw Error(Errc::invalid_argument, "fine_dt must divide the 0.02 s sample interval");
  }
  return static_cast<std::size_t>(rounded);
}

std::size_t Trajectory::substeps() const { return substeps_per_sample(fine_dt); }

SystemState Trajectory::state_at(std::size_t k) const {
  SystemState s{samples.at(k), initial.params, initial.env, times.at(k)};
  return s;
}

Trajectory simulate(const SystemState& initial, double duration, double fine_dt) {
  validate(initial);
  if (!(duration > 0.0) || !std::isfinite(duration)) throw Error(Errc::invalid_argument, "duration must be positive");
  const std::size_t substeps = substeps_per_sample(fine_dt);
  const auto n_samples = static_cast<std::size_t>(std::llround(duration / kSampleInterval));

  Trajectory traj;
  traj.initial = initial;
  traj.fine_dt = fine_dt;
  traj.times.reserve(n_samples + 1);
  traj.samples.reserve(n_samples + 1);
  traj.times.push_back(initial.time);
  traj.samples.push_back(initial.bodies);

  SystemState sys = initial;
  std::uint64_t fine_step = 0;
  for (std::size_t k = 1; k <= n_samples; ++k) {
    for (std::size_t s = 0; s < substeps; ++s) {
      StepResult step = rk4_step_tracked(sys, fine_dt);
      traj.max_renorm_correction = std::max(traj.max_renorm_correction, step.max_renorm_correction);
      ++fine_step;
      ResolveResult resolved = resolve_all(step.state, fine_step, k);
      sys = std::move(resolved.state);
      traj.events.insert(traj.events.end(), resolved.events.begin(), resolved.events.end());
      sys.time = initial.time + static_cast<double>(fine_step) * fine_dt;
    }
    sys.time = initial.time + static_cast<double>(k) * kSampleInterval;
    traj.times.push_back(sys.time);
    traj.samples.push_back(sys.bodies);
  }
  return traj;
}

}  // namespace rbd
