#include "rbd/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>

#include "rbd/error.hpp"

namespace rbd {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_argument, what); }

void check_range(double lo, double hi, const char* name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) invalid(std::string("empty range for ") + name);
}

void check_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) invalid(std::string(name) + " must be nonnegative");
}

Vec3 uniform_box(Xoshiro256pp& rng, double half) {
  const double x = rng.uniform(-half, half);
  const double y = rng.uniform(-half, half);
  const double z = rng.uniform(-half, half);
  return {x, y, z};
}

// Shoemake's method: uniform over the unit 3-sphere.
Quaternion uniform_orientation(Xoshiro256pp& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2;
  const double t3 = 2.0 * std::numbers::pi * u3;
  return quat_normalize({b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3)});
}

constexpr int kMaxPlacementRejections = 1000;

}  // namespace

void validate(const ScenarioConfig& cfg) {
  if (cfg.min_bodies < kMinBodies || cfg.max_bodies > kMaxBodies || cfg.min_bodies > cfg.max_bodies) {
    invalid("body count range must lie within [3,5]");
  }
  check_range(cfg.mass_min, cfg.mass_max, "mass");
  check_range(cfg.radius_min, cfg.radius_max, "radius");
  check_range(cfg.position_min, cfg.position_max, "position");
  check_range(cfg.restitution_min, cfg.restitution_max, "restitution");
  if (!(cfg.mass_min > 0.0)) invalid("mass must be positive");
  if (!(cfg.radius_min > 0.0)) invalid("radius must be positive");
  if (cfg.restitution_min < 0.0 || cfg.restitution_max > 1.0) invalid("restitution must lie in [0,1]");
  check_nonnegative(cfg.velocity_max, "velocity_max");
  check_nonnegative(cfg.angular_velocity_max, "angular_velocity_max");
  check_nonnegative(cfg.force_max, "force_max");
  check_nonnegative(cfg.torque_max, "torque_max");
  check_nonnegative(cfg.linear_drag_max, "linear_drag_max");
  check_nonnegative(cfg.angular_damping_max, "angular_damping_max");
  if (!(cfg.conservative_fraction >= 0.0 && cfg.conservative_fraction <= 1.0)) {
    invalid("conservative_fraction must lie in [0,1]");
  }
}

SampledScenario sample_scenario(std::uint64_t seed, const ScenarioConfig& cfg) {
  validate(cfg);
  Xoshiro256pp rng(seed);
  SampledScenario out;

  const auto span = static_cast<std::uint64_t>(cfg.max_bodies - cfg.min_bodies + 1);
  const auto n = static_cast<std::size_t>(cfg.min_bodies) + static_cast<std::size_t>(rng.below(span));
  const bool conservative_draw = rng.uniform() < cfg.conservative_fraction;
  out.flags.conservative = cfg.conservative || conservative_draw;
  out.flags.gravity = cfg.gravity;

  Environment& env = out.state.env;
  env.gravity = cfg.gravity ? Vec3{0.0, 0.0, -kStandardGravity} : Vec3{};
  const double restitution = rng.uniform(cfg.restitution_min, cfg.restitution_max);
  const double drag = rng.uniform(0.0, cfg.linear_drag_max);
  const double damping = rng.uniform(0.0, cfg.angular_damping_max);
  env.restitution = out.flags.conservative ? 1.0 : restitution;
  env.linear_drag = out.flags.conservative ? 0.0 : drag;
  env.angular_damping = out.flags.conservative ? 0.0 : damping;

  out.state.bodies.resize(n);
  out.state.params.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    BodyParams& p = out.state.params[b];
    RigidBodyState& s = out.state.bodies[b];
    p.mass = rng.uniform(cfg.mass_min, cfg.mass_max);
    p.radius = rng.uniform(cfg.radius_min, cfg.radius_max);
    const double inertia = 0.4 * p.mass * p.radius * p.radius;
    p.inertia_body_diag = {inertia, inertia, inertia};
    s.orientation = uniform_orientation(rng);
    s.linear_velocity = uniform_box(rng, cfg.velocity_max);
    s.angular_velocity = uniform_box(rng, cfg.angular_velocity_max);
    const Vec3 force = uniform_box(rng, cfg.force_max);
    const Vec3 torque = uniform_box(rng, cfg.torque_max);
    p.external_force = out.flags.conservative ? Vec3{} : force;
    p.external_torque = out.flags.conservative ? Vec3{} : torque;
  }

  for (std::size_t b = 0; b < n; ++b) {
    int rejections = 0;
    while (true) {
      const double x = rng.uniform(cfg.position_min, cfg.position_max);
      const double y = rng.uniform(cfg.position_min, cfg.position_max);
      const double z = rng.uniform(cfg.position_min, cfg.position_max);
      const Vec3 candidate{x, y, z};
      bool clear = true;
      for (std::size_t o = 0; o < b; ++o) {
        const double gap = norm(candidate - out.state.bodies[o].position);
        if (!(gap > out.state.params[o].radius + out.state.params[b].radius)) {
          clear = false;
          break;
        }
      }
      if (clear) {
        out.state.bodies[b].position = candidate;
        break;
      }
      if (++rejections >= kMaxPlacementRejections) {
        throw Error(Errc::cube_too_crowded, "cube too crowded (scenario seed " + std::to_string(seed) + ")");
      }
    }
  }
  return out;
}

std::vector<Scenario> generate_scenarios(std::uint64_t global_seed, std::size_t count, const ScenarioConfig& cfg,
                                         double duration, double fine_dt, unsigned threads) {
  validate(cfg);
  std::vector<Scenario> out(count);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const std::uint64_t seed = scenario_seed(global_seed, i);
        SampledScenario sampled = sample_scenario(seed, cfg);
        out[i].seed = seed;
        out[i].flags = sampled.flags;
        out[i].trajectory = simulate(sampled.state, duration, fine_dt);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        // Report the lowest failing index so the error is independent of scheduling.
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::size_t SampleRecord::body_count() const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < kMaxBodies; ++b) n += active(b) ? 1 : 0;
  return n;
}

std::array<double, kStateFeatures> state_features(const RigidBodyState& b) {
  return {b.position.x,        b.position.y,        b.position.z,        b.orientation.w,     b.orientation.x,
          b.orientation.y,     b.orientation.z,     b.linear_velocity.x, b.linear_velocity.y, b.linear_velocity.z,
          b.angular_velocity.x, b.angular_velocity.y, b.angular_velocity.z};
}

RigidBodyState state_from_features(std::span<const double, kStateFeatures> f) {
  RigidBodyState b;
  b.position = {f[0], f[1], f[2]};
  b.orientation = {f[3], f[4], f[5], f[6]};
  b.linear_velocity = {f[7], f[8], f[9]};
  b.angular_velocity = {f[10], f[11], f[12]};
  return b;
}

namespace {

void write_padding_state(double* out) {
  std::fill(out, out + kStateFeatures, 0.0);
  out[3] = 1.0;
}

}  // namespace

std::array<double, kInputDim> encode_input(const SystemState& sys) {
  if (sys.size() > static_cast<std::size_t>(kMaxBodies)) {
    throw Error(Errc::shape_mismatch, "more bodies than record slots");
  }
  std::array<double, kInputDim> x{};
  for (std::size_t b = 0; b < kMaxBodies; ++b) {
    double* slot = x.data() + b * kInputFeaturesPerBody;
    if (b < sys.size()) {
      const auto s = state_features(sys.bodies[b]);
      std::copy(s.begin(), s.end(), slot);
      const BodyParams& p = sys.params[b];
      slot[13] = p.external_force.x;
      slot[14] = p.external_force.y;
      slot[15] = p.external_force.z;
      slot[16] = p.external_torque.x;
      slot[17] = p.external_torque.y;
      slot[18] = p.external_torque.z;
      x[kMaskOffset + b] = 1.0;
    } else {
      write_padding_state(slot);
    }
  }
  return x;
}

std::array<double, kTargetDim> encode_target(const std::vector<RigidBodyState>& bodies) {
  if (bodies.size() > static_cast<std::size_t>(kMaxBodies)) {
    throw Error(Errc::shape_mismatch, "more bodies than record slots");
  }
  std::array<double, kTargetDim> y{};
  for (std::size_t b = 0; b < kMaxBodies; ++b) {
    double* slot = y.data() + b * kStateFeatures;
    if (b < bodies.size()) {
      const auto s = state_features(bodies[b]);
      std::copy(s.begin(), s.end(), slot);
    } else {
      write_padding_state(slot);
    }
  }
  return y;
}

std::vector<SampleRecord> make_records(const Trajectory& traj, std::uint64_t scenario_id) {
  std::vector<SampleRecord> records;
  if (traj.samples.size() < 2) return records;
  records.reserve(traj.samples.size() - 1);
  SystemState sys = traj.initial;
  for (std::size_t k = 0; k + 1 < traj.samples.size(); ++k) {
    sys.bodies = traj.samples[k];
    SampleRecord r;
    r.input = encode_input(sys);
    r.target = encode_target(traj.samples[k + 1]);
    r.scenario = scenario_id;
    r.step = static_cast<std::uint32_t>(k);
    records.push_back(r);
  }
  return records;
}

std::vector<Split> split_dataset(std::size_t scenario_count, std::array<double, 3> ratios, std::uint64_t seed) {
  if (scenario_count < 3) invalid("splitting needs at least 3 scenarios");
  for (double r : ratios) {
    if (!(r >= 0.0)) invalid("split ratios must be nonnegative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) invalid("split ratios must sum to 1");

  const auto n = static_cast<double>(scenario_count);
  // Small epsilon keeps e.g. 100 * 0.1 from flooring to 9.
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios[1] + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios[2] + 1e-9));

  std::vector<std::size_t> order(scenario_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Xoshiro256pp rng(seed);
  for (std::size_t i = scenario_count - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }

  std::vector<Split> split(scenario_count, Split::train);
  const std::size_t n_train = scenario_count - n_val - n_test;
  for (std::size_t k = n_train; k < n_train + n_val; ++k) split[order[k]] = Split::validation;
  for (std::size_t k = n_train + n_val; k < scenario_count; ++k) split[order[k]] = Split::test;
  return split;
}

Normalizer::Normalizer() {
  input_std.fill(1.0);
  target_std.fill(1.0);
}

namespace {

constexpr std::size_t input_slot(std::size_t feature) { return feature / kInputFeaturesPerBody; }
constexpr std::size_t target_slot(std::size_t feature) { return feature / kStateFeatures; }

bool input_active(const std::array<double, kInputDim>& raw, std::size_t feature) {
  return feature < kMaskOffset && raw[kMaskOffset + input_slot(feature)] != 0.0;
}

// Target representation before z-scoring: absolute state or state minus the input state.
double target_reference(TargetMode mode, const std::array<double, kInputDim>& raw_input, std::size_t feature) {
  if (mode == TargetMode::absolute) return 0.0;
  const std::size_t slot = target_slot(feature);
  return raw_input[slot * kInputFeaturesPerBody + feature % kStateFeatures];
}

}  // namespace

std::array<double, kInputDim> Normalizer::apply_input(const std::array<double, kInputDim>& x) const {
  std::array<double, kInputDim> z = x;
  for (std::size_t f = 0; f < kMaskOffset; ++f) {
    if (input_active(x, f)) z[f] = (x[f] - input_mean[f]) / input_std[f];
  }
  return z;
}

std::array<double, kInputDim> Normalizer::invert_input(const std::array<double, kInputDim>& z) const {
  std::array<double, kInputDim> x = z;
  for (std::size_t f = 0; f < kMaskOffset; ++f) {
    if (input_active(z, f)) x[f] = z[f] * input_std[f] + input_mean[f];
  }
  return x;
}

std::array<double, kTargetDim> Normalizer::apply_target(const std::array<double, kTargetDim>& y,
                                                        const std::array<double, kInputDim>& input) const {
  std::array<double, kTargetDim> z = y;
  for (std::size_t f = 0; f < kTargetDim; ++f) {
    if (input[kMaskOffset + target_slot(f)] == 0.0) continue;
    z[f] = (y[f] - target_reference(mode, input, f) - target_mean[f]) / target_std[f];
  }
  return z;
}

std::array<double, kTargetDim> Normalizer::invert_target(const std::array<double, kTargetDim>& z,
                                                         const std::array<double, kInputDim>& input) const {
  std::array<double, kTargetDim> y = z;
  for (std::size_t f = 0; f < kTargetDim; ++f) {
    if (input[kMaskOffset + target_slot(f)] == 0.0) continue;
    y[f] = z[f] * target_std[f] + target_mean[f] + target_reference(mode, input, f);
  }
  return y;
}

SampleRecord Normalizer::apply(const SampleRecord& r) const {
  SampleRecord out = r;
  out.input = apply_input(r.input);
  out.target = apply_target(r.target, r.input);
  return out;
}

SampleRecord Normalizer::invert(const SampleRecord& r) const {
  SampleRecord out = r;
  out.input = invert_input(r.input);
  out.target = invert_target(r.target, out.input);
  return out;
}

Normalizer fit_normalizer(std::span<const SampleRecord> train, TargetMode mode) {
  if (train.size() < 2) invalid("normalizer needs at least two training records");
  Normalizer n;
  n.mode = mode;

  std::array<double, kInputDim> in_sum{}, in_count{};
  std::array<double, kTargetDim> out_sum{}, out_count{};
  auto target_value = [mode](const SampleRecord& r, std::size_t f) {
    return r.target[f] - target_reference(mode, r.input, f);
  };

  for (const SampleRecord& r : train) {
    for (std::size_t f = 0; f < kMaskOffset; ++f) {
      if (!input_active(r.input, f)) continue;
      in_sum[f] += r.input[f];
      in_count[f] += 1.0;
    }
    for (std::size_t f = 0; f < kTargetDim; ++f) {
      if (!r.active(target_slot(f))) continue;
      out_sum[f] += target_value(r, f);
      out_count[f] += 1.0;
    }
  }
  for (std::size_t f = 0; f < kInputDim; ++f) n.input_mean[f] = in_count[f] > 0 ? in_sum[f] / in_count[f] : 0.0;
  for (std::size_t f = 0; f < kTargetDim; ++f) n.target_mean[f] = out_count[f] > 0 ? out_sum[f] / out_count[f] : 0.0;

  std::array<double, kInputDim> in_sq{};
  std::array<double, kTargetDim> out_sq{};
  for (const SampleRecord& r : train) {
    for (std::size_t f = 0; f < kMaskOffset; ++f) {
      if (!input_active(r.input, f)) continue;
      const double d = r.input[f] - n.input_mean[f];
      in_sq[f] += d * d;
    }
    for (std::size_t f = 0; f < kTargetDim; ++f) {
      if (!r.active(target_slot(f))) continue;
      const double d = target_value(r, f) - n.target_mean[f];
      out_sq[f] += d * d;
    }
  }
  for (std::size_t f = 0; f < kInputDim; ++f) {
    n.input_std[f] = in_count[f] > 0 ? std::max(std::sqrt(in_sq[f] / in_count[f]), Normalizer::kMinStd) : 1.0;
  }
  for (std::size_t f = 0; f < kTargetDim; ++f) {
    n.target_std[f] = out_count[f] > 0 ? std::max(std::sqrt(out_sq[f] / out_count[f]), Normalizer::kMinStd) : 1.0;
  }
  return n;
}

}  // namespace rbd
