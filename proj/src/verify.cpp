#include "rbd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rbd/collision.hpp"
#include "rbd/network.hpp"
#include "rbd/random.hpp"

namespace rbd {

namespace {

PropertyResult at_most(std::string name, double measured, double tolerance) {
  PropertyResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.tolerance = tolerance;
  r.passed = measured <= tolerance;
  return r;
}

BodyParams sphere(double mass, double radius) {
  BodyParams p;
  p.mass = mass;
  p.radius = radius;
  const double i = 0.4 * mass * radius * radius;
  p.inertia_body_diag = {i, i, i};
  return p;
}

SystemState resolve_pair(const SystemState& sys, const Contact& c, bool corrupt) {
  if (!corrupt) return resolve_contact(c, sys, sys.env.restitution).state;
  SystemState out = sys;
  apply_impulse(out, c, -impulse_magnitude(c, sys, sys.env.restitution));
  return out;
}

Vec3 angular_momentum_about(const SystemState& sys, const Vec3& point, double* scale) {
  Vec3 total;
  for (std::size_t k = 0; k < sys.size(); ++k) {
    const RigidBodyState& b = sys.bodies[k];
    const BodyParams& p = sys.params[k];
    const Vec3 orbital = cross(b.position - point, b.linear_velocity * p.mass);
    const Vec3 spin = inertia_world(b.orientation, p.inertia_body_diag) * b.angular_velocity;
    total += orbital + spin;
    if (scale != nullptr) *scale += norm(orbital) + norm(spin);
  }
  return total;
}

Quaternion random_orientation(Xoshiro256pp& rng) {
  for (;;) {
    const Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    if (norm(q) > 1e-3) return quat_normalize(q);
  }
}

Vec3 random_vec(Xoshiro256pp& rng, double bound) {
  return {rng.uniform(-bound, bound), rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
}

}  // namespace

PropertyResult check_elastic_swap(const VerifyOptions& opts) {
  SystemState sys;
  sys.env.gravity = {};
  sys.env.restitution = 1.0;
  sys.params = {sphere(1.0, 0.5), sphere(1.0, 0.5)};
  sys.bodies.resize(2);
  sys.bodies[0].position = {0.0, 0.0, 0.0};
  sys.bodies[0].linear_velocity = {1.0, 0.0, 0.0};
  sys.bodies[1].position = {0.99, 0.0, 0.0};

  const std::vector<Contact> contacts = detect_contacts(sys);
  double dev = std::numeric_limits<double>::infinity();
  if (contacts.size() == 1) {
    const SystemState after = resolve_pair(sys, contacts.front(), opts.corrupt_collision_sign);
    dev = std::max(norm(after.bodies[0].linear_velocity - Vec3{0.0, 0.0, 0.0}),
                   norm(after.bodies[1].linear_velocity - Vec3{1.0, 0.0, 0.0}));
  }
  return at_most("elastic_swap_velocity_error", dev, 1e-12);
}

std::vector<PropertyResult> check_contact_conservation(const VerifyOptions& opts) {
  Xoshiro256pp rng(opts.seed);
  double worst_p = 0.0;
  double worst_l = 0.0;
  double worst_elastic = 0.0;
  double worst_gain = 0.0;

  for (std::size_t trial = 0; trial < opts.conservation_trials; ++trial) {
    SystemState sys;
    sys.env.gravity = {};
    sys.env.restitution = trial % 2 == 0 ? 1.0 : rng.uniform();
    sys.params.resize(2);
    sys.bodies.resize(2);
    for (std::size_t k = 0; k < 2; ++k) {
      BodyParams& p = sys.params[k];
      p.mass = rng.uniform(0.1, 5.0);
      p.radius = rng.uniform(0.1, 1.0);
      const double base = 0.4 * p.mass * p.radius * p.radius;
      p.inertia_body_diag = {base * rng.uniform(0.5, 1.5), base * rng.uniform(0.5, 1.5),
                             base * rng.uniform(0.5, 1.5)};
      sys.bodies[k].orientation = random_orientation(rng);
      sys.bodies[k].linear_velocity = random_vec(rng, 3.0);
      sys.bodies[k].angular_velocity = random_vec(rng, 3.0);
    }
    Vec3 dir = random_vec(rng, 1.0);
    while (norm(dir) < 1e-3) dir = random_vec(rng, 1.0);
    const double gap = (sys.params[0].radius + sys.params[1].radius) * rng.uniform(0.5, 0.999);
    sys.bodies[0].position = random_vec(rng, 2.0);
    sys.bodies[1].position = sys.bodies[0].position + dir * (gap / norm(dir));

    const std::vector<Contact> contacts = detect_contacts(sys);
    if (contacts.size() != 1) continue;
    const Contact& c = contacts.front();
    double vn = dot(relative_contact_velocity(c, sys), c.normal);
    if (vn >= 0.0) {
      for (RigidBodyState& b : sys.bodies) {
        b.linear_velocity = -b.linear_velocity;
        b.angular_velocity = -b.angular_velocity;
      }
      vn = -vn;
    }
    if (!(vn < 0.0)) continue;

    const SystemState after = resolve_pair(sys, c, opts.corrupt_collision_sign);

    const auto [p0, l0_origin] = total_momentum(sys);
    const auto [p1, l1_origin] = total_momentum(after);
    double p_scale = 0.0;
    for (std::size_t k = 0; k < 2; ++k) p_scale += sys.params[k].mass * norm(sys.bodies[k].linear_velocity);
    worst_p = std::max(worst_p, norm(p1 - p0) / p_scale);

    double l_scale = 0.0;
    const Vec3 l0 = angular_momentum_about(sys, c.point, &l_scale);
    const Vec3 l1 = angular_momentum_about(after, c.point, nullptr);
    worst_l = std::max(worst_l, norm(l1 - l0) / l_scale);

    const double k0 = kinetic_energy(sys);
    const double k1 = kinetic_energy(after);
    if (sys.env.restitution == 1.0) {
      worst_elastic = std::max(worst_elastic, std::abs(k1 - k0) / k0);
    } else {
      worst_gain = std::max(worst_gain, (k1 - k0) / k0);
    }
  }
  return {at_most("contact_linear_momentum_rel", worst_p, 1e-10),
          at_most("contact_angular_momentum_rel", worst_l, 1e-9),
          at_most("contact_elastic_energy_rel", worst_elastic, 1e-9),
          at_most("contact_inelastic_energy_gain_rel", worst_gain, 1e-12)};
}

namespace {

SystemState spinning_body() {
  SystemState sys;
  sys.env.gravity = {};
  BodyParams p;
  p.mass = 1.0;
  p.radius = 0.5;
  p.inertia_body_diag = {1.0, 2.0, 3.0};
  sys.params = {p};
  RigidBodyState b;
  b.orientation = Quaternion::from_axis_angle({1.0, 1.0, 0.0}, 0.3);
  b.angular_velocity = {1.0, 2.0, 0.5};
  sys.bodies = {b};
  return sys;
}

SystemState integrate(SystemState sys, double h, double duration) {
  const auto steps = static_cast<std::size_t>(std::llround(duration / h));
  for (std::size_t s = 0; s < steps; ++s) sys = rk4_step(sys, h);
  return sys;
}

double rotational_state_error(const SystemState& a, const SystemState& b) {
  Quaternion qa = a.bodies[0].orientation;
  const Quaternion qb = b.bodies[0].orientation;
  if (dot(qa, qb) < 0.0) qa = -qa;
  const double dq = norm(qa - qb);
  const double dw = norm(a.bodies[0].angular_velocity - b.bodies[0].angular_velocity);
  return std::sqrt(dq * dq + dw * dw);
}

}  // namespace

PropertyResult check_rk4_order() {
  constexpr double kDuration = 1.0;
  constexpr double kCoarse = 0.04;
  const SystemState init = spinning_body();
  const SystemState reference = integrate(init, 1e-6, kDuration);
  const double e1 = rotational_state_error(integrate(init, kCoarse, kDuration), reference);
  const double e2 = rotational_state_error(integrate(init, kCoarse / 2.0, kDuration), reference);
  PropertyResult r;
  r.name = "rk4_halving_error_ratio";
  r.measured = e1 / e2;
  r.tolerance = 12.0;
  r.upper = 20.0;
  r.range = true;
  r.passed = r.measured >= r.tolerance && r.measured <= r.upper;
  return r;
}

PropertyResult check_free_fall() {
  SystemState sys;
  BodyParams p = sphere(1.3, 0.3);
  sys.params = {p};
  RigidBodyState b;
  b.position = {0.5, -1.0, 3.0};
  b.linear_velocity = {0.7, 0.2, 1.5};
  sys.bodies = {b};
  const Vec3 g = sys.env.gravity;

  double worst = 0.0;
  constexpr double h = 0.02;
  for (int s = 1; s <= 50; ++s) {
    sys = rk4_step(sys, h);
    const double t = s * h;
    const Vec3 exact = b.position + b.linear_velocity * t + g * (0.5 * t * t);
    worst = std::max(worst, norm(sys.bodies[0].position - exact));
  }
  return at_most("free_fall_position_error_m", worst, 1e-12);
}

PropertyResult check_gradient() {
  nn::NetworkConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden = 16;
  cfg.blocks = 2;
  cfg.output_dim = 4;
  cfg.dropout = 0.2;
  nn::NetworkParameters params = nn::init_network(cfg, 11);
  Xoshiro256pp rng(5);
  // Biases start at zero; give them values so their gradients are exercised.
  for (double& v : params.values()) v += 0.05 * rng.normal();

  constexpr Eigen::Index kBatch = 6;
  nn::Matrix x(8, kBatch), t(4, kBatch), mask = nn::Matrix::Ones(4, kBatch);
  for (Eigen::Index c = 0; c < kBatch; ++c) {
    for (Eigen::Index f = 0; f < 8; ++f) x(f, c) = rng.normal();
  }
  mask(3, kBatch - 1) = 0.0;
  constexpr double kL2 = 1e-4;
  constexpr std::uint64_t kDropoutSeed = 99;

  // Targets near the current output keep the loss small, so the finite
  // differences are not swamped by rounding in the loss value.
  const nn::Matrix y = nn::forward(params, x, nn::Mode::train, kDropoutSeed);
  for (Eigen::Index c = 0; c < kBatch; ++c) {
    for (Eigen::Index f = 0; f < 4; ++f) t(f, c) = y(f, c) + 0.05 * rng.normal();
  }

  auto loss_at = [&](const nn::NetworkParameters& p) {
    return nn::regularized_loss(nn::loss_mse(nn::forward(p, x, nn::Mode::train, kDropoutSeed), t, mask), p, kL2);
  };
  nn::ForwardCache cache;
  nn::forward(params, x, nn::Mode::train, kDropoutSeed, &cache);
  const nn::ParamBuffer grad = nn::backward(params, cache, t, mask, kL2);

  // Five-point central stencil keeps truncation error far below the tolerance.
  constexpr double h = 1e-4;
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    nn::NetworkParameters probe = params;
    const double base = params.values()[i];
    auto at = [&](double offset) {
      probe.values()[i] = base + offset;
      return loss_at(probe);
    };
    const double numeric = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
  }
  return at_most("gradient_check_max_rel_error", worst, 1e-6);
}

PropertyResult check_adam_step() {
  std::vector<double> param{1.0};
  const std::vector<double> grad{0.5};
  nn::Adam adam(1);
  adam.step(param, grad, 1, 0.001);
  return at_most("adam_single_step_error", std::abs(param[0] - 0.99900000002), 1e-12);
}

PropertyResult check_lr_schedule() {
  const double expected[3] = {0.001, 0.0005946035575013605, 0.0003535533905932738};
  const double epochs[3] = {0.0, 10.0, 30.0};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double got = nn::lr_schedule(epochs[k], 0.001, 0.1, 0.75);
    worst = std::max(worst, std::abs(got - expected[k]) / expected[k]);
  }
  return at_most("lr_schedule_rel_error", worst, 1e-15);
}

std::vector<PropertyResult> run_verify(const VerifyOptions& opts) {
  std::vector<PropertyResult> out;
  out.push_back(check_elastic_swap(opts));
  for (PropertyResult& r : check_contact_conservation(opts)) out.push_back(std::move(r));
  out.push_back(check_rk4_order());
  out.push_back(check_free_fall());
  out.push_back(check_gradient());
  out.push_back(check_adam_step());
  out.push_back(check_lr_schedule());
  return out;
}

std::string format_result(const PropertyResult& r) {
  char buf[256];
  if (r.range) {
    std::snprintf(buf, sizeof buf, "%s %s: %.6g in [%g, %g]", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured,
                  r.tolerance, r.upper);
  } else {
    std::snprintf(buf, sizeof buf, "%s %s: %.3e <= %.0e", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured,
                  r.tolerance);
  }
  return buf;
}

}  // namespace rbd
