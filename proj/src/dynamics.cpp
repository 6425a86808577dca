#include "rbd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbd/error.hpp"

namespace rbd {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_argument, what); }

}  // namespace

void validate(const BodyParams& p) {
  if (!(p.mass > 0.0) || !std::isfinite(p.mass)) invalid("mass must be positive");
  if (!(p.radius > 0.0) || !std::isfinite(p.radius)) invalid("radius must be positive");
  const Vec3& d = p.inertia_body_diag;
  if (!(d.x > 0.0 && d.y > 0.0 && d.z > 0.0) || !is_finite(d)) invalid("inertia must be positive");
  if (!is_finite(p.external_force) || !is_finite(p.external_torque)) invalid("external load must be finite");
}

void validate(const Environment& env) {
  if (!is_finite(env.gravity)) invalid("gravity must be finite");
  if (!(env.linear_drag >= 0.0) || !std::isfinite(env.linear_drag)) invalid("linear drag must be nonnegative");
  if (!(env.angular_damping >= 0.0) || !std::isfinite(env.angular_damping)) {
    invalid("angular damping must be nonnegative");
  }
  if (!(env.restitution >= 0.0 && env.restitution <= 1.0)) invalid("restitution must lie in [0,1]");
}

void validate(const SystemState& sys) {
  if (sys.bodies.empty()) invalid("system has no bodies");
  if (sys.bodies.size() != sys.params.size()) invalid("bodies and params differ in length");
  validate(sys.env);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    validate(sys.params[i]);
    const RigidBodyState& b = sys.bodies[i];
    if (!is_finite(b.position) || !is_finite(b.linear_velocity) || !is_finite(b.angular_velocity) ||
        !is_finite(b.orientation)) {
      invalid("body " + std::to_string(i) + " has a non-finite state");
    }
    if (!(std::abs(norm(b.orientation) - 1.0) <= kUnitTolerance)) {
      invalid("body " + std::to_string(i) + " orientation is not unit");
    }
  }
}

std::pair<Vec3, Vec3> net_force_torque(const RigidBodyState& body, const BodyParams& params,
                                       const Environment& env) {
  const Vec3 force = env.gravity * params.mass + params.external_force - body.linear_velocity * env.linear_drag;
  const Vec3 torque = params.external_torque - body.angular_velocity * env.angular_damping;
  return {force, torque};
}

std::vector<BodyDerivative> state_derivative(const SystemState& sys) {
  std::vector<BodyDerivative> out(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const RigidBodyState& b = sys.bodies[i];
    const BodyParams& p = sys.params[i];
    const Quaternion unit = quat_normalize(b.orientation);
    const auto [force, torque] = net_force_torque(b, p, sys.env);

    const Mat3 rot = rotation_matrix(unit);
    const Mat3 inertia = inertia_world(unit, p.inertia_body_diag);
    const Mat3 inv_inertia = inverse_inertia_world(unit, p.inertia_body_diag);
    const Vec3& w = b.angular_velocity;

    BodyDerivative& d = out[i];
    d.position = b.linear_velocity;
    // The state keeps ω in the world frame; the quaternion rate needs the body rate Rᵀω.
    d.orientation = quat_derivative(b.orientation, transpose(rot) * w);
    d.linear_velocity = force / p.mass;
    d.angular_velocity = inv_inertia * (torque - cross(w, inertia * w));
  }
  return out;
}

namespace {

SystemState advance(const SystemState& base, const std::vector<BodyDerivative>& k, double h) {
  SystemState out = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    RigidBodyState& b = out.bodies[i];
    b.position += k[i].position * h;
    b.orientation = b.orientation + k[i].orientation * h;
    b.linear_velocity += k[i].linear_velocity * h;
    b.angular_velocity += k[i].angular_velocity * h;
  }
  return out;
}

bool finite(const SystemState& s) {
  for (const RigidBodyState& b : s.bodies) {
    if (!is_finite(b.position) || !is_finite(b.orientation) || !is_finite(b.linear_velocity) ||
        !is_finite(b.angular_velocity)) {
      return false;
    }
  }
  return true;
}

void check_finite(const SystemState& s) {
  if (!finite(s)) throw Error(Errc::integration_diverged, "integration diverged");
}

}  // namespace

StepResult rk4_step_tracked(const SystemState& sys, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::invalid_argument, "step size must be positive");

  const auto k1 = state_derivative(sys);
  const SystemState s2 = advance(sys, k1, 0.5 * h);
  check_finite(s2);
  const auto k2 = state_derivative(s2);
  const SystemState s3 = advance(sys, k2, 0.5 * h);
  check_finite(s3);
  const auto k3 = state_derivative(s3);
  const SystemState s4 = advance(sys, k3, h);
  check_finite(s4);
  const auto k4 = state_derivative(s4);

  StepResult result{sys, 0.0};
  const double w = h / 6.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    RigidBodyState& b = result.state.bodies[i];
    b.position += (k1[i].position + k2[i].position * 2.0 + k3[i].position * 2.0 + k4[i].position) * w;
    b.orientation = b.orientation + (k1[i].orientation + k2[i].orientation * 2.0 + k3[i].orientation * 2.0 +
                                     k4[i].orientation) * w;
    b.linear_velocity += (k1[i].linear_velocity + k2[i].linear_velocity * 2.0 + k3[i].linear_velocity * 2.0 +
                          k4[i].linear_velocity) * w;
    b.angular_velocity += (k1[i].angular_velocity + k2[i].angular_velocity * 2.0 +
                           k3[i].angular_velocity * 2.0 + k4[i].angular_velocity) * w;
  }
  check_finite(result.state);
  for (RigidBodyState& b : result.state.bodies) {
    const double n = norm(b.orientation);
    result.max_renorm_correction = std::max(result.max_renorm_correction, std::abs(n - 1.0));
    b.orientation = quat_normalize(b.orientation);
  }
  result.state.time = sys.time + h;
  return result;
}

SystemState rk4_step(const SystemState& sys, double h) { return rk4_step_tracked(sys, h).state; }

double kinetic_energy(const SystemState& sys) {
  double e = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const RigidBodyState& b = sys.bodies[i];
    const BodyParams& p = sys.params[i];
    const Mat3 inertia = inertia_world(b.orientation, p.inertia_body_diag);
    e += 0.5 * p.mass * dot(b.linear_velocity, b.linear_velocity);
    e += 0.5 * dot(b.angular_velocity, inertia * b.angular_velocity);
  }
  return e;
}

double total_energy(const SystemState& sys) {
  double potential = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    potential -= sys.params[i].mass * dot(sys.env.gravity, sys.bodies[i].position);
  }
  return kinetic_energy(sys) + potential;
}

std::pair<Vec3, Vec3> total_momentum(const SystemState& sys) {
  Vec3 p, l;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const RigidBodyState& b = sys.bodies[i];
    const BodyParams& bp = sys.params[i];
    const Vec3 linear = b.linear_velocity * bp.mass;
    p += linear;
    l += cross(b.position, linear) + inertia_world(b.orientation, bp.inertia_body_diag) * b.angular_velocity;
  }
  return {p, l};
}

}  // namespace rbd
