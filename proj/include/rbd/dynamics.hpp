#pragma once

#include <utility>
#include <vector>

#include "rbd/math3d.hpp"

namespace rbd {

/// Kinematic state of one body. Angular velocity is expressed in the world frame.
struct RigidBodyState {
  Vec3 position;
  Quaternion orientation = Quaternion::identity();
  Vec3 linear_velocity;
  Vec3 angular_velocity;

  bool operator==(const RigidBodyState&) const = default;
};

struct BodyParams {
  double mass = 1.0;
  double radius = 0.5;
  Vec3 inertia_body_diag{1.0, 1.0, 1.0};
  Vec3 external_force;
  Vec3 external_torque;

  bool operator==(const BodyParams&) const = default;
};

struct Environment {
  Vec3 gravity{0.0, 0.0, -9.81};
  double linear_drag = 0.0;       // c_d, kg/s
  double angular_damping = 0.0;   // c_r, kg·m²/s
  double restitution = 1.0;       // ε

  bool operator==(const Environment&) const = default;
};

struct SystemState {
  std::vector<RigidBodyState> bodies;
  std::vector<BodyParams> params;
  Environment env;
  double time = 0.0;

  std::size_t size() const { return bodies.size(); }
  bool operator==(const SystemState&) const = default;
};

/// Throws Errc::invalid_argument describing the first violated invariant.
void validate(const SystemState& sys);
void validate(const BodyParams& params);
void validate(const Environment& env);

struct BodyDerivative {
  Vec3 position;          // dr/dt
  Quaternion orientation; // dq/dt
  Vec3 linear_velocity;   // dv/dt
  Vec3 angular_velocity;  // dω/dt
};

/// Gravity, constant external load, linear drag -c_d v and angular damping -c_r ω.
std::pair<Vec3, Vec3> net_force_torque(const RigidBodyState& body, const BodyParams& params,
                                       const Environment& env);

/// Newton-Euler rates for every body. The orientation may be slightly off unit
/// (RK4 stage states); its normalized value is used to build the world inertia.
std::vector<BodyDerivative> state_derivative(const SystemState& sys);

struct StepResult {
  SystemState state;
  /// Largest |1 - |q|| removed by the post-step renormalization.
  double max_renorm_correction = 0.0;
};

/// One classic RK4 step of size h. Collisions are not handled here.
/// Throws Errc::integration_diverged on a non-finite intermediate.
StepResult rk4_step_tracked(const SystemState& sys, double h);
SystemState rk4_step(const SystemState& sys, double h);

/// Kinetic (translational + rotational) plus gravitational potential energy,
/// potential referenced to the origin.
double total_energy(const SystemState& sys);
double kinetic_energy(const SystemState& sys);

/// Linear momentum and angular momentum about the world origin.
std::pair<Vec3, Vec3> total_momentum(const SystemState& sys);

}  // namespace rbd
