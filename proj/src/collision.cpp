#include "rbd/collision.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbd/error.hpp"

namespace rbd {

namespace {

// Contact geometry for an overlapping pair, or nothing when separated.
bool make_contact(const SystemState& sys, std::size_t i, std::size_t j, Contact& out) {
  const Vec3& ci = sys.bodies[i].position;
  const Vec3& cj = sys.bodies[j].position;
  const double ri = sys.params[i].radius;
  const double rj = sys.params[j].radius;
  const Vec3 d = ci - cj;
  const double dist = norm(d);
  if (!(dist < ri + rj)) return false;
  if (dist < kDegenerateDistance) {
    throw Error(Errc::degenerate_contact,
                "degenerate contact between bodies " + std::to_string(i) + " and " + std::to_string(j));
  }
  out.i = i;
  out.j = j;
  out.normal = d / dist;
  out.penetration = ri + rj - dist;
  // Split the center segment in proportion to the radii.
  out.point = ci + (cj - ci) * (ri / (ri + rj));
  out.arm_i = out.point - ci;
  out.arm_j = out.point - cj;
  return true;
}

}  // namespace

std::vector<Contact> detect_contacts(const SystemState& sys) {
  std::vector<Contact> contacts;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.size(); ++j) {
      Contact c;
      if (make_contact(sys, i, j, c)) contacts.push_back(c);
    }
  }
  return contacts;
}

Vec3 relative_contact_velocity(const Contact& c, const SystemState& sys) {
  const RigidBodyState& a = sys.bodies[c.i];
  const RigidBodyState& b = sys.bodies[c.j];
  return (a.linear_velocity + cross(a.angular_velocity, c.arm_i)) -
         (b.linear_velocity + cross(b.angular_velocity, c.arm_j));
}

double impulse_magnitude(const Contact& c, const SystemState& sys, double restitution) {
  const double approach = dot(relative_contact_velocity(c, sys), c.normal);
  if (!(approach < 0.0)) throw Error(Errc::separating_contact, "separating contact");

  const BodyParams& pi = sys.params[c.i];
  const BodyParams& pj = sys.params[c.j];
  const Mat3 inv_i = inverse_inertia_world(sys.bodies[c.i].orientation, pi.inertia_body_diag);
  const Mat3 inv_j = inverse_inertia_world(sys.bodies[c.j].orientation, pj.inertia_body_diag);
  const Vec3& n = c.normal;
  const double denom = 1.0 / pi.mass + 1.0 / pj.mass + dot(cross(inv_i * cross(c.arm_i, n), c.arm_i), n) +
                       dot(cross(inv_j * cross(c.arm_j, n), c.arm_j), n);
  if (!(denom > 0.0)) throw Error(Errc::invalid_argument, "nonpositive effective mass denominator");
  return -(1.0 + restitution) * approach / denom;
}

void apply_impulse(SystemState& sys, const Contact& c, double impulse) {
  RigidBodyState& a = sys.bodies[c.i];
  RigidBodyState& b = sys.bodies[c.j];
  const BodyParams& pa = sys.params[c.i];
  const BodyParams& pb = sys.params[c.j];
  const Vec3 jn = c.normal * impulse;
  const Mat3 inv_a = inverse_inertia_world(a.orientation, pa.inertia_body_diag);
  const Mat3 inv_b = inverse_inertia_world(b.orientation, pb.inertia_body_diag);
  a.linear_velocity += jn / pa.mass;
  b.linear_velocity -= jn / pb.mass;
  a.angular_velocity += inv_a * cross(c.arm_i, jn);
  b.angular_velocity -= inv_b * cross(c.arm_j, jn);
}

ContactResolution resolve_contact(const Contact& c, const SystemState& sys, double restitution) {
  const double j = impulse_magnitude(c, sys, restitution);
  ContactResolution out{sys, {}};
  apply_impulse(out.state, c, j);
  out.event.i = static_cast<std::uint16_t>(c.i);
  out.event.j = static_cast<std::uint16_t>(c.j);
  out.event.impulse = j;
  return out;
}

ResolveResult resolve_all(const SystemState& sys, std::uint64_t fine_step, std::uint64_t sample_step) {
  ResolveResult out{sys, {}};
  const std::vector<Contact> contacts = detect_contacts(sys);
  if (contacts.empty()) return out;

  const double eps = sys.env.restitution;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool any = false;
    for (const Contact& c : contacts) {
      if (!(dot(relative_contact_velocity(c, out.state), c.normal) < 0.0)) continue;
      const double j = impulse_magnitude(c, out.state, eps);
      apply_impulse(out.state, c, j);
      out.events.push_back({fine_step, sample_step, static_cast<std::uint16_t>(c.i),
                            static_cast<std::uint16_t>(c.j), j});
      any = true;
    }
    if (!any) break;
  }

  // Projection: geometry is re-read per pair since earlier pairs may have moved a body.
  for (const Contact& first : contacts) {
    Contact c;
    if (!make_contact(out.state, first.i, first.j, c)) continue;
    const double correction = c.penetration - kPenetrationSlop;
    if (!(correction > 0.0)) continue;
    const double wi = 1.0 / out.state.params[c.i].mass;
    const double wj = 1.0 / out.state.params[c.j].mass;
    const Vec3 push = c.normal * (correction / (wi + wj));
    out.state.bodies[c.i].position += push * wi;
    out.state.bodies[c.j].position -= push * wj;
  }
  return out;
}

}  // namespace rbd
