#pragma once

// Sphere-sphere contact detection and impulse-based resolution.
//
// Sign convention: for a pair (i, j) with i < j the normal n points from body j
// toward body i, the relative velocity is that of body i minus body j at the
// contact point, and body i receives +j n while body j receives -j n. A pair is
// approaching when v_rel · n < 0.

#include <cstdint>
#include <vector>

#include "rbd/dynamics.hpp"

namespace rbd {

struct Contact {
  std::size_t i = 0;
  std::size_t j = 0;
  Vec3 normal;       // unit, from j toward i
  Vec3 point;
  double penetration = 0.0;
  Vec3 arm_i;        // point - center_i
  Vec3 arm_j;        // point - center_j
};

struct CollisionEvent {
  std::uint64_t fine_step = 0;
  std::uint64_t sample_step = 0;
  std::uint16_t i = 0;
  std::uint16_t j = 0;
  double impulse = 0.0;

  bool operator==(const CollisionEvent&) const = default;
};

/// Distance below which two centers are treated as coincident.
inline constexpr double kDegenerateDistance = 1e-9;
/// Penetration left in place by the positional projection.
inline constexpr double kPenetrationSlop = 1e-4;
/// Upper bound on impulse sweeps in resolve_all.
inline constexpr int kMaxSweeps = 10;

/// One contact per pair with center distance strictly below r_i + r_j, in
/// ascending (i, j) order. Throws Errc::degenerate_contact for coincident centers.
std::vector<Contact> detect_contacts(const SystemState& sys);

Vec3 relative_contact_velocity(const Contact& c, const SystemState& sys);

/// Normal impulse magnitude for restitution ε. Throws Errc::separating_contact
/// unless v_rel · n < 0.
double impulse_magnitude(const Contact& c, const SystemState& sys, double restitution);

/// Applies +impulse·n to body i and -impulse·n to body j at the contact arms.
void apply_impulse(SystemState& sys, const Contact& c, double impulse);

struct ContactResolution {
  SystemState state;
  CollisionEvent event;
};

ContactResolution resolve_contact(const Contact& c, const SystemState& sys, double restitution);

struct ResolveResult {
  SystemState state;
  std::vector<CollisionEvent> events;
};

/// Sequential impulses over all approaching contacts (ascending pair order, up
/// to kMaxSweeps sweeps), then a single positional projection pass that pushes
/// overlapping pairs apart by (penetration - slop), split by inverse mass.
/// Events carry the supplied step indices.
ResolveResult resolve_all(const SystemState& sys, std::uint64_t fine_step = 0, std::uint64_t sample_step = 0);

}  // namespace rbd
