#include <doctest.h>

#include <cmath>

#include "rbd/collision.hpp"
#include "rbd/error.hpp"
#include "rbd/verify.hpp"

using namespace rbd;

namespace {

BodyParams ball(double mass, double radius = 0.5) {
  BodyParams p;
  p.mass = mass;
  p.radius = radius;
  const double i = 0.4 * mass * radius * radius;
  p.inertia_body_diag = {i, i, i};
  return p;
}

SystemState pair(double m1, double m2, Vec3 c2, Vec3 v1, Vec3 v2 = {}, double restitution = 1.0) {
  SystemState sys;
  sys.env.gravity = {};
  sys.env.restitution = restitution;
  sys.params = {ball(m1), ball(m2)};
  sys.bodies.resize(2);
  sys.bodies[0].linear_velocity = v1;
  sys.bodies[1].position = c2;
  sys.bodies[1].linear_velocity = v2;
  return sys;
}

}  // namespace

TEST_SUITE("collision") {

TEST_CASE("detection") {
  CHECK(detect_contacts(pair(1, 1, {1.1, 0, 0}, {})).empty());
  CHECK(detect_contacts(pair(1, 1, {1.0, 0, 0}, {})).empty());

  const auto contacts = detect_contacts(pair(1, 1, {0.9, 0, 0}, {}));
  REQUIRE(contacts.size() == 1);
  CHECK(std::abs(contacts[0].penetration - 0.1) <= 1e-15);
  CHECK(contacts[0].normal == Vec3{-1, 0, 0});
  CHECK(std::abs(contacts[0].point.x - 0.45) <= 1e-15);

  try {
    detect_contacts(pair(1, 1, {0, 0, 0}, {}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_contact);
  }
}

TEST_CASE("relative contact velocity") {
  SystemState rest = pair(1, 1, {0.9, 0, 0}, {});
  const Contact c = detect_contacts(rest)[0];
  CHECK(relative_contact_velocity(c, rest) == Vec3{});

  SystemState moving = pair(1, 1, {0.9, 0, 0}, {1, 0, 0});
  CHECK(relative_contact_velocity(c, moving) == Vec3{1, 0, 0});

  SystemState spinning = rest;
  spinning.bodies[0].angular_velocity = {0, 0, 1};
  Contact arm = c;
  arm.arm_i = {0.5, 0, 0};
  arm.arm_j = {-0.4, 0, 0};
  CHECK(norm(relative_contact_velocity(arm, spinning) - Vec3{0, 0.5, 0}) <= 1e-15);
}

TEST_CASE("impulse magnitude") {
  const SystemState equal = pair(1, 1, {0.9, 0, 0}, {1, 0, 0});
  const Contact c = detect_contacts(equal)[0];
  CHECK(std::abs(impulse_magnitude(c, equal, 1.0) - 1.0) <= 1e-15);
  CHECK(std::abs(impulse_magnitude(c, equal, 0.0) - 0.5) <= 1e-15);

  const SystemState heavy = pair(1, 3, {0.9, 0, 0}, {1, 0, 0});
  CHECK(std::abs(impulse_magnitude(detect_contacts(heavy)[0], heavy, 1.0) - 1.5) <= 1e-15);

  const SystemState apart = pair(1, 1, {0.9, 0, 0}, {-1, 0, 0});
  try {
    impulse_magnitude(detect_contacts(apart)[0], apart, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::separating_contact);
  }
}

TEST_CASE("resolution") {
  const SystemState equal = pair(1, 1, {0.9, 0, 0}, {1, 0, 0});
  const ContactResolution r = resolve_contact(detect_contacts(equal)[0], equal, 1.0);
  CHECK(norm(r.state.bodies[0].linear_velocity) <= 1e-12);
  CHECK(norm(r.state.bodies[1].linear_velocity - Vec3{1, 0, 0}) <= 1e-12);
  CHECK(r.event.i == 0);
  CHECK(r.event.j == 1);
  CHECK(r.event.impulse == doctest::Approx(1.0));

  const SystemState heavy = pair(1, 3, {0.9, 0, 0}, {1, 0, 0});
  const ContactResolution h = resolve_contact(detect_contacts(heavy)[0], heavy, 1.0);
  CHECK(norm(h.state.bodies[0].linear_velocity - Vec3{-0.5, 0, 0}) <= 1e-12);
  CHECK(norm(h.state.bodies[1].linear_velocity - Vec3{0.5, 0, 0}) <= 1e-12);

  const SystemState plastic = pair(1, 1, {0.9, 0, 0}, {1, 0, 0}, {-1, 0, 0}, 0.0);
  const ContactResolution p = resolve_contact(detect_contacts(plastic)[0], plastic, 0.0);
  CHECK(norm(p.state.bodies[0].linear_velocity) <= 1e-12);
  CHECK(norm(p.state.bodies[1].linear_velocity) <= 1e-12);
}

TEST_CASE("resolve_all") {
  const SystemState apart = pair(1, 1, {2, 0, 0}, {1, 0, 0});
  const ResolveResult none = resolve_all(apart);
  CHECK(none.state == apart);
  CHECK(none.events.empty());

  const SystemState equal = pair(1, 1, {0.9, 0, 0}, {1, 0, 0});
  const ResolveResult one = resolve_all(equal, 7, 1);
  const ContactResolution direct = resolve_contact(detect_contacts(equal)[0], equal, 1.0);
  REQUIRE(one.events.size() == 1);
  CHECK(one.events[0].fine_step == 7);
  CHECK(one.state.bodies[0].linear_velocity == direct.state.bodies[0].linear_velocity);
  CHECK(one.state.bodies[1].linear_velocity == direct.state.bodies[1].linear_velocity);
  // Projection leaves only the slop behind.
  const double gap = norm(one.state.bodies[1].position - one.state.bodies[0].position);
  CHECK(std::abs(gap - (1.0 - kPenetrationSlop)) <= 1e-12);
}

TEST_CASE("newton's cradle line") {
  SystemState sys;
  sys.env.gravity = {};
  sys.params = {ball(1), ball(1), ball(1)};
  sys.bodies.resize(3);
  sys.bodies[0].linear_velocity = {1, 0, 0};
  sys.bodies[1].position = {0.999, 0, 0};
  sys.bodies[2].position = {1.998, 0, 0};
  const Vec3 p0 = total_momentum(sys).first;
  const ResolveResult r = resolve_all(sys);
  CHECK(norm(total_momentum(r.state).first - p0) <= 1e-15);
  CHECK(r.state.bodies[2].linear_velocity.x > 0.99);
  CHECK(std::abs(r.state.bodies[0].linear_velocity.x) < 0.01);
}

TEST_CASE("projection keeps the centre of mass") {
  SystemState sys = pair(1, 3, {0.7, 0.1, 0}, {0.2, 0, 0}, {0.3, 0, 0});
  auto com = [](const SystemState& s) {
    Vec3 c;
    double m = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      c += s.bodies[k].position * s.params[k].mass;
      m += s.params[k].mass;
    }
    return c * (1.0 / m);
  };
  const ResolveResult r = resolve_all(sys);
  CHECK(r.events.empty());
  CHECK(norm(com(r.state) - com(sys)) <= 1e-15);
}

TEST_CASE("conservation oracle and its negative control") {
  VerifyOptions opts;
  opts.conservation_trials = 2000;
  for (const PropertyResult& r : check_contact_conservation(opts)) CHECK_MESSAGE(r.passed, r.name);
  CHECK(check_elastic_swap(opts).passed);

  opts.corrupt_collision_sign = true;
  CHECK_FALSE(check_elastic_swap(opts).passed);
}

}
