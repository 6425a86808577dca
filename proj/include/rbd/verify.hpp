#pragma once

// Self-check oracle suite: each property reports a measured value against its
// tolerance.

#include <cstdint>
#include <string>
#include <vector>

namespace rbd {

struct PropertyResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  /// Upper end of the accepted interval when the check is a range.
  double upper = 0.0;
  bool range = false;
  bool passed = false;
};

struct VerifyOptions {
  std::size_t conservation_trials = 10'000;
  std::uint64_t seed = 2024;
  /// Test hook: apply collision impulses with the wrong sign.
  bool corrupt_collision_sign = false;
};

PropertyResult check_elastic_swap(const VerifyOptions& opts = {});
/// Returns one result per conserved quantity.
std::vector<PropertyResult> check_contact_conservation(const VerifyOptions& opts = {});
/// Ratio of endpoint errors at h and h/2 for a torque-free anisotropic spin.
PropertyResult check_rk4_order();
PropertyResult check_free_fall();
PropertyResult check_gradient();
PropertyResult check_adam_step();
PropertyResult check_lr_schedule();

std::vector<PropertyResult> run_verify(const VerifyOptions& opts = {});

/// "PASS name: measured <= tolerance" style line.
std::string format_result(const PropertyResult& r);

}  // namespace rbd
