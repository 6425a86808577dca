#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbd {

enum class Errc {
  invalid_argument,
  degenerate_quaternion,
  non_unit_quaternion,
  integration_diverged,
  degenerate_contact,
  separating_contact,
  cube_too_crowded,
  bad_magic,
  version_mismatch,
  truncated,
  io_error,
  shape_mismatch,
  stale_cache,
  training_diverged,
  degenerate_targets,
  no_qualifying_scenarios,
  prediction_diverged,
};

std::string_view errc_name(Errc code) noexcept;

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rbd
