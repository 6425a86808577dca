#include "rbd/error.hpp"

namespace rbd {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::degenerate_quaternion: return "degenerate quaternion";
    case Errc::non_unit_quaternion: return "non-unit quaternion";
    case Errc::integration_diverged: return "integration diverged";
    case Errc::degenerate_contact: return "degenerate contact";
    case Errc::separating_contact: return "separating contact";
    case Errc::cube_too_crowded: return "cube too crowded";
    case Errc::bad_magic: return "bad magic";
    case Errc::version_mismatch: return "version mismatch";
    case Errc::truncated: return "truncated";
    case Errc::io_error: return "i/o error";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::stale_cache: return "stale cache";
    case Errc::training_diverged: return "training diverged";
    case Errc::degenerate_targets: return "degenerate targets";
    case Errc::no_qualifying_scenarios: return "no qualifying scenarios";
    case Errc::prediction_diverged: return "prediction diverged";
  }
  return "unknown";
}

}  // namespace rbd
