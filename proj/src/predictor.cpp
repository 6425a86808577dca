#include "rbd/predictor.hpp"

#include "rbd/collision.hpp"
#include "rbd/error.hpp"

namespace rbd {

std::vector<std::vector<RigidBodyState>> Predictor::predict_batch(std::span<const SystemState> systems) const {
  std::vector<std::vector<RigidBodyState>> out;
  out.reserve(systems.size());
  for (const SystemState& s : systems) out.push_back(predict(s));
  return out;
}

NetworkPredictor::NetworkPredictor(nn::NetworkParameters params, std::string name)
    : params_(std::move(params)), name_(std::move(name)) {
  if (params_.config().input_dim != kInputDim || params_.config().output_dim != kTargetDim) {
    throw Error(Errc::shape_mismatch, "network does not match the 100-input / 65-output record layout");
  }
}

std::vector<RigidBodyState> NetworkPredictor::predict(const SystemState& sys) const {
  return predict_batch(std::span<const SystemState>(&sys, 1)).front();
}

std::vector<std::vector<RigidBodyState>> NetworkPredictor::predict_batch(std::span<const SystemState> systems) const {
  const auto n = static_cast<Eigen::Index>(systems.size());
  std::vector<std::array<double, kInputDim>> raw(systems.size());
  nn::Matrix x(Eigen::Index(kInputDim), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    raw[std::size_t(c)] = encode_input(systems[std::size_t(c)]);
    const auto z = params_.normalizer.apply_input(raw[std::size_t(c)]);
    for (std::size_t f = 0; f < kInputDim; ++f) x(Eigen::Index(f), c) = z[f];
  }
  const nn::Matrix y = nn::forward(params_, x, nn::Mode::eval);

  std::vector<std::vector<RigidBodyState>> out(systems.size());
  for (Eigen::Index c = 0; c < n; ++c) {
    std::array<double, kTargetDim> z{};
    for (std::size_t f = 0; f < kTargetDim; ++f) z[f] = y(Eigen::Index(f), c);
    const auto target = params_.normalizer.invert_target(z, raw[std::size_t(c)]);
    const std::size_t bodies = systems[std::size_t(c)].size();
    out[std::size_t(c)].reserve(bodies);
    for (std::size_t b = 0; b < bodies; ++b) {
      out[std::size_t(c)].push_back(
          state_from_features(std::span<const double, kStateFeatures>(target.data() + b * kStateFeatures, kStateFeatures)));
    }
  }
  return out;
}

std::vector<RigidBodyState> CoarseRk4Predictor::predict(const SystemState& sys) const {
  const SystemState stepped = rk4_step(sys, kSampleInterval);
  return resolve_all(stepped).state.bodies;
}

std::vector<RigidBodyState> FineSimulatorPredictor::predict(const SystemState& sys) const {
  const Trajectory t = simulate(sys, kSampleInterval, fine_dt_);
  return t.samples.back();
}

}  // namespace rbd
