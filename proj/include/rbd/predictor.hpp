#pragma once

#include <span>
#include <string>
#include <vector>

#include "rbd/network.hpp"
#include "rbd/simulate.hpp"

namespace rbd {

/// Maps a system state to the body states one sample interval (0.02 s) later.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual std::vector<RigidBodyState> predict(const SystemState& sys) const = 0;
  /// Defaults to predict() per element.
  virtual std::vector<std::vector<RigidBodyState>> predict_batch(std::span<const SystemState> systems) const;
};

/// Trained network in eval mode. Outputs are de-normalized but not otherwise
/// post-processed; quaternions may be off unit.
class NetworkPredictor final : public Predictor {
 public:
  NetworkPredictor(nn::NetworkParameters params, std::string name);
  std::string name() const override { return name_; }
  std::vector<RigidBodyState> predict(const SystemState& sys) const override;
  std::vector<std::vector<RigidBodyState>> predict_batch(std::span<const SystemState> systems) const override;
  const nn::NetworkParameters& parameters() const { return params_; }

 private:
  nn::NetworkParameters params_;
  std::string name_;
};

/// One RK4 step of the full sample interval followed by collision resolution.
class CoarseRk4Predictor final : public Predictor {
 public:
  std::string name() const override { return "rk4"; }
  std::vector<RigidBodyState> predict(const SystemState& sys) const override;
};

/// The ground-truth simulator advanced by one sample interval.
class FineSimulatorPredictor final : public Predictor {
 public:
  explicit FineSimulatorPredictor(double fine_dt = kDefaultFineDt) : fine_dt_(fine_dt) {}
  std::string name() const override { return "ground_truth"; }
  std::vector<RigidBodyState> predict(const SystemState& sys) const override;

 private:
  double fine_dt_;
};

/// Returns its input; used as a test fixture.
class IdentityPredictor final : public Predictor {
 public:
  std::string name() const override { return "identity"; }
  std::vector<RigidBodyState> predict(const SystemState& sys) const override { return sys.bodies; }
};

}  // namespace rbd
