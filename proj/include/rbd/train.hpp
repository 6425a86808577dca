#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rbd/network.hpp"

namespace rbd::nn {

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double lr_decay = 0.1;   // γ
  double lr_power = 0.75;  // p
  double l2 = 1e-4;        // λ
  int patience = 20;
  std::uint64_t seed = 1;
};

void validate(const TrainConfig& cfg);

/// Normalized inputs, targets and target mask, one column per record.
struct TrainingData {
  Matrix input;
  Matrix target;
  Matrix mask;

  Eigen::Index size() const { return input.cols(); }
};

TrainingData make_training_data(std::span<const SampleRecord> records, const Normalizer& normalizer);

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

/// Stops once more than `patience` consecutive epochs fail to improve on the best
/// validation loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records the validation loss of the next epoch; true if training should stop.
  bool update(double val_loss);
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_ = 0.0;
  bool improved_ = false;
};

struct TrainResult {
  NetworkParameters params;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Unregularized mean loss over a whole set, eval mode, evaluated in fixed chunks.
double evaluate_loss(const NetworkParameters& params, const TrainingData& data);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Seeded shuffle, minibatch Adam with the decaying learning rate, validation
/// after every epoch, early stopping. Returns the best-validation parameters.
/// Throws Errc::training_diverged on a non-finite loss.
TrainResult train(NetworkParameters init, const TrainingData& train_set, const TrainingData& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace rbd::nn
