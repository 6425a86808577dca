#include "rbd/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rbd/error.hpp"
#include "rbd/random.hpp"

namespace rbd::nn {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw Error(Errc::invalid_argument, "epochs must be positive");
  if (cfg.batch_size < 1) throw Error(Errc::invalid_argument, "batch size must be positive");
  if (!(cfg.lr > 0.0)) throw Error(Errc::invalid_argument, "learning rate must be positive");
  if (!(cfg.lr_decay >= 0.0) || !(cfg.lr_power >= 0.0)) {
    throw Error(Errc::invalid_argument, "learning-rate decay parameters must be nonnegative");
  }
  if (!(cfg.l2 >= 0.0)) throw Error(Errc::invalid_argument, "l2 must be nonnegative");
  if (cfg.patience < 1) throw Error(Errc::invalid_argument, "patience must be at least 1");
}

TrainingData make_training_data(std::span<const SampleRecord> records, const Normalizer& normalizer) {
  TrainingData d;
  const auto n = static_cast<Eigen::Index>(records.size());
  d.input.resize(Eigen::Index(kInputDim), n);
  d.target.resize(Eigen::Index(kTargetDim), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const SampleRecord z = normalizer.apply(records[static_cast<std::size_t>(c)]);
    for (std::size_t f = 0; f < kInputDim; ++f) d.input(Eigen::Index(f), c) = z.input[f];
    for (std::size_t f = 0; f < kTargetDim; ++f) d.target(Eigen::Index(f), c) = z.target[f];
  }
  d.mask = target_mask(records);
  return d;
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  improved_ = epoch_ == 1 || val_loss < best_;
  if (improved_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
  }
  return epoch_ - best_epoch_ > patience_;
}

namespace {

constexpr Eigen::Index kEvalChunk = 1024;

Matrix gather(const Matrix& src, std::span<const std::size_t> cols) {
  Matrix out(src.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(Eigen::Index(i)) = src.col(Eigen::Index(cols[i]));
  return out;
}

}  // namespace

double evaluate_loss(const NetworkParameters& params, const TrainingData& data) {
  if (data.size() == 0) throw Error(Errc::invalid_argument, "empty evaluation set");
  double total = 0.0;
  for (Eigen::Index start = 0; start < data.size(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, data.size() - start);
    const Matrix pred = forward(params, data.input.middleCols(start, len), Mode::eval);
    total += loss_mse(pred, data.target.middleCols(start, len), data.mask.middleCols(start, len)) *
             static_cast<double>(len);
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(NetworkParameters init, const TrainingData& train_set, const TrainingData& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw Error(Errc::invalid_argument, "training needs nonempty train and validation sets");
  }

  NetworkParameters params = std::move(init);
  TrainResult result{params, {}, 0, 0.0};
  Adam adam(params.values().size());
  EarlyStopping stopper(cfg.patience);
  Xoshiro256pp shuffle_rng(cfg.seed);

  const auto n = static_cast<std::size_t>(train_set.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.below(i + 1))]);
    }
    const double lr = lr_schedule(epoch, cfg.lr, cfg.lr_decay, cfg.lr_power);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> cols(order.data() + start, len);
      const Matrix x = gather(train_set.input, cols);
      const Matrix t = gather(train_set.target, cols);
      const Matrix m = gather(train_set.mask, cols);

      const std::uint64_t dropout_seed =
          splitmix64(splitmix64(cfg.seed ^ static_cast<std::uint64_t>(epoch)) ^ batch_index);
      ForwardCache cache;
      const Matrix pred = forward(params, x, Mode::train, dropout_seed, &cache);
      const double loss = loss_mse(pred, t, m);
      if (!std::isfinite(loss)) {
        throw Error(Errc::training_diverged, "training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                                 std::to_string(batch_index + 1));
      }
      loss_sum += loss * static_cast<double>(len);
      const ParamBuffer grads = backward(params, cache, t, m, cfg.l2);
      adam.step(params, grads, ++step, lr);
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.val_loss = evaluate_loss(params, val_set);
    stats.lr = lr;
    if (!std::isfinite(stats.val_loss)) {
      throw Error(Errc::training_diverged, "validation loss diverged at epoch " + std::to_string(epoch + 1));
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    const bool stop = stopper.update(stats.val_loss);
    if (stopper.improved()) result.params = params;
    if (stop) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  return result;
}

}  // namespace rbd::nn
