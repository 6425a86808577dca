#pragma once

// Fully connected residual network: input layer + ReLU, K residual blocks
//   y = x + W2 · dropout(relu(W1 x + b1)) + b2,
// and an affine output layer. The feedforward variant drops the skip term.
//
// All parameters live in one flat buffer laid out as the model file stores
// them: input W (row-major), input b, per block W1, b1, W2, b2, output W, b.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rbd/scenario.hpp"

namespace rbd::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<const RowMatrix>;
using MatrixMut = Eigen::Map<RowMatrix>;
using VectorView = Eigen::Map<const Vector>;
using VectorMut = Eigen::Map<Vector>;
/// Parameter-sized buffer aligned for Eigen's vector kernels, so results do not
/// depend on where the allocator happened to place it.
using ParamBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

enum class Architecture : std::uint8_t { residual = 0, feedforward = 1 };
enum class Mode { train, eval };

struct NetworkConfig {
  std::size_t input_dim = kInputDim;
  std::size_t hidden = 256;
  std::size_t blocks = 4;
  std::size_t output_dim = kTargetDim;
  Architecture architecture = Architecture::residual;
  double dropout = 0.2;
  TargetMode target_mode = TargetMode::absolute;
  std::uint64_t seed = 1;

  bool operator==(const NetworkConfig&) const = default;
};

void validate(const NetworkConfig& cfg);

struct DenseLayout {
  std::size_t weight = 0;  // offset of the row-major weight matrix
  std::size_t bias = 0;    // offset of the bias vector
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Layer 0 is the input layer, layers 1..2K the block pairs, the last one the output.
struct ParameterLayout {
  std::vector<DenseLayout> layers;
  std::size_t total = 0;

  explicit ParameterLayout(const NetworkConfig& cfg);
  const DenseLayout& input() const { return layers.front(); }
  const DenseLayout& block_first(std::size_t k) const { return layers[1 + 2 * k]; }
  const DenseLayout& block_second(std::size_t k) const { return layers[2 + 2 * k]; }
  const DenseLayout& output() const { return layers.back(); }
};

class NetworkParameters {
 public:
  explicit NetworkParameters(const NetworkConfig& cfg);

  const NetworkConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatrixView weight(const DenseLayout& l) const { return {values_.data() + l.weight, Eigen::Index(l.rows), Eigen::Index(l.cols)}; }
  MatrixMut weight(const DenseLayout& l) { return {values_.data() + l.weight, Eigen::Index(l.rows), Eigen::Index(l.cols)}; }
  VectorView bias(const DenseLayout& l) const { return {values_.data() + l.bias, Eigen::Index(l.rows)}; }
  VectorMut bias(const DenseLayout& l) { return {values_.data() + l.bias, Eigen::Index(l.rows)}; }

  /// Sum of squared weight-matrix entries (biases excluded).
  double weight_sq_norm() const;

  /// Incremented whenever the values change through an optimizer step; lets a
  /// backward pass detect a forward cache taken from older parameters.
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  Normalizer normalizer;

  bool operator==(const NetworkParameters& o) const {
    return config_ == o.config_ && values_ == o.values_ && normalizer == o.normalizer;
  }

 private:
  NetworkConfig config_;
  ParameterLayout layout_;
  ParamBuffer values_;
  std::uint64_t version_ = 0;
};

/// He-normal weights N(0, 2/fan_in), zero biases; deterministic in `seed`.
NetworkParameters init_network(const NetworkConfig& cfg, std::uint64_t seed);

/// Inverted dropout on one vector: identity in eval mode or at rate 0;
/// otherwise each unit is dropped with probability `rate` and survivors are
/// scaled by 1/(1 - rate).
std::vector<double> dropout(std::span<const double> x, double rate, Mode mode, std::uint64_t seed);
/// Applies an explicit keep mask (1 keep, 0 drop) with inverted scaling.
std::vector<double> apply_dropout_mask(std::span<const double> x, std::span<const double> keep, double rate);

/// One residual block on a single vector. `keep_scale`, when given, multiplies
/// the ReLU output elementwise (a dropout mask already divided by 1 - rate).
Vector residual_block_forward(const Vector& x, const Eigen::Ref<const RowMatrix>& w1, const Vector& b1,
                              const Eigen::Ref<const RowMatrix>& w2, const Vector& b2,
                              const Vector* keep_scale = nullptr);

/// Activations kept by a training-mode forward pass for the backward pass.
struct ForwardCache {
  std::uint64_t params_version = 0;
  const NetworkParameters* params = nullptr;
  Matrix input;                     // input_dim x B
  Matrix input_pre;                 // pre-activation of the input layer
  std::vector<Matrix> hidden;       // K + 1 block inputs/outputs
  std::vector<Matrix> block_pre;    // W1 h + b1 per block
  std::vector<Matrix> block_act;    // dropout(relu(.)) per block
  std::vector<Matrix> keep_scale;   // per block, empty when no dropout applied
  Matrix output;
};

/// Batched forward pass; columns are samples. Dropout masks are drawn from
/// `dropout_seed` in train mode.
Matrix forward(const NetworkParameters& params, const Matrix& input, Mode mode, std::uint64_t dropout_seed = 0,
               ForwardCache* cache = nullptr);

/// Single-sample convenience wrapper around forward().
Vector network_forward(const NetworkParameters& params, const Vector& input, Mode mode,
                       std::uint64_t dropout_seed = 0);

/// Mean over the batch of the masked squared error summed over features.
/// Throws Errc::invalid_argument for an empty batch, Errc::shape_mismatch on shapes.
double loss_mse(const Matrix& pred, const Matrix& target, const Matrix& mask);

/// L + λ Σ‖W‖² over weight matrices.
double regularized_loss(double loss, const NetworkParameters& params, double l2);

/// Exact gradient of regularized_loss(loss_mse(forward(...)), params, l2) with
/// respect to every parameter, laid out like NetworkParameters::values().
/// Throws Errc::stale_cache if the cache does not belong to `params` at its current version.
ParamBuffer backward(const NetworkParameters& params, const ForwardCache& cache, const Matrix& target,
                             const Matrix& mask, double l2);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(std::size_t n, AdamConfig cfg = {}) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  /// Bias-corrected update for step t >= 1.
  void step(std::span<double> params, std::span<const double> grads, std::uint64_t t, double lr);
  void step(NetworkParameters& params, std::span<const double> grads, std::uint64_t t, double lr);

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// η₀ (1 + γ t)^(-p).
double lr_schedule(double epoch, double lr0, double decay, double power);

/// Expands per-record body masks into a per-target-feature 0/1 mask.
Matrix target_mask(std::span<const SampleRecord> records);

}  // namespace rbd::nn
