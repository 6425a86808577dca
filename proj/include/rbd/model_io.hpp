#pragma once

// Model file "RBM1" (little-endian): magic, u32 version, u8 architecture
// (0 residual, 1 feedforward), [version 2 only: u8 target mode (0 absolute,
// 1 delta)], u32 input_dim, hidden, K, output_dim; normalizer as f64 arrays
// (input means, input stds, target means, target stds); then every parameter
// in layout order: input W row-major, input b, per block W1, b1, W2, b2,
// output W, output b. Absolute-target models are written as version 1.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "rbd/train.hpp"

namespace rbd {

std::vector<char> encode_model(const nn::NetworkParameters& params);
nn::NetworkParameters decode_model(std::span<const char> bytes);

void write_model(const std::filesystem::path& path, const nn::NetworkParameters& params);
nn::NetworkParameters read_model(const std::filesystem::path& path);

/// CSV with header "epoch,train_loss,val_loss,lr".
void write_history_csv(const std::filesystem::path& path, const std::vector<nn::EpochStats>& history);

}  // namespace rbd
