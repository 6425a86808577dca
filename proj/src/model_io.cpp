#include "rbd/model_io.hpp"

#include <cstdio>
#include <string>

#include "rbd/binary_io.hpp"
#include "rbd/error.hpp"

namespace rbd {

namespace {

constexpr std::uint32_t kModelVersionAbsolute = 1;
constexpr std::uint32_t kModelVersionWithMode = 2;

}  // namespace

std::vector<char> encode_model(const nn::NetworkParameters& params) {
  const nn::NetworkConfig& cfg = params.config();
  if (cfg.input_dim != kInputDim || cfg.output_dim != kTargetDim) {
    throw Error(Errc::shape_mismatch, "model files hold networks over the 100-input / 65-output record layout");
  }
  const bool with_mode = cfg.target_mode != TargetMode::absolute;
  io::ByteWriter w;
  w.put_magic("RBM1");
  w.put<std::uint32_t>(with_mode ? kModelVersionWithMode : kModelVersionAbsolute);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.architecture));
  if (with_mode) w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.target_mode));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.input_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.hidden));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.blocks));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.output_dim));
  w.put_f64s(params.normalizer.input_mean);
  w.put_f64s(params.normalizer.input_std);
  w.put_f64s(params.normalizer.target_mean);
  w.put_f64s(params.normalizer.target_std);
  w.put_f64s(params.values());
  return w.bytes();
}

nn::NetworkParameters decode_model(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("RBM1");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersionAbsolute && version != kModelVersionWithMode) {
    throw Error(Errc::version_mismatch, "model version " + std::to_string(version) + " is not supported");
  }
  nn::NetworkConfig cfg;
  const auto arch = r.get<std::uint8_t>();
  if (arch > 1) throw Error(Errc::invalid_argument, "unknown architecture byte");
  cfg.architecture = static_cast<nn::Architecture>(arch);
  if (version == kModelVersionWithMode) {
    const auto mode = r.get<std::uint8_t>();
    if (mode > 1) throw Error(Errc::invalid_argument, "unknown target mode");
    cfg.target_mode = static_cast<TargetMode>(mode);
  }
  cfg.input_dim = r.get<std::uint32_t>();
  cfg.hidden = r.get<std::uint32_t>();
  cfg.blocks = r.get<std::uint32_t>();
  cfg.output_dim = r.get<std::uint32_t>();
  if (cfg.input_dim != kInputDim || cfg.output_dim != kTargetDim) {
    throw Error(Errc::shape_mismatch, "model dimensions " + std::to_string(cfg.input_dim) + "/" +
                                          std::to_string(cfg.output_dim) + " do not match the 100/65 record layout");
  }
  cfg.dropout = 0.0;
  nn::validate(cfg);
  // Reject absurd hidden sizes before allocating.
  const nn::ParameterLayout layout(cfg);
  const std::size_t normalizer_bytes = 2 * (kInputDim + kTargetDim) * sizeof(double);
  if (r.remaining() != normalizer_bytes + layout.total * sizeof(double)) {
    if (r.remaining() < normalizer_bytes + layout.total * sizeof(double)) throw Error(Errc::truncated, "truncated file");
    throw Error(Errc::invalid_argument, "trailing bytes after model");
  }
  nn::NetworkParameters params(cfg);
  params.normalizer.mode = cfg.target_mode;
  r.get_f64s(params.normalizer.input_mean);
  r.get_f64s(params.normalizer.input_std);
  r.get_f64s(params.normalizer.target_mean);
  r.get_f64s(params.normalizer.target_std);
  r.get_f64s(params.values());
  return params;
}

void write_model(const std::filesystem::path& path, const nn::NetworkParameters& params) {
  io::write_file_atomic(path, encode_model(params));
}

nn::NetworkParameters read_model(const std::filesystem::path& path) { return decode_model(io::read_file(path)); }

void write_history_csv(const std::filesystem::path& path, const std::vector<nn::EpochStats>& history) {
  std::string text = "epoch,train_loss,val_loss,lr\n";
  char line[160];
  for (const nn::EpochStats& e : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss, e.lr);
    text += line;
  }
  io::write_file_atomic(path, text);
}

}  // namespace rbd
