#pragma once

// Dataset files.
//
// Trajectory file "RBD1" (little-endian): magic, u32 version = 1, u32 n_max = 5,
// u64 n_scenarios; per scenario: u64 seed, u32 n_bodies, u8 flags (bit0
// conservative, bit1 gravity), f64 restitution, linear drag, angular damping;
// per body: f64 mass, radius, inertia diagonal x3, external force x3, external
// torque x3; u32 n_samples; n_samples x n_bodies x 13 f64 states (position,
// quaternion wxyz, linear velocity, angular velocity); u32 n_events; per event:
// u32 fine step, u16 i, u16 j, f64 impulse.
//
// Sidecar "RBDS": magic, u32 version = 1, u64 n_scenarios, f64 fine_dt,
// u64 split seed, n_scenarios x u8 split, u8 target mode, u32 input dim,
// u32 target dim, f64 input means, input stds, target means, target stds.

#include <filesystem>
#include <vector>

#include "rbd/scenario.hpp"

namespace rbd {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kSidecarVersion = 1;

struct DatasetMeta {
  double fine_dt = kDefaultFineDt;
  std::uint64_t split_seed = 0;
  std::vector<Split> split;
  Normalizer normalizer;

  bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
  std::vector<Scenario> scenarios;
  DatasetMeta meta;

  /// Records of every scenario in `which`, in scenario order.
  std::vector<SampleRecord> records(Split which) const;
  std::vector<std::size_t> scenario_indices(Split which) const;
};

std::vector<char> encode_scenarios(const std::vector<Scenario>& scenarios);
/// `fine_dt` maps stored fine-step indices back to sample indices.
std::vector<Scenario> decode_scenarios(std::span<const char> bytes, double fine_dt = kDefaultFineDt);

std::vector<char> encode_meta(const DatasetMeta& meta);
DatasetMeta decode_meta(std::span<const char> bytes);

void write_scenarios(const std::filesystem::path& path, const std::vector<Scenario>& scenarios);
std::vector<Scenario> read_scenarios(const std::filesystem::path& path, double fine_dt = kDefaultFineDt);

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path);

/// Writes the trajectory file and its sidecar.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

/// Splits by scenario and fits the normalizer on the training records.
Dataset assemble_dataset(std::vector<Scenario> scenarios, double fine_dt, std::uint64_t split_seed,
                         TargetMode mode = TargetMode::absolute);

}  // namespace rbd
