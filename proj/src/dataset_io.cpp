#include "rbd/dataset_io.hpp"

#include <cmath>
#include <string>

#include "rbd/binary_io.hpp"
#include "rbd/error.hpp"

namespace rbd {

namespace {

void put_vec(io::ByteWriter& w, const Vec3& v) {
  w.put(v.x);
  w.put(v.y);
  w.put(v.z);
}

Vec3 get_vec(io::ByteReader& r) {
  const double x = r.get<double>();
  const double y = r.get<double>();
  const double z = r.get<double>();
  return {x, y, z};
}

void check_version(std::uint32_t got, std::uint32_t want, const char* what) {
  if (got != want) {
    throw Error(Errc::version_mismatch, std::string(what) + " version " + std::to_string(got) + " (expected " +
                                            std::to_string(want) + ")");
  }
}

}  // namespace

std::vector<char> encode_scenarios(const std::vector<Scenario>& scenarios) {
  io::ByteWriter w;
  w.put_magic("RBD1");
  w.put<std::uint32_t>(kDatasetVersion);
  w.put<std::uint32_t>(kMaxBodies);
  w.put<std::uint64_t>(scenarios.size());
  for (const Scenario& s : scenarios) {
    const Trajectory& t = s.trajectory;
    const SystemState& init = t.initial;
    w.put<std::uint64_t>(s.seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(init.size()));
    w.put<std::uint8_t>(s.flags.bits());
    w.put(init.env.restitution);
    w.put(init.env.linear_drag);
    w.put(init.env.angular_damping);
    for (const BodyParams& p : init.params) {
      w.put(p.mass);
      w.put(p.radius);
      put_vec(w, p.inertia_body_diag);
      put_vec(w, p.external_force);
      put_vec(w, p.external_torque);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.samples.size()));
    for (const auto& sample : t.samples) {
      for (const RigidBodyState& b : sample) w.put_f64s(state_features(b));
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.events.size()));
    for (const CollisionEvent& e : t.events) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(e.fine_step));
      w.put<std::uint16_t>(e.i);
      w.put<std::uint16_t>(e.j);
      w.put(e.impulse);
    }
  }
  return w.bytes();
}

std::vector<Scenario> decode_scenarios(std::span<const char> bytes, double fine_dt) {
  const std::size_t substeps = substeps_per_sample(fine_dt);
  io::ByteReader r(bytes);
  r.expect_magic("RBD1");
  check_version(r.get<std::uint32_t>(), kDatasetVersion, "dataset");
  const auto n_max = r.get<std::uint32_t>();
  if (n_max != kMaxBodies) {
    throw Error(Errc::shape_mismatch, "dataset n_max " + std::to_string(n_max) + " does not match " +
                                          std::to_string(kMaxBodies) + " body slots");
  }
  const auto n_scenarios = r.get<std::uint64_t>();
  std::vector<Scenario> out;
  for (std::uint64_t s = 0; s < n_scenarios; ++s) {
    Scenario sc;
    sc.seed = r.get<std::uint64_t>();
    const auto n_bodies = r.get<std::uint32_t>();
    if (n_bodies == 0 || n_bodies > n_max) throw Error(Errc::shape_mismatch, "bad body count in scenario");
    sc.flags = ScenarioFlags::from_bits(r.get<std::uint8_t>());
    Trajectory& t = sc.trajectory;
    t.fine_dt = fine_dt;
    SystemState& init = t.initial;
    init.env.gravity = sc.flags.gravity ? Vec3{0.0, 0.0, -kStandardGravity} : Vec3{};
    init.env.restitution = r.get<double>();
    init.env.linear_drag = r.get<double>();
    init.env.angular_damping = r.get<double>();
    init.params.resize(n_bodies);
    for (BodyParams& p : init.params) {
      p.mass = r.get<double>();
      p.radius = r.get<double>();
      p.inertia_body_diag = get_vec(r);
      p.external_force = get_vec(r);
      p.external_torque = get_vec(r);
    }
    const auto n_samples = r.get<std::uint32_t>();
    if (n_samples == 0) throw Error(Errc::shape_mismatch, "scenario without samples");
    // Guard the allocation against a corrupted count.
    if (r.remaining() / (n_bodies * kStateFeatures * sizeof(double)) < n_samples) {
      throw Error(Errc::truncated, "truncated file");
    }
    t.samples.resize(n_samples);
    t.times.resize(n_samples);
    for (std::uint32_t k = 0; k < n_samples; ++k) {
      t.times[k] = static_cast<double>(k) * kSampleInterval;
      t.samples[k].resize(n_bodies);
      for (RigidBodyState& b : t.samples[k]) {
        std::array<double, kStateFeatures> f{};
        r.get_f64s(f);
        b = state_from_features(f);
      }
    }
    init.bodies = t.samples[0];
    init.time = 0.0;
    const auto n_events = r.get<std::uint32_t>();
    if (r.remaining() / 16 < n_events) throw Error(Errc::truncated, "truncated file");
    t.events.resize(n_events);
    for (CollisionEvent& e : t.events) {
      e.fine_step = r.get<std::uint32_t>();
      e.i = r.get<std::uint16_t>();
      e.j = r.get<std::uint16_t>();
      e.impulse = r.get<double>();
      e.sample_step = (e.fine_step + substeps - 1) / substeps;
    }
    out.push_back(std::move(sc));
  }
  if (r.remaining() != 0) throw Error(Errc::invalid_argument, "trailing bytes after dataset");
  return out;
}

std::vector<char> encode_meta(const DatasetMeta& meta) {
  io::ByteWriter w;
  w.put_magic("RBDS");
  w.put<std::uint32_t>(kSidecarVersion);
  w.put<std::uint64_t>(meta.split.size());
  w.put(meta.fine_dt);
  w.put<std::uint64_t>(meta.split_seed);
  for (Split s : meta.split) w.put<std::uint8_t>(static_cast<std::uint8_t>(s));
  const Normalizer& n = meta.normalizer;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(n.mode));
  w.put<std::uint32_t>(kInputDim);
  w.put<std::uint32_t>(kTargetDim);
  w.put_f64s(n.input_mean);
  w.put_f64s(n.input_std);
  w.put_f64s(n.target_mean);
  w.put_f64s(n.target_std);
  return w.bytes();
}

DatasetMeta decode_meta(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("RBDS");
  check_version(r.get<std::uint32_t>(), kSidecarVersion, "sidecar");
  DatasetMeta meta;
  const auto n = r.get<std::uint64_t>();
  meta.fine_dt = r.get<double>();
  meta.split_seed = r.get<std::uint64_t>();
  if (r.remaining() < n) throw Error(Errc::truncated, "truncated file");
  meta.split.resize(n);
  for (Split& s : meta.split) {
    const auto v = r.get<std::uint8_t>();
    if (v > 2) throw Error(Errc::invalid_argument, "bad split tag");
    s = static_cast<Split>(v);
  }
  const auto mode = r.get<std::uint8_t>();
  if (mode > 1) throw Error(Errc::invalid_argument, "bad target mode");
  meta.normalizer.mode = static_cast<TargetMode>(mode);
  const auto in_dim = r.get<std::uint32_t>();
  const auto out_dim = r.get<std::uint32_t>();
  if (in_dim != kInputDim || out_dim != kTargetDim) throw Error(Errc::shape_mismatch, "normalizer dimensions");
  r.get_f64s(meta.normalizer.input_mean);
  r.get_f64s(meta.normalizer.input_std);
  r.get_f64s(meta.normalizer.target_mean);
  r.get_f64s(meta.normalizer.target_std);
  if (r.remaining() != 0) throw Error(Errc::invalid_argument, "trailing bytes after sidecar");
  return meta;
}

void write_scenarios(const std::filesystem::path& path, const std::vector<Scenario>& scenarios) {
  io::write_file_atomic(path, encode_scenarios(scenarios));
}

std::vector<Scenario> read_scenarios(const std::filesystem::path& path, double fine_dt) {
  return decode_scenarios(io::read_file(path), fine_dt);
}

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path) {
  std::filesystem::path p = dataset_path;
  p += ".meta";
  return p;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  if (dataset.meta.split.size() != dataset.scenarios.size()) {
    throw Error(Errc::shape_mismatch, "split assignment does not cover every scenario");
  }
  const std::vector<char> data = encode_scenarios(dataset.scenarios);
  const std::vector<char> meta = encode_meta(dataset.meta);
  io::write_file_atomic(path, data);
  io::write_file_atomic(sidecar_path(path), meta);
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset d;
  d.meta = decode_meta(io::read_file(sidecar_path(path)));
  d.scenarios = decode_scenarios(io::read_file(path), d.meta.fine_dt);
  if (d.meta.split.size() != d.scenarios.size()) {
    throw Error(Errc::shape_mismatch, "sidecar scenario count does not match the dataset");
  }
  return d;
}

std::vector<std::size_t> Dataset::scenario_indices(Split which) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (meta.split.at(i) == which) idx.push_back(i);
  }
  return idx;
}

std::vector<SampleRecord> Dataset::records(Split which) const {
  std::vector<SampleRecord> out;
  for (std::size_t i : scenario_indices(which)) {
    std::vector<SampleRecord> r = make_records(scenarios[i].trajectory, i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

Dataset assemble_dataset(std::vector<Scenario> scenarios, double fine_dt, std::uint64_t split_seed,
                         TargetMode mode) {
  Dataset d;
  d.scenarios = std::move(scenarios);
  d.meta.fine_dt = fine_dt;
  d.meta.split_seed = split_seed;
  d.meta.split = split_dataset(d.scenarios.size(), {0.8, 0.1, 0.1}, split_seed);
  const std::vector<SampleRecord> train = d.records(Split::train);
  d.meta.normalizer = fit_normalizer(train, mode);
  return d;
}

}  // namespace rbd
