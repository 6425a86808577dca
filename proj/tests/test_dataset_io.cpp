#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "rbd/binary_io.hpp"
#include "rbd/dataset_io.hpp"
#include "rbd/error.hpp"

using namespace rbd;
namespace fs = std::filesystem;

namespace {

Dataset small_dataset() {
  return assemble_dataset(generate_scenarios(21, 10, ScenarioConfig{}, 0.6, 1e-3, 1), 1e-3, 5);
}

fs::path temp_file(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "rbd_tests";
  fs::create_directories(dir);
  return dir / name;
}

Errc decode_error(std::span<const char> bytes) {
  try {
    decode_scenarios(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_SUITE("dataset_io") {

TEST_CASE("header layout") {
  const Dataset d = small_dataset();
  const std::vector<char> bytes = encode_scenarios(d.scenarios);
  REQUIRE(bytes.size() > 20);
  CHECK(std::memcmp(bytes.data(), "RBD1", 4) == 0);
  io::ByteReader r(bytes);
  r.expect_magic("RBD1");
  CHECK(r.get<std::uint32_t>() == 1);
  CHECK(r.get<std::uint32_t>() == 5);
  CHECK(r.get<std::uint64_t>() == 10);
  CHECK(r.get<std::uint64_t>() == d.scenarios[0].seed);
}

TEST_CASE("round trip is bit exact") {
  const Dataset d = small_dataset();
  const fs::path path = temp_file("roundtrip.rbd");
  write_dataset(path, d);
  CHECK(fs::exists(sidecar_path(path)));
  const Dataset back = read_dataset(path);
  REQUIRE(back.scenarios.size() == d.scenarios.size());
  CHECK(back.meta == d.meta);
  for (std::size_t i = 0; i < d.scenarios.size(); ++i) {
    const Scenario& a = d.scenarios[i];
    const Scenario& b = back.scenarios[i];
    CHECK(a.seed == b.seed);
    CHECK(a.flags == b.flags);
    CHECK(a.trajectory.initial == b.trajectory.initial);
    CHECK(a.trajectory.samples == b.trajectory.samples);
    CHECK(a.trajectory.events == b.trajectory.events);
  }
  for (Split s : {Split::train, Split::validation, Split::test}) {
    const auto ra = d.records(s);
    const auto rb = back.records(s);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t k = 0; k < ra.size(); ++k) {
      CHECK(ra[k].input == rb[k].input);
      CHECK(ra[k].target == rb[k].target);
    }
  }
  CHECK(encode_scenarios(back.scenarios) == encode_scenarios(d.scenarios));
}

TEST_CASE("corruption is detected") {
  const Dataset d = small_dataset();
  std::vector<char> bytes = encode_scenarios(d.scenarios);

  std::vector<char> magic = bytes;
  magic[0] = 'X';
  CHECK(decode_error(magic) == Errc::bad_magic);

  std::vector<char> version = bytes;
  version[4] = 9;
  CHECK(decode_error(version) == Errc::version_mismatch);

  std::vector<char> n_max = bytes;
  n_max[8] = 6;
  CHECK(decode_error(n_max) == Errc::shape_mismatch);

  for (std::size_t cut : {std::size_t{3}, std::size_t{30}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK(decode_error(std::span(bytes.data(), cut)) == Errc::truncated);
  }

  std::vector<char> trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_scenarios(trailing), Error);

  std::vector<char> meta = encode_meta(d.meta);
  meta[1] = 'Q';
  CHECK_THROWS_AS(decode_meta(meta), Error);
}

TEST_CASE("splits are disjoint and by scenario") {
  const Dataset d = small_dataset();
  std::size_t total = 0;
  for (Split s : {Split::train, Split::validation, Split::test}) total += d.scenario_indices(s).size();
  CHECK(total == d.scenarios.size());
  CHECK(d.scenario_indices(Split::train).size() == 8);
  for (const SampleRecord& r : d.records(Split::test)) {
    CHECK(d.meta.split[r.scenario] == Split::test);
  }
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(read_dataset(temp_file("does_not_exist.rbd")), Error);
}

}
