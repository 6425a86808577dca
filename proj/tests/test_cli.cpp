#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rbd/binary_io.hpp"
#include "rbd/dataset_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "rbd_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const char* name) { return (work_dir() / name).string(); }

struct Run {
  int code;
  std::string out;
};

Run rbd_cli(const std::string& args) {
  const std::string log = path("last_output.txt");
  const std::string cmd = std::string(RBD_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

bool same_bytes(const std::string& a, const std::string& b) {
  return rbd::io::read_file(a) == rbd::io::read_file(b);
}

constexpr const char* kShort = " --set sim.duration=0.4";
constexpr const char* kTiny = " --set network.hidden=16 --set network.blocks=1 --set train.epochs=2";

const std::string& dataset() {
  static const std::string d = [] {
    const std::string p = path("small.rbd");
    REQUIRE(rbd_cli("gen-data --scenarios 10 --seed 3 --out " + p + kShort).code == 0);
    return p;
  }();
  return d;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
  CHECK(rbd_cli("--help").code == 0);
  const Run help = rbd_cli("--help");
  CHECK(help.out.find("train.batch_size") != std::string::npos);
  CHECK(rbd_cli("").code == 2);
  CHECK(rbd_cli("frobnicate").code == 2);
  CHECK(rbd_cli("simulate").code == 2);
  CHECK(rbd_cli("simulate --out " + path("x.rbd") + " --set train.bogus=1").code == 2);
  CHECK(rbd_cli("simulate --out " + path("x.rbd") + " --set novalue").code == 2);
  CHECK(rbd_cli("simulate --out /nonexistent_dir/x.rbd").code == 2);
}

TEST_CASE("simulate") {
  const Run r = rbd_cli("simulate --seed 42 --bodies 4 --out " + path("sim_a.rbd"));
  CHECK(r.code == 0);
  CHECK(r.out.find("bodies 4 samples 251") != std::string::npos);
  const auto scenarios = rbd::read_scenarios(path("sim_a.rbd"));
  REQUIRE(scenarios.size() == 1);
  CHECK(scenarios[0].trajectory.samples.size() == 251);

  CHECK(rbd_cli("simulate --seed 42 --bodies 4 --out " + path("sim_b.rbd")).code == 0);
  CHECK(same_bytes(path("sim_a.rbd"), path("sim_b.rbd")));

  CHECK(rbd_cli("simulate --bodies 9 --out " + path("sim_c.rbd")).code == 2);
  CHECK(rbd_cli("simulate --bodies 2 --out " + path("sim_c.rbd")).code == 2);
}

TEST_CASE("gen-data") {
  CHECK(rbd_cli("gen-data --scenarios 2 --out " + path("two.rbd")).code == 2);

  const Run r = rbd_cli("gen-data --scenarios 100 --seed 5 --threads 1 --out " + path("g1.rbd") + kShort);
  CHECK(r.code == 0);
  CHECK(r.out.find("train: 80 scenarios") != std::string::npos);
  CHECK(r.out.find("validation: 10 scenarios") != std::string::npos);
  CHECK(r.out.find("test: 10 scenarios") != std::string::npos);

  CHECK(rbd_cli("gen-data --scenarios 100 --seed 5 --threads 3 --out " + path("g3.rbd") + kShort).code == 0);
  CHECK(same_bytes(path("g1.rbd"), path("g3.rbd")));
  CHECK(same_bytes(path("g1.rbd.meta"), path("g3.rbd.meta")));
}

TEST_CASE("train") {
  CHECK(rbd_cli("train --data " + path("missing.rbd") + " --out " + path("m.rbm")).code == 2);
  CHECK(rbd_cli("train --data " + dataset() + " --arch transformer --out " + path("m.rbm")).code == 2);

  const Run r = rbd_cli("train --data " + dataset() + " --arch feedforward --out " + path("ff.rbm") + kTiny);
  CHECK(r.code == 0);
  CHECK(r.out.find("best_epoch") != std::string::npos);
  CHECK(fs::exists(path("ff.rbm.history.csv")));
  const std::vector<char> bytes = rbd::io::read_file(path("ff.rbm"));
  REQUIRE(bytes.size() > 9);
  CHECK(bytes[8] == 1);

  CHECK(rbd_cli("train --data " + dataset() + " --out " + path("ff2.rbm") + " --arch feedforward --quiet" + kTiny)
            .code == 0);
  CHECK(same_bytes(path("ff.rbm"), path("ff2.rbm")));
}

TEST_CASE("eval and rollout") {
  REQUIRE(rbd_cli("train --data " + dataset() + " --out " + path("res.rbm") + " --quiet" + kTiny).code == 0);
  const std::string eval_opts = " --set eval.rollout_steps=10 --set eval.timing_repeats=2 --set eval.ece_steps=5";
  const Run r = rbd_cli("eval --data " + dataset() + " --model " + path("res.rbm") +
                        " --baselines rk4 --baselines identity --out-report " + path("rep") + eval_opts);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("predictor,metric,value,unit", 0) == 0);
  CHECK(r.out.find("identity,mse_position,") != std::string::npos);
  CHECK(fs::exists(path("rep.csv")));
  CHECK(fs::exists(path("rep.json")));
  CHECK(fs::exists(path("rep_cumulative_network.csv")));
  CHECK(fs::exists(path("rep_cumulative_rk4.csv")));

  CHECK(rbd_cli("eval --data " + dataset() + " --out-report " + path("rep")).code == 2);

  // A dataset whose body-count header disagrees with the build is rejected at runtime.
  std::vector<char> bytes = rbd::io::read_file(dataset());
  bytes[8] = 6;
  rbd::io::write_file_atomic(path("bad.rbd"), bytes);
  fs::copy_file(dataset() + ".meta", path("bad.rbd.meta"), fs::copy_options::overwrite_existing);
  CHECK(rbd_cli("eval --data " + path("bad.rbd") + " --baselines identity --out-report " + path("bad")).code == 1);

  const Run roll =
      rbd_cli("rollout --data " + dataset() + " --predictor rk4 --steps 15 --out " + path("roll.csv"));
  CHECK(roll.code == 0);
  std::ifstream in(path("roll.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 16);
  CHECK(rbd_cli("rollout --data " + dataset() + " --predictor rk4 --scenario 99 --out " + path("roll.csv")).code ==
        2);
}

TEST_CASE("verify") {
  const Run ok = rbd_cli("verify --trials 500");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  const Run bad = rbd_cli("verify --trials 500 --corrupt-collision-sign");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}

}
