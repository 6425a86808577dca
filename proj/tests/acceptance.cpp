// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   acceptance [--only 1,4,11] [--cli PATH] [--report FILE]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rbd/binary_io.hpp"
#include "rbd/dataset_io.hpp"
#include "rbd/error.hpp"
#include "rbd/metrics.hpp"
#include "rbd/predictor.hpp"
#include "rbd/train.hpp"
#include "rbd/verify.hpp"

namespace fs = std::filesystem;
using namespace rbd;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Outcome from(const PropertyResult& r) { return {r.passed, format_result(r).substr(5)}; }

Outcome from_all(const std::vector<PropertyResult>& rs) {
  Outcome o{true, ""};
  for (const PropertyResult& r : rs) {
    o.passed = o.passed && r.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += format_result(r).substr(5);
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome quaternion_hygiene() {
  const auto scenarios = generate_scenarios(5, 100, ScenarioConfig{}, 5.0, kDefaultFineDt);
  double worst_norm = 0.0;
  double worst_correction = 0.0;
  for (const Scenario& s : scenarios) {
    for (const RigidBodyState& b : s.trajectory.initial.bodies) {
      worst_norm = std::max(worst_norm, std::abs(norm(b.orientation) - 1.0));
    }
    for (const auto& sample : s.trajectory.samples) {
      for (const RigidBodyState& b : sample) worst_norm = std::max(worst_norm, std::abs(norm(b.orientation) - 1.0));
    }
    worst_correction = std::max(worst_correction, s.trajectory.max_renorm_correction);
  }
  return {worst_norm <= 1e-9 && worst_correction < 1e-9,
          fmt("unit-norm deviation %.3e <= 1e-9, renormalization correction %.3e < 1e-9", worst_norm,
              worst_correction)};
}

Outcome memorization() {
  const Dataset data = assemble_dataset(generate_scenarios(9, 10, ScenarioConfig{}, 2.0, kDefaultFineDt), 1e-3, 1);
  const auto records = data.records(Split::train);
  const std::vector<SampleRecord> subset(records.begin(), records.begin() + 64);
  const nn::TrainingData set = nn::make_training_data(subset, data.meta.normalizer);

  nn::NetworkConfig net;  // default width and depth
  net.dropout = 0.0;
  nn::NetworkParameters init = nn::init_network(net, 1);
  init.normalizer = data.meta.normalizer;
  nn::TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.patience = 2000;
  cfg.l2 = 0.0;
  const double initial = nn::evaluate_loss(init, set);
  const nn::TrainResult r = nn::train(init, set, set, cfg);
  const double final_loss = nn::evaluate_loss(r.params, set);
  return {final_loss <= 1e-3 * initial,
          fmt("loss ratio %.3e <= 1e-3 after %zu epochs", final_loss / initial, r.history.size())};
}

Outcome ground_truth_energy() {
  ScenarioConfig cfg;
  cfg.conservative = true;
  const auto scenarios = generate_scenarios(11, 100, cfg, 5.0, kDefaultFineDt);
  const FineSimulatorPredictor truth;
  const EnergyConservation e = energy_conservation_error(truth, scenarios, 250);
  return {e.percent <= 0.5, fmt("ECE %.3e%% <= 0.5%% over %zu scenarios", e.percent, e.scenarios)};
}

// ---------------------------------------------------------------------------

struct ComparisonScale {
  std::size_t scenarios;
  int epochs;
  std::vector<std::uint64_t> seeds;
};

constexpr TargetMode kComparisonMode = TargetMode::delta;

struct ComparisonRun {
  std::vector<double> residual_mse;
  std::vector<double> feedforward_mse;
  std::vector<MetricsReport> reports;
};

ComparisonRun compare_architectures(const ComparisonScale& scale) {
  Dataset data = assemble_dataset(generate_scenarios(1, scale.scenarios, ScenarioConfig{}, 5.0, kDefaultFineDt), 1e-3,
                                  7, kComparisonMode);
  const nn::TrainingData train = nn::make_training_data(data.records(Split::train), data.meta.normalizer);
  const nn::TrainingData val = nn::make_training_data(data.records(Split::validation), data.meta.normalizer);

  std::vector<std::unique_ptr<Predictor>> owned;
  for (std::uint64_t seed : scale.seeds) {
    for (nn::Architecture arch : {nn::Architecture::residual, nn::Architecture::feedforward}) {
      nn::NetworkConfig net;
      net.architecture = arch;
      net.target_mode = kComparisonMode;
      nn::NetworkParameters init = nn::init_network(net, seed);
      init.normalizer = data.meta.normalizer;
      nn::TrainConfig cfg;
      cfg.epochs = scale.epochs;
      cfg.seed = seed;
      const nn::TrainResult r = nn::train(std::move(init), train, val, cfg);
      const std::string name =
          std::string(arch == nn::Architecture::residual ? "residual" : "feedforward") + "-" + std::to_string(seed);
      owned.push_back(std::make_unique<NetworkPredictor>(r.params, name));
    }
  }
  owned.push_back(std::make_unique<FineSimulatorPredictor>());
  owned.push_back(std::make_unique<CoarseRk4Predictor>());
  owned.push_back(std::make_unique<IdentityPredictor>());

  std::vector<const Predictor*> preds;
  for (const auto& p : owned) preds.push_back(p.get());
  SuiteOptions opts;
  opts.ece_steps = 0;
  opts.rollout_steps = 250;
  opts.rollout_scenarios = 20;
  opts.timing_repeats = 0;

  ComparisonRun run;
  run.reports = evaluate_suite(preds, data, opts);
  for (std::size_t s = 0; s < scale.seeds.size(); ++s) {
    run.residual_mse.push_back(run.reports[2 * s].mse[0]);
    run.feedforward_mse.push_back(run.reports[2 * s + 1].mse[0]);
  }
  return run;
}

Outcome architecture_ordering(const ComparisonRun& run) {
  Outcome o{true, ""};
  for (std::size_t s = 0; s < run.residual_mse.size(); ++s) {
    o.passed = o.passed && run.residual_mse[s] <= run.feedforward_mse[s];
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt("seed %zu position MSE residual %.4g vs feedforward %.4g", s + 1, run.residual_mse[s],
                    run.feedforward_mse[s]);
  }
  return o;
}

Outcome cumulative_monotone(const ComparisonRun& run) {
  std::size_t curves = 0;
  std::size_t violations = 0;
  std::size_t diverged = 0;
  for (const MetricsReport& r : run.reports) {
    diverged += r.diverged_rollouts;
    for (const auto& curve : r.rollout_cumulative) {
      ++curves;
      for (std::size_t s = 1; s < curve.size(); ++s) violations += !(curve[s] >= curve[s - 1]);
    }
  }
  return {curves > 0 && violations == 0,
          fmt("%zu decreasing steps over %zu curves (%zu diverged rollouts excluded)", violations, curves, diverged)};
}

// ---------------------------------------------------------------------------

bool same_bytes(const fs::path& a, const fs::path& b) { return io::read_file(a) == io::read_file(b); }

Outcome determinism(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "rbd_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) throw Error(Errc::io_error, "command failed: " + cmd);
  };
  auto p = [&](const char* name) { return (dir / name).string(); };
  const std::string gen = " --scenarios 40 --seed 12 --set sim.duration=1";
  run("gen-data" + gen + " --threads 1 --out " + p("a.rbd"));
  run("gen-data" + gen + " --threads 1 --out " + p("b.rbd"));
  run("gen-data" + gen + " --threads 4 --out " + p("c.rbd"));
  const std::string tr = " --quiet --set train.epochs=3 --set network.hidden=64 --set train.seed=5";
  run("train --data " + p("a.rbd") + " --out " + p("a.rbm") + tr);
  run("train --data " + p("a.rbd") + " --out " + p("b.rbm") + tr);
  run("train --data " + p("c.rbd") + " --out " + p("c.rbm") + tr);

  const bool data_same = same_bytes(p("a.rbd"), p("b.rbd")) && same_bytes(p("a.rbd"), p("c.rbd")) &&
                         same_bytes(p("a.rbd.meta"), p("b.rbd.meta")) && same_bytes(p("a.rbd.meta"), p("c.rbd.meta"));
  const bool model_same = same_bytes(p("a.rbm"), p("b.rbm")) && same_bytes(p("a.rbm"), p("c.rbm"));
  return {data_same && model_same, fmt("datasets identical: %s, models identical: %s", data_same ? "yes" : "no",
                                       model_same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string cli = RBD_CLI_PATH;
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',')->check(CLI::Range(1, 13));
  app.add_option("--cli", cli, "path of the rbd executable");
  std::string report_path;
  app.add_option("--report", report_path, "also write the result lines to this file");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int n) { return selected.empty() || selected.count(n) > 0; };

  std::optional<ComparisonRun> comparison;
  auto shared_comparison = [&]() -> const ComparisonRun& {
    if (!comparison) {
      // Criterion 13 on its own gets a smaller run than the full comparison.
      const bool full = wanted(11);
      comparison = compare_architectures(full ? ComparisonScale{1000, 10, {1, 2}} : ComparisonScale{60, 2, {1}});
    }
    return *comparison;
  };

  struct Criterion {
    int number;
    const char* name;
    double time_limit_s;  // 0: none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "elastic swap", 1, [] { return from(check_elastic_swap()); }},
      {2, "contact conservation", 30, [] { return from_all(check_contact_conservation()); }},
      {3, "rk4 order", 30, [] { return from(check_rk4_order()); }},
      {4, "free fall", 1, [] { return from(check_free_fall()); }},
      {5, "quaternion hygiene", 0, quaternion_hygiene},
      {6, "gradient check", 60, [] { return from(check_gradient()); }},
      {7, "adam step", 0, [] { return from(check_adam_step()); }},
      {8, "learning-rate schedule", 0, [] { return from(check_lr_schedule()); }},
      {9, "memorization", 300, memorization},
      {10, "ground-truth energy", 120, ground_truth_energy},
      {11, "residual vs feedforward", 1800, [&] { return architecture_ordering(shared_comparison()); }},
      {12, "determinism", 0, [&] { return determinism(cli); }},
      {13, "cumulative error monotone", 0, [&] { return cumulative_monotone(shared_comparison()); }},
  };

  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);
  bool all = true;
  for (const Criterion& c : criteria) {
    if (!wanted(c.number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.passed = false;
      o.detail += fmt(" [over the %.0f s limit]", c.time_limit_s);
    }
    all = all && o.passed;
    const std::string line =
        fmt("%s %2d %s: %s (%.2f s)\n", o.passed ? "PASS" : "FAIL", c.number, c.name, o.detail.c_str(), secs);
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) report << line << std::flush;
  }
  return all ? 0 : 1;
}
