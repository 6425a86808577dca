// rbd: simulate, generate datasets, train, evaluate, roll out and self-check.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "rbd/binary_io.hpp"
#include "rbd/dataset_io.hpp"
#include "rbd/error.hpp"
#include "rbd/metrics.hpp"
#include "rbd/model_io.hpp"
#include "rbd/predictor.hpp"
#include "rbd/run_config.hpp"
#include "rbd/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Thrown for bad flags or configuration detected after CLI parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override one config key, KEY=VALUE (repeatable)");
  }

  rbd::ConfigEntries overrides() const {
    rbd::ConfigEntries out;
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
      out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
  }
};

/// Loads the run configuration; flags given explicitly are appended last so they win.
rbd::RunConfig load_config(const ConfigFlags& flags, rbd::ConfigEntries extra = {}) {
  rbd::ConfigEntries all = flags.overrides();
  all.insert(all.end(), extra.begin(), extra.end());
  try {
    return rbd::load_run_config(flags.file, all);
  } catch (const rbd::Error& e) {
    if (e.code() == rbd::Errc::invalid_argument) throw UsageError(e.what());
    throw;
  }
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

void require_output_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw UsageError("output directory does not exist: " + parent.string());
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 42;
  int bodies = 0;
  double duration = 5.0;
  std::string out;
  ConfigFlags config;
};

int cmd_simulate(const SimulateArgs& a) {
  rbd::ConfigEntries extra{{"sim.duration", std::to_string(a.duration)}};
  if (a.bodies != 0) {
    extra.emplace_back("scenario.min_bodies", std::to_string(a.bodies));
    extra.emplace_back("scenario.max_bodies", std::to_string(a.bodies));
  }
  const rbd::RunConfig cfg = load_config(a.config, extra);
  require_output_dir(a.out);

  const rbd::SampledScenario s = rbd::sample_scenario(a.seed, cfg.scenario);
  rbd::Scenario sc{a.seed, s.flags, rbd::simulate(s.state, cfg.duration, cfg.fine_dt)};
  rbd::write_scenarios(a.out, {sc});
  std::printf("bodies %zu samples %zu collision_events %zu\n", sc.trajectory.initial.size(),
              sc.trajectory.samples.size(), sc.trajectory.events.size());
  return kExitOk;
}

struct GenDataArgs {
  std::size_t scenarios = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  ConfigFlags config;
  CLI::Option* scenarios_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

int cmd_gen_data(const GenDataArgs& a) {
  rbd::ConfigEntries extra;
  if (*a.scenarios_opt) extra.emplace_back("data.scenarios", std::to_string(a.scenarios));
  if (*a.seed_opt) extra.emplace_back("data.seed", std::to_string(a.seed));
  if (*a.threads_opt) extra.emplace_back("data.threads", std::to_string(a.threads));
  const rbd::RunConfig cfg = load_config(a.config, extra);
  require_output_dir(a.out);

  std::vector<rbd::Scenario> scenarios = rbd::generate_scenarios(cfg.data_seed, cfg.scenarios, cfg.scenario,
                                                                 cfg.duration, cfg.fine_dt,
                                                                 resolve_threads(cfg.threads));
  const rbd::Dataset data =
      rbd::assemble_dataset(std::move(scenarios), cfg.fine_dt, cfg.split_seed, cfg.network.target_mode);
  rbd::write_dataset(a.out, data);

  const char* names[] = {"train", "validation", "test"};
  const rbd::Split splits[] = {rbd::Split::train, rbd::Split::validation, rbd::Split::test};
  for (int k = 0; k < 3; ++k) {
    std::size_t records = 0;
    const auto idx = data.scenario_indices(splits[k]);
    for (std::size_t i : idx) records += data.scenarios[i].trajectory.samples.size() - 1;
    std::printf("%s: %zu scenarios, %zu records\n", names[k], idx.size(), records);
  }
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string arch;
  std::string out;
  std::string history;
  ConfigFlags config;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  rbd::ConfigEntries extra;
  if (!a.arch.empty()) extra.emplace_back("network.architecture", a.arch);
  const rbd::RunConfig cfg = load_config(a.config, extra);
  require_file(a.data, "dataset");
  require_output_dir(a.out);

  const rbd::Dataset data = rbd::read_dataset(a.data);
  const std::vector<rbd::SampleRecord> train_records = data.records(rbd::Split::train);
  const std::vector<rbd::SampleRecord> val_records = data.records(rbd::Split::validation);
  rbd::Normalizer normalizer = data.meta.normalizer;
  if (normalizer.mode != cfg.network.target_mode) normalizer = rbd::fit_normalizer(train_records, cfg.network.target_mode);

  rbd::nn::NetworkParameters init = rbd::nn::init_network(cfg.network, cfg.network.seed);
  init.normalizer = normalizer;
  const rbd::nn::TrainingData train_set = rbd::nn::make_training_data(train_records, normalizer);
  const rbd::nn::TrainingData val_set = rbd::nn::make_training_data(val_records, normalizer);

  const rbd::nn::TrainResult result =
      rbd::nn::train(std::move(init), train_set, val_set, cfg.train, [&a](const rbd::nn::EpochStats& s) {
        if (!a.quiet) {
          std::printf("epoch %d train_loss %.6g val_loss %.6g lr %.6g\n", s.epoch, s.train_loss, s.val_loss, s.lr);
          std::fflush(stdout);
        }
      });
  rbd::write_model(a.out, result.params);
  rbd::write_history_csv(a.history.empty() ? a.out + ".history.csv" : a.history, result.history);
  std::printf("best_epoch %d best_val_loss %.17g epochs_run %zu\n", result.best_epoch, result.best_val_loss,
              result.history.size());
  return kExitOk;
}

std::unique_ptr<rbd::Predictor> make_baseline(const std::string& which, double fine_dt) {
  if (which == "rk4") return std::make_unique<rbd::CoarseRk4Predictor>();
  if (which == "identity") return std::make_unique<rbd::IdentityPredictor>();
  if (which == "ground_truth") return std::make_unique<rbd::FineSimulatorPredictor>(fine_dt);
  require_file(which, "baseline model");
  return std::make_unique<rbd::NetworkPredictor>(rbd::read_model(which), fs::path(which).stem().string());
}

struct EvalArgs {
  std::string data;
  std::string model;
  std::vector<std::string> baselines;
  std::string out_report;
  ConfigFlags config;
};

int cmd_eval(const EvalArgs& a) {
  const rbd::RunConfig cfg = load_config(a.config);
  require_file(a.data, "dataset");
  if (!a.model.empty()) require_file(a.model, "model");
  require_output_dir(a.out_report);
  if (a.model.empty() && a.baselines.empty()) throw UsageError("nothing to evaluate: give --model or --baselines");

  const rbd::Dataset data = rbd::read_dataset(a.data);
  std::vector<std::unique_ptr<rbd::Predictor>> owned;
  if (!a.model.empty()) owned.push_back(std::make_unique<rbd::NetworkPredictor>(rbd::read_model(a.model), "network"));
  for (const std::string& b : a.baselines) owned.push_back(make_baseline(b, data.meta.fine_dt));

  std::vector<const rbd::Predictor*> predictors;
  for (const auto& p : owned) predictors.push_back(p.get());
  const std::vector<rbd::MetricsReport> reports = rbd::evaluate_suite(predictors, data, cfg.eval);

  const std::string csv = rbd::report_csv(reports);
  const std::string json = rbd::report_json(reports, cfg.eval);
  rbd::io::write_file_atomic(a.out_report + ".csv", std::vector<char>(csv.begin(), csv.end()));
  rbd::io::write_file_atomic(a.out_report + ".json", std::vector<char>(json.begin(), json.end()));
  for (const rbd::MetricsReport& r : reports) {
    if (r.mean_cumulative.empty()) continue;
    const std::string curve = rbd::cumulative_csv(r.mean_cumulative);
    rbd::io::write_file_atomic(a.out_report + "_cumulative_" + r.predictor + ".csv",
                               std::vector<char>(curve.begin(), curve.end()));
  }
  std::fputs(csv.c_str(), stdout);
  return kExitOk;
}

struct RolloutArgs {
  std::string data;
  std::string predictor;
  std::size_t scenario = 0;
  std::size_t steps = 500;
  std::string out;
};

int cmd_rollout(const RolloutArgs& a) {
  require_file(a.data, "dataset");
  require_output_dir(a.out);
  if (a.steps < 1) throw UsageError("--steps must be at least 1");
  const rbd::Dataset data = rbd::read_dataset(a.data);
  const std::vector<std::size_t> test = data.scenario_indices(rbd::Split::test);
  if (a.scenario >= test.size()) {
    throw UsageError("--scenario must be below the test scenario count " + std::to_string(test.size()));
  }
  const std::unique_ptr<rbd::Predictor> predictor = make_baseline(a.predictor, data.meta.fine_dt);
  const rbd::Trajectory& traj = data.scenarios[test[a.scenario]].trajectory;
  const rbd::RolloutResult r = rbd::rollout(*predictor, traj.initial, a.steps, data.meta.fine_dt);
  const std::string curve = rbd::cumulative_csv(r.cumulative);
  rbd::io::write_file_atomic(a.out, std::vector<char>(curve.begin(), curve.end()));
  std::printf("steps %zu final_cumulative_error %.10g\n", a.steps, r.cumulative.back());
  return kExitOk;
}

struct VerifyArgs {
  bool corrupt = false;
  std::size_t trials = 10'000;
};

int cmd_verify(const VerifyArgs& a) {
  rbd::VerifyOptions opts;
  opts.corrupt_collision_sign = a.corrupt;
  opts.conservation_trials = a.trials;
  bool ok = true;
  for (const rbd::PropertyResult& r : rbd::run_verify(opts)) {
    std::puts(rbd::format_result(r).c_str());
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitRuntime;
}

std::string config_key_help() {
  std::string s = "Config keys (--config file or --set KEY=VALUE):\n";
  for (const rbd::ConfigKey& k : rbd::config_keys()) {
    s += "  " + k.name;
    if (!k.help.empty()) s += std::string(k.name.size() < 32 ? 32 - k.name.size() : 1, ' ') + k.help;
    s += '\n';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid-body simulation, learned one-step predictors and their evaluation"};
  app.require_subcommand(1);
  app.footer(config_key_help());

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "simulate one random scenario");
  sim_cmd->add_option("--seed", sim.seed, "scenario seed");
  sim_cmd->add_option("--bodies", sim.bodies, "body count")->check(CLI::Range(rbd::kMinBodies, rbd::kMaxBodies));
  sim_cmd->add_option("--duration", sim.duration, "seconds")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim.out, "output trajectory file")->required();
  sim.config.attach(sim_cmd);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a dataset and its sidecar");
  gen.scenarios_opt = gen_cmd->add_option("--scenarios", gen.scenarios, "scenario count (default 1000)");
  gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "global seed");
  gen.threads_opt = gen_cmd->add_option("--threads", gen.threads, "workers, 0 for all cores");
  gen_cmd->add_option("--out", gen.out, "output dataset file")->required();
  gen.config.attach(gen_cmd);

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train a one-step predictor");
  train_cmd->add_option("--data", tr.data, "dataset file")->required();
  train_cmd->add_option("--arch", tr.arch, "residual or feedforward")
      ->check(CLI::IsMember({"residual", "feedforward"}));
  train_cmd->add_option("--out", tr.out, "output model file")->required();
  train_cmd->add_option("--history", tr.history, "history CSV (default <out>.history.csv)");
  train_cmd->add_flag("--quiet", tr.quiet, "suppress per-epoch lines");
  tr.config.attach(train_cmd);

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate predictors on the test split");
  eval_cmd->add_option("--data", ev.data, "dataset file")->required();
  eval_cmd->add_option("--model", ev.model, "trained model file");
  eval_cmd->add_option("--baselines", ev.baselines, "rk4, identity, ground_truth or a model file (repeatable)");
  eval_cmd->add_option("--out-report", ev.out_report, "report path prefix (.csv, .json, _cumulative_*.csv)")
      ->required();
  ev.config.attach(eval_cmd);

  RolloutArgs ro;
  CLI::App* roll_cmd = app.add_subcommand("rollout", "autoregressive rollout of one test scenario");
  roll_cmd->add_option("--data", ro.data, "dataset file")->required();
  roll_cmd->add_option("--predictor", ro.predictor, "rk4, identity, ground_truth or a model file")->required();
  roll_cmd->add_option("--scenario", ro.scenario, "index into the test split");
  roll_cmd->add_option("--steps", ro.steps, "horizon in 0.02 s steps");
  roll_cmd->add_option("--out", ro.out, "cumulative-error CSV")->required();

  VerifyArgs vf;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the physics and optimizer self-checks");
  verify_cmd->add_option("--trials", vf.trials, "randomized contacts for the conservation checks");
  verify_cmd->add_flag("--corrupt-collision-sign", vf.corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim_cmd) return cmd_simulate(sim);
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_eval(ev);
    if (*roll_cmd) return cmd_rollout(ro);
    if (*verify_cmd) return cmd_verify(vf);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rbd::Error& e) {
    std::cerr << "error [" << rbd::errc_name(e.code()) << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
