#include <doctest.h>

#include <cmath>
#include <limits>

#include <json.hpp>

#include "rbd/error.hpp"
#include "rbd/metrics.hpp"

using namespace rbd;

namespace {

std::vector<RigidBodyState> bodies(std::size_t n) {
  std::vector<RigidBodyState> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].position = {1.0 + i, 2.0, -3.0};
    out[i].orientation = quat_normalize({1.0, 0.2 * i, -0.1, 0.3});
    out[i].linear_velocity = {0.5, -1.0 * i, 2.0};
    out[i].angular_velocity = {0.1, 0.2, 0.3 + i};
  }
  return out;
}

SystemState static_system(std::size_t n) {
  SystemState sys;
  sys.env.gravity = {};
  sys.params.resize(n);
  sys.bodies.resize(n);
  for (std::size_t i = 0; i < n; ++i) sys.bodies[i].position = {2.0 * i, 0, 1.0};
  return sys;
}

SystemState falling_body() {
  SystemState sys;
  sys.params.resize(1);
  sys.bodies.resize(1);
  sys.bodies[0].position = {0, 0, 10};
  sys.bodies[0].linear_velocity = {1, -0.5, 2};
  return sys;
}

/// Predicts a fixed offset on the first body's x position.
class OffsetPredictor final : public Predictor {
 public:
  std::string name() const override { return "offset"; }
  std::vector<RigidBodyState> predict(const SystemState& sys) const override {
    auto out = sys.bodies;
    out[0].position.x += 0.1;
    return out;
  }
};

class NanPredictor final : public Predictor {
 public:
  std::string name() const override { return "nan"; }
  std::vector<RigidBodyState> predict(const SystemState& sys) const override {
    auto out = sys.bodies;
    if (sys.time > 0.05) out[0].position.x = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
};

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("component mse") {
  const auto truth = bodies(3);
  const std::vector<Prediction> exact{make_prediction(truth, truth)};
  // Renormalizing the predicted quaternion leaves roundoff in the orientation term.
  for (Component c : kComponents) CHECK(mse_component(exact, c) <= 1e-30);

  auto off = truth;
  off[0].position.x += 0.1;
  const std::vector<Prediction> one{make_prediction(off, truth)};
  // 0.01 spread over 3 bodies x 3 position features.
  CHECK(std::abs(mse_component(one, Component::position) - 0.01 / 9.0) <= 1e-15);
  CHECK(mse_component(one, Component::orientation) <= 1e-30);

  auto flipped = truth;
  for (auto& b : flipped) b.orientation = -b.orientation;
  const std::vector<Prediction> cover{make_prediction(flipped, truth)};
  CHECK(mse_component(cover, Component::orientation) <= 1e-30);
  CHECK(geodesic_angle_deg(cover) <= 1e-6);

  CHECK_THROWS_AS(mse_component(std::vector<Prediction>{}, Component::position), Error);
}

TEST_CASE("predicted quaternions are renormalized before scoring") {
  const auto truth = bodies(3);
  auto scaled = truth;
  for (auto& b : scaled) b.orientation = b.orientation * 3.0;
  const std::vector<Prediction> p{make_prediction(scaled, truth)};
  CHECK(mse_component(p, Component::orientation) <= 1e-30);
}

TEST_CASE("relative error") {
  std::vector<RigidBodyState> truth(3), pred(3);
  for (auto& b : truth) b.position = {2.0, 2.0, 2.0};
  for (auto& b : pred) b.position = {1.0, 1.0, 1.0};
  const std::vector<Prediction> half{make_prediction(pred, truth)};
  const RelativeError r = relative_error(half, Component::position);
  CHECK(std::abs(r.percent - 50.0) <= 1e-12);
  CHECK(r.used == 9);
  CHECK(r.excluded == 0);

  const std::vector<Prediction> exact{make_prediction(truth, truth)};
  CHECK(relative_error(exact, Component::position).percent == 0.0);

  // Zero linear velocity targets are excluded and counted.
  const RelativeError z = relative_error(exact, Component::orientation);
  CHECK(z.excluded == 9);
  CHECK(z.used == 3);
  try {
    relative_error(exact, Component::linear_velocity);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_targets);
  }
}

TEST_CASE("energy drift") {
  CHECK(std::abs(relative_energy_drift(100.0, 99.0) - 1.0) <= 1e-12);

  Scenario sc;
  sc.flags.conservative = true;
  sc.trajectory.initial = static_system(3);
  // Potential energy referenced to z = 0 gives |E| = 3 * 9.81 * 1 with gravity on.
  sc.trajectory.initial.env.gravity = {0, 0, -9.81};
  const std::vector<Scenario> set{sc};
  const IdentityPredictor identity;
  const EnergyConservation e = energy_conservation_error(identity, set, 20);
  CHECK(e.percent == 0.0);
  CHECK(e.scenarios == 1);

  Scenario tiny = sc;
  tiny.trajectory.initial.env.gravity = {};
  CHECK_THROWS_AS(energy_conservation_error(identity, std::vector<Scenario>{tiny}, 20), Error);
}

TEST_CASE("rollouts") {
  const IdentityPredictor identity;
  const RolloutResult still = rollout(identity, static_system(3), 30);
  REQUIRE(still.step_error.size() == 30);
  for (double e : still.step_error) CHECK(e == 0.0);

  const CoarseRk4Predictor rk4;
  const RolloutResult fall = rollout(rk4, falling_body(), 50);
  for (std::size_t s = 1; s <= 50; ++s) {
    CHECK(norm(fall.predicted[s][0].position - fall.truth[s][0].position) <= 1e-10);
  }

  const std::vector<double> steps{0.1, 0.2};
  const std::vector<double> cum = cumulative_error(steps);
  CHECK(std::abs(cum[1] - 0.3) <= 1e-15);

  const OffsetPredictor offset;
  const RolloutResult drift = rollout(offset, falling_body(), 40);
  for (std::size_t s = 1; s < drift.cumulative.size(); ++s) CHECK(drift.cumulative[s] >= drift.cumulative[s - 1]);

  const NanPredictor nan;
  try {
    rollout(nan, falling_body(), 10);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::prediction_diverged);
    CHECK(std::string(e.what()).find("step 4") != std::string::npos);
  }
  CHECK_THROWS_AS(rollout(identity, falling_body(), 0), Error);
}

TEST_CASE("categories") {
  auto events = [](std::initializer_list<std::uint64_t> steps) {
    std::vector<CollisionEvent> out;
    for (std::uint64_t s : steps) out.push_back({s, (s + 19) / 20, 0, 1, 1.0});
    return out;
  };
  CHECK(categorize_scenario(events({})) == Category::none);
  CHECK(categorize_scenario(events({10})) == Category::single);
  CHECK(categorize_scenario(events({10, 40})) == Category::multiple);
  CHECK(categorize_scenario(events({10, 10, 40})) == Category::simultaneous);
  CHECK(categorize_scenario(events({40, 10, 40})) == Category::simultaneous);
}

TEST_CASE("timing") {
  const CoarseRk4Predictor rk4;
  const std::vector<SystemState> systems{falling_body(), static_system(3)};
  const Timing t = benchmark_inference(rk4, systems, 100);
  CHECK(t.mean_ms > 0.0);
  CHECK(t.std_ms >= 0.0);
  CHECK(t.stable);
  CHECK(t.repeats == 100);
  CHECK_THROWS_AS(benchmark_inference(rk4, std::vector<SystemState>{}, 10), Error);
}

TEST_CASE("quartiles") {
  const Quartiles q = quartiles({4, 1, 3, 2, 5});
  CHECK(q.count == 5);
  CHECK(q.min == 1);
  CHECK(q.q1 == 2);
  CHECK(q.median == 3);
  CHECK(q.q3 == 4);
  CHECK(q.max == 5);
  CHECK(quartiles({1, 2}).median == 1.5);
  CHECK(quartiles({}).count == 0);
}

TEST_CASE("suite and reports") {
  Dataset data = assemble_dataset(generate_scenarios(8, 10, ScenarioConfig{}, 0.4, 1e-3, 1), 1e-3, 3);
  const IdentityPredictor identity;
  const CoarseRk4Predictor rk4;
  const FineSimulatorPredictor truth(data.meta.fine_dt);
  const std::vector<const Predictor*> preds{&truth, &rk4, &identity};
  SuiteOptions opts;
  opts.ece_steps = 10;
  opts.rollout_steps = 15;
  opts.rollout_scenarios = 1;
  opts.timing_repeats = 2;
  opts.timing_records = 4;
  const std::vector<MetricsReport> reports = evaluate_suite(preds, data, opts);
  REQUIRE(reports.size() == 3);
  for (Component c : kComponents) CHECK(reports[0].mse[static_cast<int>(c)] <= 1e-30);
  CHECK(reports[1].mse[0] > 0.0);
  for (const MetricsReport& r : reports) {
    for (double v : r.mse) CHECK(v >= 0.0);
    REQUIRE(r.mean_cumulative.size() == 15);
    for (std::size_t s = 1; s < r.mean_cumulative.size(); ++s) CHECK(r.mean_cumulative[s] >= r.mean_cumulative[s - 1]);
    std::size_t counted = 0;
    for (const auto& [cat, q] : r.category_position_mse) counted += q.count;
    CHECK(counted == data.scenario_indices(Split::test).size());
  }

  const std::string csv = report_csv(reports);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 1 + 3 * 11);
  CHECK(csv.rfind("predictor,metric,value,unit\n", 0) == 0);
  CHECK(csv.find("ground_truth,mse_position,0,m^2\n") != std::string::npos);
  CHECK(csv.find("rk4,inference_time_mean,") != std::string::npos);

  const auto json = nlohmann::json::parse(report_json(reports, opts));
  CHECK(json["schema_version"] == kReportSchemaVersion);
  CHECK(json["reports"].size() == 3);
  CHECK(json["reports"][2]["predictor"] == "identity");

  const std::string curve = cumulative_csv(std::vector<double>{0.5, 1.5});
  CHECK(curve == "t_seconds,E_cumulative\n0.02,0.5\n0.04,1.5\n");
}

TEST_CASE("diverging rollouts are counted, not fatal") {
  const Dataset data = assemble_dataset(generate_scenarios(8, 10, ScenarioConfig{}, 0.4, 1e-3, 1), 1e-3, 3);
  const NanPredictor nan;
  const std::vector<const Predictor*> preds{&nan};
  SuiteOptions opts;
  opts.rollout_steps = 10;
  opts.rollout_scenarios = 1;
  opts.timing_repeats = 0;
  const auto reports = evaluate_suite(preds, data, opts);
  CHECK(reports[0].diverged_rollouts == 1);
  CHECK(reports[0].rollout_cumulative.empty());
}

TEST_CASE("identity on a static test set scores zero") {
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 10; ++i) {
    Scenario s;
    s.seed = static_cast<std::uint64_t>(i);
    s.trajectory = simulate(static_system(3), 0.2);
    scenarios.push_back(s);
  }
  const Dataset data = assemble_dataset(std::move(scenarios), 1e-3, 1);
  const IdentityPredictor identity;
  const std::vector<const Predictor*> preds{&identity};
  SuiteOptions opts;
  opts.rollout_steps = 5;
  opts.timing_repeats = 1;
  const auto reports = evaluate_suite(preds, data, opts);
  for (double v : reports[0].mse) CHECK(v == 0.0);
  CHECK(reports[0].relative[0].percent == 0.0);
  // One test scenario, 10 records, 3 bodies; every velocity target is zero.
  CHECK(std::isnan(reports[0].relative[2].percent));
  CHECK(reports[0].relative[2].excluded == 10 * 3 * 3);
  CHECK(std::isnan(reports[0].ece.percent));
}

}
