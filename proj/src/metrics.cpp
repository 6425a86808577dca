#include "rbd/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include <json.hpp>

#include "rbd/error.hpp"

namespace rbd {

namespace {

struct FeatureRange {
  std::size_t begin;
  std::size_t end;
};

constexpr FeatureRange feature_range(Component c) {
  switch (c) {
    case Component::position: return {0, 3};
    case Component::orientation: return {3, 7};
    case Component::linear_velocity: return {7, 10};
    case Component::angular_velocity: return {10, 13};
  }
  return {0, 0};
}

// Predicted slot features with the quaternion sign flipped to agree with the target.
std::array<double, kStateFeatures> aligned_slot(const Prediction& p, std::size_t body) {
  std::array<double, kStateFeatures> out{};
  const double* pred = p.predicted.data() + body * kStateFeatures;
  const double* tgt = p.target.data() + body * kStateFeatures;
  std::copy(pred, pred + kStateFeatures, out.begin());
  const double d = pred[3] * tgt[3] + pred[4] * tgt[4] + pred[5] * tgt[5] + pred[6] * tgt[6];
  if (d < 0.0) {
    for (std::size_t f = 3; f < 7; ++f) out[f] = -out[f];
  }
  return out;
}

Quaternion align_to(const Quaternion& q, const Quaternion& reference) { return dot(q, reference) < 0.0 ? -q : q; }

}  // namespace

std::string_view component_name(Component c) {
  switch (c) {
    case Component::position: return "position";
    case Component::orientation: return "orientation";
    case Component::linear_velocity: return "linear_velocity";
    case Component::angular_velocity: return "angular_velocity";
  }
  return "";
}

std::string_view component_unit(Component c) {
  switch (c) {
    case Component::position: return "m^2";
    case Component::orientation: return "1";
    case Component::linear_velocity: return "(m/s)^2";
    case Component::angular_velocity: return "(rad/s)^2";
  }
  return "";
}

Prediction make_prediction(const std::vector<RigidBodyState>& predicted, const std::vector<RigidBodyState>& target) {
  if (predicted.size() != target.size()) throw Error(Errc::shape_mismatch, "prediction and target body counts differ");
  std::vector<RigidBodyState> cleaned = predicted;
  for (RigidBodyState& b : cleaned) {
    if (norm(b.orientation) > 1e-12 && is_finite(b.orientation)) b.orientation = quat_normalize(b.orientation);
  }
  Prediction p;
  p.predicted = encode_target(cleaned);
  p.target = encode_target(target);
  for (std::size_t b = 0; b < target.size(); ++b) p.active[b] = true;
  return p;
}

double mse_component(std::span<const Prediction> set, Component c) {
  const FeatureRange r = feature_range(c);
  double sum = 0.0;
  std::size_t count = 0;
  for (const Prediction& p : set) {
    for (std::size_t b = 0; b < kMaxBodies; ++b) {
      if (!p.active[b]) continue;
      const auto pred = aligned_slot(p, b);
      for (std::size_t f = r.begin; f < r.end; ++f) {
        const double d = pred[f] - p.target[b * kStateFeatures + f];
        sum += d * d;
        ++count;
      }
    }
  }
  if (count == 0) throw Error(Errc::invalid_argument, "empty prediction set");
  return sum / static_cast<double>(count);
}

RelativeError relative_error(std::span<const Prediction> set, Component c) {
  if (set.empty()) throw Error(Errc::invalid_argument, "empty prediction set");
  const FeatureRange r = feature_range(c);
  RelativeError out;
  double sum = 0.0;
  for (const Prediction& p : set) {
    for (std::size_t b = 0; b < kMaxBodies; ++b) {
      if (!p.active[b]) continue;
      const auto pred = aligned_slot(p, b);
      for (std::size_t f = r.begin; f < r.end; ++f) {
        const double y = p.target[b * kStateFeatures + f];
        if (std::abs(y) < kRelativeErrorGuard) {
          ++out.excluded;
          continue;
        }
        sum += std::abs(y - pred[f]) / std::abs(y);
        ++out.used;
      }
    }
  }
  if (out.used == 0) throw Error(Errc::degenerate_targets, "degenerate targets");
  out.percent = 100.0 * sum / static_cast<double>(out.used);
  return out;
}

double geodesic_angle_deg(std::span<const Prediction> set) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Prediction& p : set) {
    for (std::size_t b = 0; b < kMaxBodies; ++b) {
      if (!p.active[b]) continue;
      const double* a = p.predicted.data() + b * kStateFeatures + 3;
      const double* t = p.target.data() + b * kStateFeatures + 3;
      const double d = std::abs(a[0] * t[0] + a[1] * t[1] + a[2] * t[2] + a[3] * t[3]);
      sum += 2.0 * std::acos(std::min(1.0, d)) * 180.0 / std::numbers::pi;
      ++count;
    }
  }
  if (count == 0) throw Error(Errc::invalid_argument, "empty prediction set");
  return sum / static_cast<double>(count);
}

double relative_energy_drift(double e_initial, double e_final) {
  return 100.0 * std::abs(e_final - e_initial) / std::abs(e_initial);
}

std::vector<std::vector<RigidBodyState>> predict_rollout(const Predictor& predictor, const SystemState& initial,
                                                         std::size_t steps) {
  std::vector<std::vector<RigidBodyState>> states;
  states.reserve(steps + 1);
  states.push_back(initial.bodies);
  SystemState sys = initial;
  for (std::size_t s = 1; s <= steps; ++s) {
    std::vector<RigidBodyState> next = predictor.predict(sys);
    if (next.size() != sys.size()) throw Error(Errc::shape_mismatch, "predictor changed the body count");
    for (std::size_t b = 0; b < next.size(); ++b) {
      RigidBodyState& nb = next[b];
      if (!is_finite(nb.position) || !is_finite(nb.orientation) || !is_finite(nb.linear_velocity) ||
          !is_finite(nb.angular_velocity) || !(norm(nb.orientation) > 1e-12)) {
        throw Error(Errc::prediction_diverged,
                    predictor.name() + " produced a non-finite state at rollout step " + std::to_string(s));
      }
      nb.orientation = align_to(quat_normalize(nb.orientation), sys.bodies[b].orientation);
    }
    sys.bodies = std::move(next);
    sys.time = initial.time + static_cast<double>(s) * kSampleInterval;
    states.push_back(sys.bodies);
  }
  return states;
}

EnergyConservation energy_conservation_error(const Predictor& predictor, std::span<const Scenario> scenarios,
                                             std::size_t steps) {
  EnergyConservation out;
  double sum = 0.0;
  for (const Scenario& sc : scenarios) {
    if (!sc.flags.conservative) continue;
    const SystemState& init = sc.trajectory.initial;
    const double e0 = total_energy(init);
    if (!(std::abs(e0) >= kMinInitialEnergy)) continue;
    SystemState last = init;
    last.bodies = predict_rollout(predictor, init, steps).back();
    sum += relative_energy_drift(e0, total_energy(last));
    ++out.scenarios;
  }
  if (out.scenarios == 0) {
    throw Error(Errc::no_qualifying_scenarios, "no conservative scenario with |E| >= 1 J");
  }
  out.percent = sum / static_cast<double>(out.scenarios);
  return out;
}

double state_squared_error(const std::vector<RigidBodyState>& predicted, const std::vector<RigidBodyState>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw Error(Errc::shape_mismatch, "state sizes differ");
  double sum = 0.0;
  for (std::size_t b = 0; b < truth.size(); ++b) {
    RigidBodyState p = predicted[b];
    p.orientation = align_to(p.orientation, truth[b].orientation);
    const auto a = state_features(p);
    const auto t = state_features(truth[b]);
    for (std::size_t f = 0; f < kStateFeatures; ++f) sum += (a[f] - t[f]) * (a[f] - t[f]);
  }
  return sum / static_cast<double>(truth.size());
}

std::vector<double> cumulative_error(std::span<const double> step_error) {
  std::vector<double> out(step_error.size());
  double running = 0.0;
  for (std::size_t i = 0; i < step_error.size(); ++i) {
    running += step_error[i];
    out[i] = running;
  }
  return out;
}

namespace {

RolloutResult rollout_against(const Predictor& predictor, const SystemState& initial, const Trajectory& truth,
                              std::size_t steps) {
  RolloutResult r;
  r.predicted = predict_rollout(predictor, initial, steps);
  r.truth.assign(truth.samples.begin(), truth.samples.begin() + static_cast<std::ptrdiff_t>(steps + 1));
  r.step_error.reserve(steps);
  for (std::size_t s = 1; s <= steps; ++s) r.step_error.push_back(state_squared_error(r.predicted[s], r.truth[s]));
  r.cumulative = cumulative_error(r.step_error);
  return r;
}

}  // namespace

RolloutResult rollout(const Predictor& predictor, const SystemState& initial, std::size_t steps, double fine_dt) {
  if (steps < 1) throw Error(Errc::invalid_argument, "rollout horizon must be at least one step");
  const Trajectory truth = simulate(initial, static_cast<double>(steps) * kSampleInterval, fine_dt);
  return rollout_against(predictor, initial, truth, steps);
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::none: return "none";
    case Category::single: return "single";
    case Category::multiple: return "multiple";
    case Category::simultaneous: return "simultaneous";
  }
  return "";
}

Category categorize_scenario(std::span<const CollisionEvent> events) {
  if (events.empty()) return Category::none;
  if (events.size() == 1) return Category::single;
  std::vector<std::uint64_t> steps;
  steps.reserve(events.size());
  for (const CollisionEvent& e : events) steps.push_back(e.fine_step);
  std::sort(steps.begin(), steps.end());
  return std::adjacent_find(steps.begin(), steps.end()) != steps.end() ? Category::simultaneous : Category::multiple;
}

Timing benchmark_inference(const Predictor& predictor, std::span<const SystemState> systems, std::size_t repeats) {
  if (systems.empty()) throw Error(Errc::invalid_argument, "no records to time");
  if (repeats < 1) throw Error(Errc::invalid_argument, "need at least one timed repeat");
  using clock = std::chrono::steady_clock;

  std::vector<std::vector<RigidBodyState>> reference;
  reference.reserve(systems.size());
  for (const SystemState& s : systems) reference.push_back(predictor.predict(s));

  Timing t;
  t.repeats = repeats;
  std::vector<double> per_record(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = clock::now();
    for (std::size_t i = 0; i < systems.size(); ++i) {
      const std::vector<RigidBodyState> out = predictor.predict(systems[i]);
      if (out != reference[i]) t.stable = false;
    }
    const std::chrono::duration<double, std::milli> elapsed = clock::now() - start;
    per_record[r] = elapsed.count() / static_cast<double>(systems.size());
  }
  double mean = 0.0;
  for (double v : per_record) mean += v;
  mean /= static_cast<double>(repeats);
  double var = 0.0;
  for (double v : per_record) var += (v - mean) * (v - mean);
  t.mean_ms = mean;
  t.std_ms = repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
  return t;
}

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&values](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
  };
  q.min = values.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = values.back();
  return q;
}

std::vector<MetricsReport> evaluate_suite(std::span<const Predictor* const> predictors, const Dataset& data,
                                          const SuiteOptions& options) {
  const std::vector<std::size_t> test = data.scenario_indices(Split::test);
  if (test.empty()) throw Error(Errc::invalid_argument, "dataset has no test scenarios");

  std::vector<Scenario> conservative;
  for (std::size_t i : test) {
    if (data.scenarios[i].flags.conservative) conservative.push_back(data.scenarios[i]);
  }

  // Ground truth for the long rollouts is shared by every predictor.
  const std::size_t n_rollouts = std::min(options.rollout_scenarios, test.size());
  std::vector<Trajectory> long_truth;
  if (options.rollout_steps > 0) {
    for (std::size_t r = 0; r < n_rollouts; ++r) {
      const Trajectory& t = data.scenarios[test[r]].trajectory;
      long_truth.push_back(
          simulate(t.initial, static_cast<double>(options.rollout_steps) * kSampleInterval, data.meta.fine_dt));
    }
  }

  std::vector<SystemState> timing_states;
  for (std::size_t i : test) {
    const Trajectory& t = data.scenarios[i].trajectory;
    for (std::size_t k = 0; k + 1 < t.samples.size() && timing_states.size() < options.timing_records; ++k) {
      timing_states.push_back(t.state_at(k));
    }
    if (timing_states.size() >= options.timing_records) break;
  }

  std::vector<MetricsReport> reports;
  for (const Predictor* predictor : predictors) {
    MetricsReport rep;
    rep.predictor = predictor->name();

    std::vector<Prediction> all;
    std::map<Category, std::vector<double>> per_category;
    for (std::size_t i : test) {
      const Trajectory& t = data.scenarios[i].trajectory;
      if (t.samples.size() < 2) continue;
      std::vector<SystemState> inputs;
      inputs.reserve(t.samples.size() - 1);
      for (std::size_t k = 0; k + 1 < t.samples.size(); ++k) inputs.push_back(t.state_at(k));
      const auto predicted = predictor->predict_batch(inputs);
      std::vector<Prediction> scenario_set;
      scenario_set.reserve(predicted.size());
      for (std::size_t k = 0; k < predicted.size(); ++k) {
        scenario_set.push_back(make_prediction(predicted[k], t.samples[k + 1]));
      }
      per_category[categorize_scenario(t.events)].push_back(mse_component(scenario_set, Component::position));
      all.insert(all.end(), scenario_set.begin(), scenario_set.end());
    }
    for (std::size_t c = 0; c < kComponents.size(); ++c) {
      rep.mse[c] = mse_component(all, kComponents[c]);
      try {
        rep.relative[c] = relative_error(all, kComponents[c]);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_targets) throw;
        const FeatureRange fr = feature_range(kComponents[c]);
        std::size_t slots = 0;
        for (const Prediction& p : all) slots += static_cast<std::size_t>(std::count(p.active.begin(), p.active.end(), true));
        rep.relative[c] = {std::numeric_limits<double>::quiet_NaN(), 0, slots * (fr.end - fr.begin)};
      }
    }
    rep.geodesic_deg = geodesic_angle_deg(all);
    for (Category cat : {Category::none, Category::single, Category::multiple, Category::simultaneous}) {
      rep.category_position_mse[cat] = quartiles(per_category[cat]);
    }

    if (conservative.empty() || options.ece_steps == 0) {
      rep.ece.percent = std::numeric_limits<double>::quiet_NaN();
    } else {
      try {
        rep.ece = energy_conservation_error(*predictor, conservative, options.ece_steps);
      } catch (const Error& e) {
        if (e.code() != Errc::no_qualifying_scenarios && e.code() != Errc::prediction_diverged) throw;
        rep.ece.percent = std::numeric_limits<double>::quiet_NaN();
      }
    }

    for (std::size_t r = 0; r < long_truth.size(); ++r) {
      try {
        const RolloutResult res =
            rollout_against(*predictor, long_truth[r].initial, long_truth[r], options.rollout_steps);
        rep.rollout_cumulative.push_back(res.cumulative);
      } catch (const Error& e) {
        if (e.code() != Errc::prediction_diverged) throw;
        ++rep.diverged_rollouts;
      }
    }
    if (!rep.rollout_cumulative.empty()) {
      rep.mean_cumulative.assign(options.rollout_steps, 0.0);
      for (const auto& curve : rep.rollout_cumulative) {
        for (std::size_t s = 0; s < curve.size(); ++s) rep.mean_cumulative[s] += curve[s];
      }
      for (double& v : rep.mean_cumulative) v /= static_cast<double>(rep.rollout_cumulative.size());
    }

    if (options.timing_repeats > 0 && !timing_states.empty()) {
      rep.timing = benchmark_inference(*predictor, timing_states, options.timing_repeats);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string report_csv(std::span<const MetricsReport> reports) {
  std::string out = "predictor,metric,value,unit\n";
  auto row = [&out](const std::string& p, std::string_view metric, double value, std::string_view unit) {
    out += p;
    out += ',';
    out += metric;
    out += ',';
    out += fmt_double(value);
    out += ',';
    out += unit;
    out += '\n';
  };
  for (const MetricsReport& r : reports) {
    for (std::size_t c = 0; c < kComponents.size(); ++c) {
      row(r.predictor, "mse_" + std::string(component_name(kComponents[c])), r.mse[c], component_unit(kComponents[c]));
    }
    for (std::size_t c = 0; c < kComponents.size(); ++c) {
      row(r.predictor, "re_" + std::string(component_name(kComponents[c])), r.relative[c].percent, "%");
    }
    row(r.predictor, "ece", r.ece.percent, "%");
    row(r.predictor, "inference_time_mean", r.timing.mean_ms, "ms");
    row(r.predictor, "inference_time_std", r.timing.std_ms, "ms");
  }
  return out;
}

std::string report_json(std::span<const MetricsReport> reports, const SuiteOptions& options) {
  using nlohmann::json;
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["conventions"] = {
      {"mse", "mean over scalar features of the component, active bodies only"},
      {"orientation", "predicted quaternions renormalized and sign-aligned to the target before scoring"},
      {"relative_error_guard", kRelativeErrorGuard},
      {"ece", "conservative test scenarios with |E_initial| >= 1 J, potential referenced to z = 0"},
      {"cumulative_error", "running sum of per-step squared state error averaged over bodies"},
  };
  doc["options"] = {{"ece_steps", options.ece_steps},
                    {"rollout_steps", options.rollout_steps},
                    {"rollout_scenarios", options.rollout_scenarios},
                    {"timing_repeats", options.timing_repeats},
                    {"timing_records", options.timing_records}};
  json rows = json::array();
  for (const MetricsReport& r : reports) {
    json j;
    j["predictor"] = r.predictor;
    for (std::size_t c = 0; c < kComponents.size(); ++c) {
      const std::string name(component_name(kComponents[c]));
      j["mse"][name] = r.mse[c];
      j["relative_error_percent"][name] = r.relative[c].percent;
      j["relative_error_excluded"][name] = r.relative[c].excluded;
    }
    j["geodesic_angle_deg"] = r.geodesic_deg;
    j["ece_percent"] = r.ece.percent;
    j["ece_scenarios"] = r.ece.scenarios;
    j["inference_time_ms"] = {{"mean", r.timing.mean_ms}, {"std", r.timing.std_ms},
                              {"repeats", r.timing.repeats}, {"stable", r.timing.stable}};
    for (const auto& [cat, q] : r.category_position_mse) {
      j["category_position_mse"][std::string(category_name(cat))] = {
          {"count", q.count}, {"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}};
    }
    j["mean_cumulative_error"] = r.mean_cumulative;
    j["diverged_rollouts"] = r.diverged_rollouts;
    rows.push_back(std::move(j));
  }
  doc["reports"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string cumulative_csv(std::span<const double> cumulative) {
  std::string out = "t_seconds,E_cumulative\n";
  for (std::size_t s = 0; s < cumulative.size(); ++s) {
    out += fmt_double(static_cast<double>(s + 1) * kSampleInterval);
    out += ',';
    out += fmt_double(cumulative[s]);
    out += '\n';
  }
  return out;
}

}  // namespace rbd
