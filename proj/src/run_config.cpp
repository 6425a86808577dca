#include "rbd/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "rbd/binary_io.hpp"
#include "rbd/error.hpp"

namespace rbd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(Errc::invalid_argument,
              "invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                  std::string(expected) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    bad_value(key, value, std::is_floating_point_v<T> ? "a number" : "a nonnegative integer");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Binding {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Binding real(std::string name, std::string help, Access access) {
  return {{name, std::move(help)},
          [name, access](RunConfig& c, std::string_view v) { access(c) = parse_number<double>(name, v); },
          [access](const RunConfig& c) { return format(access(c)); }};
}

template <typename Access>
Binding integer(std::string name, std::string help, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  return {{name, std::move(help)},
          [name, access](RunConfig& c, std::string_view v) { access(c) = parse_number<T>(name, v); },
          [access](const RunConfig& c) { return std::to_string(access(c)); }};
}

template <typename Access>
Binding boolean(std::string name, std::string help, Access access) {
  return {{name, std::move(help)},
          [name, access](RunConfig& c, std::string_view v) { access(c) = parse_bool(name, v); },
          [access](const RunConfig& c) { return std::string(access(c) ? "true" : "false"); }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t;
    t.push_back(integer("scenario.min_bodies", "fewest bodies per scenario (3-5)",
                        [](auto& c) -> auto& { return c.scenario.min_bodies; }));
    t.push_back(integer("scenario.max_bodies", "most bodies per scenario (3-5)",
                        [](auto& c) -> auto& { return c.scenario.max_bodies; }));
    t.push_back(real("scenario.mass_min", "kg", [](auto& c) -> auto& { return c.scenario.mass_min; }));
    t.push_back(real("scenario.mass_max", "kg", [](auto& c) -> auto& { return c.scenario.mass_max; }));
    t.push_back(real("scenario.radius_min", "m", [](auto& c) -> auto& { return c.scenario.radius_min; }));
    t.push_back(real("scenario.radius_max", "m", [](auto& c) -> auto& { return c.scenario.radius_max; }));
    t.push_back(real("scenario.position_min", "lower corner of the placement cube, m",
                     [](auto& c) -> auto& { return c.scenario.position_min; }));
    t.push_back(real("scenario.position_max", "upper corner of the placement cube, m",
                     [](auto& c) -> auto& { return c.scenario.position_max; }));
    t.push_back(real("scenario.velocity_max", "per-component initial speed bound, m/s",
                     [](auto& c) -> auto& { return c.scenario.velocity_max; }));
    t.push_back(real("scenario.angular_velocity_max", "per-component initial spin bound, rad/s",
                     [](auto& c) -> auto& { return c.scenario.angular_velocity_max; }));
    t.push_back(real("scenario.force_max", "per-component external force bound, N",
                     [](auto& c) -> auto& { return c.scenario.force_max; }));
    t.push_back(real("scenario.torque_max", "per-component external torque bound, N m",
                     [](auto& c) -> auto& { return c.scenario.torque_max; }));
    t.push_back(real("scenario.restitution_min", "",
                     [](auto& c) -> auto& { return c.scenario.restitution_min; }));
    t.push_back(real("scenario.restitution_max", "",
                     [](auto& c) -> auto& { return c.scenario.restitution_max; }));
    t.push_back(real("scenario.linear_drag_max", "upper bound of the drag coefficient, kg/s",
                     [](auto& c) -> auto& { return c.scenario.linear_drag_max; }));
    t.push_back(real("scenario.angular_damping_max", "upper bound of the angular damping, N m s",
                     [](auto& c) -> auto& { return c.scenario.angular_damping_max; }));
    t.push_back(boolean("scenario.gravity", "apply gravity along -z",
                        [](auto& c) -> auto& { return c.scenario.gravity; }));
    t.push_back(boolean("scenario.conservative", "make every scenario conservative",
                        [](auto& c) -> auto& { return c.scenario.conservative; }));
    t.push_back(real("scenario.conservative_fraction", "share of conservative scenarios otherwise",
                     [](auto& c) -> auto& { return c.scenario.conservative_fraction; }));
    t.push_back(real("sim.duration", "trajectory length, s", [](auto& c) -> auto& { return c.duration; }));
    t.push_back(real("sim.fine_dt", "integration step, s", [](auto& c) -> auto& { return c.fine_dt; }));
    t.push_back(integer("data.scenarios", "scenario count", [](auto& c) -> auto& { return c.scenarios; }));
    t.push_back(integer("data.seed", "global generation seed",
                        [](auto& c) -> auto& { return c.data_seed; }));
    t.push_back(integer("data.split_seed", "train/validation/test split seed",
                        [](auto& c) -> auto& { return c.split_seed; }));
    t.push_back(integer("data.threads", "generation workers, 0 for all cores",
                        [](auto& c) -> auto& { return c.threads; }));
    t.push_back(integer("network.hidden", "hidden width",
                        [](auto& c) -> auto& { return c.network.hidden; }));
    t.push_back(integer("network.blocks", "number of residual blocks K",
                        [](auto& c) -> auto& { return c.network.blocks; }));
    t.push_back(real("network.dropout", "dropout rate", [](auto& c) -> auto& { return c.network.dropout; }));
    t.push_back(integer("network.seed", "initialization seed",
                        [](auto& c) -> auto& { return c.network.seed; }));
    t.push_back({{"network.architecture", "residual or feedforward"},
                 [](RunConfig& c, std::string_view v) {
                   if (v == "residual") c.network.architecture = nn::Architecture::residual;
                   else if (v == "feedforward") c.network.architecture = nn::Architecture::feedforward;
                   else bad_value("network.architecture", v, "residual or feedforward");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.network.architecture == nn::Architecture::residual ? "residual"
                                                                                           : "feedforward");
                 }});
    t.push_back({{"network.predict_delta", "predict state changes instead of absolute states"},
                 [](RunConfig& c, std::string_view v) {
                   c.network.target_mode =
                       parse_bool("network.predict_delta", v) ? TargetMode::delta : TargetMode::absolute;
                 },
                 [](const RunConfig& c) {
                   return std::string(c.network.target_mode == TargetMode::delta ? "true" : "false");
                 }});
    t.push_back(integer("train.epochs", "maximum epochs", [](auto& c) -> auto& { return c.train.epochs; }));
    t.push_back(integer("train.batch_size", "minibatch size",
                        [](auto& c) -> auto& { return c.train.batch_size; }));
    t.push_back(real("train.lr", "initial learning rate", [](auto& c) -> auto& { return c.train.lr; }));
    t.push_back(real("train.lr_decay", "learning-rate decay gamma",
                     [](auto& c) -> auto& { return c.train.lr_decay; }));
    t.push_back(real("train.lr_power", "learning-rate decay power",
                     [](auto& c) -> auto& { return c.train.lr_power; }));
    t.push_back(real("train.l2", "weight decay lambda", [](auto& c) -> auto& { return c.train.l2; }));
    t.push_back(integer("train.patience", "early-stopping patience, epochs",
                        [](auto& c) -> auto& { return c.train.patience; }));
    t.push_back(integer("train.seed", "shuffle and dropout seed",
                        [](auto& c) -> auto& { return c.train.seed; }));
    t.push_back(integer("eval.ece_steps", "rollout steps for the energy metric",
                        [](auto& c) -> auto& { return c.eval.ece_steps; }));
    t.push_back(integer("eval.rollout_steps", "long-horizon rollout steps",
                        [](auto& c) -> auto& { return c.eval.rollout_steps; }));
    t.push_back(integer("eval.rollout_scenarios", "test scenarios used for long rollouts",
                        [](auto& c) -> auto& { return c.eval.rollout_scenarios; }));
    t.push_back(integer("eval.timing_repeats", "timed inference passes",
                        [](auto& c) -> auto& { return c.eval.timing_repeats; }));
    t.push_back(integer("eval.timing_records", "records per timed pass",
                        [](auto& c) -> auto& { return c.eval.timing_records; }));
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Binding& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

ConfigEntries parse_config_text(std::string_view text) {
  ConfigEntries out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::invalid_argument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw Error(Errc::invalid_argument, "config line " + std::to_string(line_no) + ": empty key or value");
    }
    out.emplace_back(key, value);
  }
  return out;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const Binding& b : bindings()) {
    if (b.key.name == key) {
      b.set(cfg, value);
      return;
    }
  }
  throw Error(Errc::invalid_argument, "unknown config key '" + std::string(key) + "'");
}

void validate(const RunConfig& cfg) {
  validate(cfg.scenario);
  validate(cfg.network);
  nn::validate(cfg.train);
  if (!(cfg.duration > 0.0)) throw Error(Errc::invalid_argument, "sim.duration must be positive");
  substeps_per_sample(cfg.fine_dt);
  if (cfg.scenarios < 3) throw Error(Errc::invalid_argument, "data.scenarios must be at least 3 for a split");
  if (cfg.eval.rollout_scenarios > 0 && cfg.eval.rollout_steps == 0) {
    throw Error(Errc::invalid_argument, "eval.rollout_steps must be positive when rollouts are requested");
  }
}

RunConfig load_run_config(const std::filesystem::path& file, const ConfigEntries& overrides) {
  RunConfig cfg;
  if (!file.empty()) {
    const std::vector<char> bytes = io::read_file(file);
    for (const auto& [k, v] : parse_config_text(std::string_view(bytes.data(), bytes.size()))) {
      set_config_value(cfg, k, v);
    }
  }
  for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
  validate(cfg);
  return cfg;
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const Binding& b : bindings()) {
    out += b.key.name;
    out += " = ";
    out += b.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace rbd
