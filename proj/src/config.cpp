#include "mrsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mrsim {

std::string_view scenario_name(Scenario s) noexcept {
  return s == Scenario::kCooploc ? "cooploc" : "overtake";
}

Scenario parse_scenario(std::string_view s) {
  if (s == "cooploc") return Scenario::kCooploc;
  if (s == "overtake") return Scenario::kOvertake;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "' (expected cooploc or overtake)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(std::string_view s) {
  if (s == "inf") return INFINITY;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int to_int(std::string_view s) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(s) + "'");
}

struct Field {
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

using FieldTable = std::map<std::string, Field, std::less<>>;

void add(FieldTable& t, const std::string& key, double& ref) {
  t[key] = {[&ref](std::string_view s) { ref = to_double(s); }, [&ref] { return format_double(ref); }};
}

template <std::integral Int>
  requires(!std::same_as<Int, bool>)
void add(FieldTable& t, const std::string& key, Int& ref) {
  t[key] = {[&ref](std::string_view s) { ref = to_int<Int>(s); }, [&ref] { return std::to_string(ref); }};
}

void add(FieldTable& t, const std::string& key, bool& ref) {
  t[key] = {[&ref](std::string_view s) { ref = to_bool(s); }, [&ref] { return std::string(ref ? "true" : "false"); }};
}

void add(FieldTable& t, const std::string& key, std::string& ref) {
  t[key] = {[&ref](std::string_view s) { ref = std::string(s); }, [&ref] { return ref; }};
}

template <typename E, typename Parse, typename Name>
void add_enum(FieldTable& t, const std::string& key, E& ref, Parse parse, Name name) {
  t[key] = {[&ref, parse](std::string_view s) { ref = parse(s); }, [&ref, name] { return std::string(name(ref)); }};
}

template <typename E, typename Parse, typename Name>
void add_enum_list(FieldTable& t, const std::string& key, std::vector<E>& ref, Parse parse, Name name) {
  t[key] = {[&ref, parse](std::string_view s) {
              ref.clear();
              for (const std::string& item : split_list(s)) ref.push_back(parse(item));
            },
            [&ref, name] {
              std::string out;
              for (const E& e : ref) out += (out.empty() ? "" : ",") + std::string(name(e));
              return out;
            }};
}

void add_list(FieldTable& t, const std::string& key, std::vector<double>& ref) {
  t[key] = {[&ref](std::string_view s) {
              ref.clear();
              for (const std::string& item : split_list(s)) ref.push_back(to_double(item));
            },
            [&ref] {
              std::string out;
              for (double v : ref) out += (out.empty() ? "" : ",") + format_double(v);
              return out;
            }};
}

ErasureProfile::Spacing parse_spacing(std::string_view s) {
  if (s == "linear_success") return ErasureProfile::Spacing::kLinearSuccess;
  if (s == "linear_erasure") return ErasureProfile::Spacing::kLinearErasure;
  throw std::invalid_argument("unknown spacing '" + std::string(s) + "' (expected linear_success or linear_erasure)");
}

std::string_view spacing_name(ErasureProfile::Spacing s) {
  return s == ErasureProfile::Spacing::kLinearSuccess ? "linear_success" : "linear_erasure";
}

FieldTable fields_for(RunConfig& rc) {
  FieldTable t;
  t["scenario.name"] = {[&rc](std::string_view s) {
                          if (parse_scenario(s) != rc.scenario) {
                            throw std::invalid_argument("config is for scenario '" + std::string(s) + "', not '" +
                                                        std::string(scenario_name(rc.scenario)) + "'");
                          }
                        },
                        [&rc] { return std::string(scenario_name(rc.scenario)); }};
  add(t, "run.out", rc.out);
  add(t, "run.jobs", rc.jobs);

  if (rc.scenario == Scenario::kCooploc) {
    cooploc::Config& c = rc.cooploc;
    add(t, "scenario.seed", c.seed);
    add(t, "scenario.robots", c.robots);
    add(t, "scenario.workspace", c.workspace);
    add(t, "scenario.dt", c.dt);
    add(t, "scenario.horizon", c.horizon);
    add(t, "scenario.resample_period", c.resample_period);
    add(t, "scenario.reset_period", c.reset_period);
    add(t, "scenario.wheelbase", c.wheelbase);
    add(t, "scenario.min_separation", c.min_separation);
    add(t, "scenario.init_speed_min", c.init_speed_min);
    add(t, "scenario.init_speed_max", c.init_speed_max);
    add(t, "scenario.v_max", c.v_max);
    add(t, "scenario.accel_min", c.accel_min);
    add(t, "scenario.accel_max", c.accel_max);
    add(t, "scenario.steer_max_deg", c.steer_max_deg);
    add(t, "scenario.avoid_distance", c.avoid_distance);
    add(t, "scenario.wall_margin", c.wall_margin);
    add(t, "scenario.sigma_v", c.sigma_v);
    add(t, "scenario.sigma_delta_deg", c.sigma_delta_deg);
    add(t, "scenario.err_window", c.err_window);
    add(t, "scenario.tail_slots", c.tail_slots);
    add(t, "sensing.sigma_gps", c.sigma_gps);
    add(t, "sensing.sigma_internal", c.sigma_internal);
    add(t, "sensing.radius", c.sensing_radius);
    add(t, "estimator.sigma_process", c.sigma_process);
    add(t, "estimator.sigma_theta_deg", c.sigma_theta_deg);
    add(t, "estimator.window", c.window);
    add_enum(t, "estimator.kind", c.estimator, cooploc::parse_estimator, cooploc::estimator_name);
    add(t, "channel.epsilon", c.epsilon);
    add(t, "channel.rtt", c.rtt);
    add_enum(t, "channel.delay_mode", c.delay_mode, cooploc::parse_delay_mode, cooploc::delay_mode_name);
    add_enum(t, "transport.protocol", c.protocol, cooploc::parse_link_protocol, cooploc::link_protocol_name);
    add(t, "transport.alpha", c.alpha);
    add(t, "transport.lambda", c.lambda);
    add(t, "transport.a", c.a);
    add(t, "transport.b", c.b);
    add_list(t, "sweep.epsilons", rc.sweep.epsilons);
    add_enum_list(t, "sweep.protocols", rc.sweep.protocols, cooploc::parse_link_protocol, cooploc::link_protocol_name);
    add(t, "sweep.references", rc.sweep.references);
  } else {
    overtake::Config& c = rc.overtake;
    add(t, "scenario.seed", c.seed);
    add(t, "scenario.lane_width", c.lane_width);
    add(t, "scenario.v_ego", c.v_ego);
    add(t, "scenario.v_oncoming", c.v_oncoming);
    add(t, "scenario.v_truck", c.v_truck);
    add(t, "scenario.a_max", c.a_max);
    add(t, "scenario.delta_abort_deg", c.delta_abort_deg);
    add(t, "scenario.dt", c.dt);
    add(t, "scenario.horizon", c.horizon);
    add(t, "scenario.msg_req", c.msg_req);
    add(t, "scenario.car_length", c.car_length);
    add(t, "scenario.car_width", c.car_width);
    add(t, "scenario.truck_length", c.truck_length);
    add(t, "scenario.truck_width", c.truck_width);
    add(t, "scenario.wheelbase_ratio", c.wheelbase_ratio);
    add(t, "scenario.gap_to_truck", c.gap_to_truck);
    add(t, "scenario.oncoming_margin", c.oncoming_margin);
    add(t, "scenario.oncoming_present", c.oncoming_present);
    add(t, "scenario.steer_ramp_s", c.steer_ramp_s);
    add(t, "scenario.switch_offset", c.switch_offset);
    add(t, "scenario.speed_floor_drop", c.speed_floor_drop);
    add(t, "scenario.settle_tol_y", c.settle_tol_y);
    add(t, "scenario.settle_tol_theta_deg", c.settle_tol_theta_deg);
    add(t, "scenario.rollout_cap_s", c.rollout_cap_s);
    add(t, "channel.rtt", c.rtt);
    add(t, "channel.interval_len", c.interval_len);
    add(t, "channel.success_first", c.success_first);
    add(t, "channel.success_last", c.success_last);
    add_enum(t, "channel.spacing", c.spacing, parse_spacing, spacing_name);
    add_enum_list(t, "transport.protocols", rc.overtake_protocols, transport::parse_protocol, transport::protocol_name);
    add(t, "transport.beta", c.beta);
    add(t, "transport.eps_hat_init", c.eps_hat_init);
    add(t, "transport.body_len", c.body_len);
    add(t, "montecarlo.runs", c.runs);
    t["montecarlo.deadline_slot"] = {[&c](std::string_view s) {
                                       if (s == "auto") c.deadline_override.reset();
                                       else c.deadline_override = to_int<int>(s);
                                     },
                                     [&c] { return c.deadline_override ? std::to_string(*c.deadline_override) : "auto"; }};
  }
  return t;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second) throw std::invalid_argument("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::uint64_t RunConfig::seed() const noexcept {
  return scenario == Scenario::kCooploc ? cooploc.seed : overtake.seed;
}

void RunConfig::set_seed(std::uint64_t seed) noexcept {
  cooploc.seed = seed;
  overtake.seed = seed;
}

KeyValues RunConfig::echo() const {
  RunConfig copy = *this;
  const FieldTable t = fields_for(copy);
  KeyValues out;
  for (const auto& [key, field] : t) {
    if (key == "run.out" || key == "run.jobs") continue;  // do not change results
    out.emplace_back(key, field.get());
  }
  return out;
}

void RunConfig::validate() const {
  if (jobs < 0) throw std::invalid_argument("run.jobs must be non-negative");
  if (scenario == Scenario::kCooploc) {
    cooploc.validate();
    if (sweep.epsilons.empty()) throw std::invalid_argument("sweep.epsilons must not be empty");
    for (double e : sweep.epsilons) {
      if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("sweep.epsilons entries must lie in [0, 1]");
    }
  } else {
    overtake.validate();
    if (overtake_protocols.empty()) throw std::invalid_argument("transport.protocols must not be empty");
  }
}

RunConfig make_config(Scenario scenario, const KeyValues& kv) {
  RunConfig rc;
  rc.scenario = scenario;
  FieldTable t = fields_for(rc);
  for (const auto& [key, value] : kv) {
    const auto it = t.find(key);
    if (it == t.end()) throw std::invalid_argument("unknown key '" + key + "' for scenario " + std::string(scenario_name(scenario)));
    try {
      it->second.set(value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(key + ": " + e.what());
    }
  }
  rc.validate();
  return rc;
}

RunConfig load_config(Scenario scenario, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  return make_config(scenario, parse_key_values(in));
}

}  // namespace mrsim
