#include "mrsim/overtake.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <numbers>
#include <stdexcept>

#include "mrsim/parallel.hpp"
#include "mrsim/rng.hpp"

namespace mrsim::overtake {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + " " + what);
}

}  // namespace

void Config::validate() const {
  require(lane_width > 0, "lane_width", "must be positive");
  require(v_ego > 0 && v_oncoming >= 0 && v_truck > 0, "speeds", "must be positive");
  require(a_max > 0, "a_max", "must be positive");
  require(delta_abort_deg > 0 && delta_abort_deg < 90, "delta_abort_deg", "must lie in (0, 90)");
  require(dt > 0, "dt", "must be positive");
  require(horizon >= 1, "horizon", "must be at least 1");
  require(interval_len >= 1 && horizon % interval_len == 0, "interval_len", "must divide the horizon");
  require(rtt >= 2 && rtt % 2 == 0, "rtt", "must be a positive even number of slots");
  require(beta >= 1, "beta", "must be at least 1");
  require(msg_req >= 1, "msg_req", "must be at least 1");
  require(success_first >= 0 && success_first <= 1 && success_last >= 0 && success_last <= 1, "success",
          "probabilities must lie in [0, 1]");
  require(car_length > 0 && car_width > 0 && truck_length > 0 && truck_width > 0, "footprints", "must be positive");
  require(wheelbase_ratio > 0, "wheelbase_ratio", "must be positive");
  require(steer_ramp_s >= 0, "steer_ramp_s", "must be non-negative");
  require(rollout_cap_s > 0, "rollout_cap_s", "must be positive");
  require(!deadline_override || (*deadline_override >= 0 && *deadline_override < horizon), "deadline_slot",
          "must lie in [0, horizon)");
  require(runs >= 1, "runs", "must be at least 1");
  require(body_len >= 4, "body_len", "must be at least 4");
}

ErasureProfile Config::profile() const {
  return ErasureProfile::linear(horizon / interval_len, interval_len, success_first, success_last, spacing);
}

std::string_view outcome_name(Outcome o) noexcept {
  switch (o) {
    case Outcome::kAbortedSafe: return "aborted_safe";
    case Outcome::kCollision: return "collision";
    case Outcome::kPassedUnsafe: return "passed_unsafe";
  }
  return "unknown";
}

Vehicles nominal(const Config& cfg, int t) {
  const double time = t * cfg.dt;
  Vehicles v;
  v.truck = {cfg.v_truck * time, 0.0, 0.0};
  const double ego_x0 = -cfg.truck_length / 2 - cfg.gap_to_truck - cfg.car_length / 2;
  v.ego = {ego_x0 + cfg.v_ego * time, cfg.lane_width, 0.0};
  const double closing = (cfg.v_ego + cfg.v_oncoming) * cfg.horizon * cfg.dt - cfg.oncoming_margin;
  const double b_x0 = cfg.oncoming_present ? ego_x0 + closing : 1e9;
  v.oncoming = {b_x0 - cfg.v_oncoming * time, cfg.lane_width, std::numbers::pi};
  return v;
}

namespace {

OrientedBox car_box(const Config& cfg, const VehicleState& s) {
  return {s.x, s.y, s.theta, cfg.car_length, cfg.car_width};
}

OrientedBox truck_box(const Config& cfg, const VehicleState& s) {
  return {s.x, s.y, s.theta, cfg.truck_length, cfg.truck_width};
}

bool hits(const Config& cfg, const VehicleState& ego, int t) {
  const Vehicles v = nominal(cfg, t);
  return obb_overlap(car_box(cfg, ego), truck_box(cfg, v.truck)) ||
         obb_overlap(car_box(cfg, ego), car_box(cfg, v.oncoming));
}

enum class Phase { kTurnIn, kStraighten, kSettle };

}  // namespace

Rollout rollout(const Config& cfg, int start, std::optional<int> through) {
  const double wheelbase = cfg.wheelbase_ratio * cfg.car_length;
  const double delta_max = deg2rad(cfg.delta_abort_deg);
  const double floor = std::max(0.0, cfg.v_truck - cfg.speed_floor_drop);
  const double y_switch = cfg.lane_width / 2 - cfg.switch_offset;
  const int cap = start + static_cast<int>(std::lround(cfg.rollout_cap_s / cfg.dt));

  Rollout r;
  // Slots before the abort follow the nominal overtaking path.
  for (int t = 0; t < start; ++t) {
    if (hits(cfg, nominal(cfg, t).ego, t)) {
      r.collision_slot = t;
      r.end_slot = t;
      return r;
    }
  }
  VehicleState ego = nominal(cfg, start).ego;
  double v = cfg.v_ego;
  Phase phase = Phase::kTurnIn;
  r.ego.push_back(ego);
  if (hits(cfg, ego, start)) {
    r.collision_slot = start;
    r.end_slot = start;
    return r;
  }
  const int last = std::max(cap, through.value_or(cap));
  for (int t = start; t < last; ++t) {
    const double elapsed = (t - start) * cfg.dt;
    double delta = 0.0;
    if (phase == Phase::kTurnIn && ego.y <= y_switch) phase = Phase::kStraighten;
    if (phase == Phase::kStraighten && ego.theta >= 0.0) phase = Phase::kSettle;
    switch (phase) {
      case Phase::kTurnIn:
        delta = cfg.steer_ramp_s > 0 ? -delta_max * std::min(1.0, elapsed / cfg.steer_ramp_s) : -delta_max;
        break;
      case Phase::kStraighten:
        delta = delta_max;
        break;
      case Phase::kSettle:
        // Small proportional correction toward the inner-lane centerline.
        delta = std::clamp(-0.1 * ego.y - 1.0 * ego.theta, -delta_max, delta_max);
        break;
    }
    v = std::max(floor, v - cfg.a_max * cfg.dt);
    ego = ackermann_step(ego, {v, delta}, cfg.dt, wheelbase);
    r.ego.push_back(ego);
    r.end_slot = t + 1;
    if (hits(cfg, ego, t + 1)) {
      r.collision_slot = t + 1;
      return r;
    }
    if (!r.completed && phase == Phase::kSettle && std::abs(ego.y) < cfg.settle_tol_y &&
        std::abs(ego.theta) < deg2rad(cfg.settle_tol_theta_deg)) {
      r.completed = true;
      if (!through || t + 1 >= *through) break;
    }
  }
  r.safe = !r.collision_slot;
  return r;
}

DeadlineScan compute_deadline(const Config& cfg) {
  DeadlineScan scan;
  scan.safe.resize(static_cast<std::size_t>(cfg.horizon));
  for (int s = 0; s < cfg.horizon; ++s) {
    scan.safe[static_cast<std::size_t>(s)] = rollout(cfg, s).safe;
    if (scan.safe[static_cast<std::size_t>(s)]) scan.deadline = s;
  }
  for (int s = 1; s < cfg.horizon; ++s) {
    if (scan.safe[static_cast<std::size_t>(s)] && !scan.safe[static_cast<std::size_t>(s - 1)]) scan.monotone = false;
  }
  return scan;
}

Outcome classify(const Config& cfg, std::optional<int> abort_slot) {
  if (abort_slot && *abort_slot < cfg.horizon) {
    const Rollout r = rollout(cfg, *abort_slot, cfg.horizon);
    return r.collision_slot ? Outcome::kCollision : Outcome::kAbortedSafe;
  }
  for (int t = 0; t <= cfg.horizon; ++t) {
    if (hits(cfg, nominal(cfg, t).ego, t)) return Outcome::kCollision;
  }
  return Outcome::kPassedUnsafe;
}

namespace {

std::optional<int> simulate_t25(const Config& cfg, int run_id) {
  const std::string label = "run/" + std::to_string(run_id);
  SlottedChannel ch(cfg.rtt, cfg.profile(), seed_stream(cfg.seed, "channel").derive(label));
  transport::ProtocolParams p;
  p.rtt = cfg.rtt;
  p.beta = cfg.beta;
  p.eps_hat_init = cfg.eps_hat_init;
  p.body_len = cfg.body_len;
  transport::Session session(cfg.protocol, p, std::move(ch), seed_stream(cfg.seed, "protocol").derive(label));

  int received = 0;
  for (int t = 0; t < cfg.horizon; ++t) {
    Bytes body(cfg.body_len, 0);
    const auto seq = static_cast<std::uint32_t>(t);
    std::copy_n(reinterpret_cast<const std::uint8_t*>(&seq), 4, body.begin());
    received += static_cast<int>(session.step(t, std::move(body)).size());
    if (received >= cfg.msg_req) return t;
  }
  return std::nullopt;
}

std::optional<int> abort_after(const Config& cfg, std::optional<int> t25) {
  if (t25 && *t25 + 1 < cfg.horizon) return *t25 + 1;
  return std::nullopt;
}

}  // namespace

RunOutcome run_once(const Config& cfg, int run_id) {
  cfg.validate();
  RunOutcome out;
  out.run_id = run_id;
  out.t25 = simulate_t25(cfg, run_id);
  out.abort_slot = abort_after(cfg, out.t25);
  out.outcome = classify(cfg, out.abort_slot);
  return out;
}

Reliability reliability_latency(const Config& cfg, int jobs) {
  cfg.validate();
  Reliability rel;
  rel.deadline = cfg.deadline_override ? *cfg.deadline_override : compute_deadline(cfg).deadline;

  // The episode outcome depends only on the abort slot; classify each once.
  std::vector<Outcome> by_abort(static_cast<std::size_t>(cfg.horizon) + 1);
  for (int s = 0; s <= cfg.horizon; ++s) {
    by_abort[static_cast<std::size_t>(s)] = classify(cfg, s < cfg.horizon ? std::optional<int>(s) : std::nullopt);
  }
  rel.runs = parallel_map(static_cast<std::size_t>(cfg.runs), jobs, [&](std::size_t i) {
    RunOutcome r;
    r.run_id = static_cast<int>(i);
    r.t25 = simulate_t25(cfg, r.run_id);
    r.abort_slot = abort_after(cfg, r.t25);
    r.outcome = by_abort[static_cast<std::size_t>(r.abort_slot.value_or(cfg.horizon))];
    return r;
  });

  std::vector<int> hist(static_cast<std::size_t>(cfg.horizon), 0);
  for (const RunOutcome& r : rel.runs) {
    if (r.t25) ++hist[static_cast<std::size_t>(*r.t25)];
  }
  rel.cdf.resize(hist.size());
  int acc = 0;
  for (std::size_t t = 0; t < hist.size(); ++t) {
    acc += hist[t];
    rel.cdf[t] = static_cast<double>(acc) / cfg.runs;
  }
  rel.at_deadline = rel.deadline >= 0 ? rel.cdf[static_cast<std::size_t>(rel.deadline)] : 0.0;
  return rel;
}

}  // namespace mrsim::overtake
