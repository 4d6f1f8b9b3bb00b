#include "mrsim/cooploc.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "mrsim/parallel.hpp"
#include "mrsim/rng.hpp"
#include "mrsim/sensing.hpp"

namespace mrsim::cooploc {

std::string_view delay_mode_name(DelayMode m) noexcept { return m == DelayMode::kNone ? "none" : "one_way"; }

DelayMode parse_delay_mode(std::string_view s) {
  if (s == "none") return DelayMode::kNone;
  if (s == "one_way") return DelayMode::kOneWay;
  throw std::invalid_argument("unknown delay_mode '" + std::string(s) + "' (expected none or one_way)");
}

std::string_view link_protocol_name(LinkProtocol p) noexcept {
  switch (p) {
    case LinkProtocol::kNone: return "none";
    case LinkProtocol::kUdp: return "udp";
    case LinkProtocol::kSrArq: return "sr_arq";
    case LinkProtocol::kAcRlnc: return "ac_rlnc";
  }
  return "unknown";
}

LinkProtocol parse_link_protocol(std::string_view s) {
  if (s == "none") return LinkProtocol::kNone;
  if (s == "udp") return LinkProtocol::kUdp;
  if (s == "sr_arq") return LinkProtocol::kSrArq;
  if (s == "ac_rlnc") return LinkProtocol::kAcRlnc;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "' (expected none, udp, sr_arq or ac_rlnc)");
}

std::string_view estimator_name(DelayHandling h) noexcept { return h == DelayHandling::kNaive ? "naive" : "iree"; }

DelayHandling parse_estimator(std::string_view s) {
  if (s == "naive") return DelayHandling::kNaive;
  if (s == "iree") return DelayHandling::kIree;
  throw std::invalid_argument("unknown estimator '" + std::string(s) + "' (expected naive or iree)");
}

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + " " + what);
}

}  // namespace

void Config::validate() const {
  require(robots >= 2, "robots", "must be at least 2");
  require(robots <= 65535, "robots", "must fit a 16-bit id");
  require(workspace > 0, "workspace", "must be positive");
  require(dt > 0, "dt", "must be positive");
  require(horizon >= 1, "horizon", "must be at least 1");
  require(resample_period >= 1, "resample_period", "must be at least 1");
  require(reset_period >= 1, "reset_period", "must be at least 1");
  require(wheelbase > 0, "wheelbase", "must be positive");
  require(sigma_gps > 0, "sigma_gps", "must be positive");
  require(sigma_internal >= 0, "sigma_internal", "must be non-negative");
  require(sigma_process > 0, "sigma_process", "must be positive");
  require(sigma_theta_deg > 0, "sigma_theta_deg", "must be positive");
  require(sigma_v >= 0, "sigma_v", "must be non-negative");
  require(sigma_delta_deg >= 0, "sigma_delta_deg", "must be non-negative");
  require(rtt >= 2 && rtt % 2 == 0, "rtt", "must be a positive even number of slots");
  require(window >= 0, "window", "must be non-negative");
  require(alpha >= 0 && alpha < 1, "alpha", "must lie in [0, 1)");
  require(lambda > 0 && lambda <= 1, "lambda", "must lie in (0, 1]");
  require(a > 0, "a", "must be positive");
  require(b > 0, "b", "must be positive");
  require(epsilon >= 0 && epsilon <= 1, "epsilon", "must lie in [0, 1]");
  require(min_separation >= 0, "min_separation", "must be non-negative");
  require(init_speed_min >= 0 && init_speed_min <= init_speed_max, "init_speed_min", "must be in [0, init_speed_max]");
  require(init_speed_max <= v_max, "init_speed_max", "must not exceed v_max");
  require(accel_min <= accel_max, "accel_min", "must not exceed accel_max");
  require(steer_max_deg >= 0 && steer_max_deg < 90, "steer_max_deg", "must lie in [0, 90)");
  require(sensing_radius > 0, "sensing_radius", "must be positive");
  require(err_window >= 1, "err_window", "must be at least 1");
  require(tail_slots >= 1, "tail_slots", "must be at least 1");
}

double err_at(const std::vector<std::vector<Eigen::Vector2d>>& truth,
              const std::vector<std::vector<Eigen::Vector2d>>& estimate, int t, int window) {
  if (t < 0 || static_cast<std::size_t>(t) >= truth.size()) throw std::out_of_range("err_at: slot outside series");
  const int k = std::min(window, t + 1);
  const std::size_t n = truth[static_cast<std::size_t>(t)].size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int tau = t - k + 1; tau <= t; ++tau) {
      s += (truth[static_cast<std::size_t>(tau)][i] - estimate[static_cast<std::size_t>(tau)][i]).norm();
    }
    total += s / k;
  }
  return total / static_cast<double>(n);
}

std::vector<double> err_series(const std::vector<std::vector<Eigen::Vector2d>>& truth,
                               const std::vector<std::vector<Eigen::Vector2d>>& estimate, int window) {
  // Per-slot robot-averaged error; the window mean of that equals the
  // robot average of per-robot window means.
  std::vector<double> inst(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i < truth[t].size(); ++i) s += (truth[t][i] - estimate[t][i]).norm();
    inst[t] = s / static_cast<double>(truth[t].size());
  }
  std::vector<double> out(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(window), t + 1);
    double s = 0.0;
    for (std::size_t tau = t + 1 - k; tau <= t; ++tau) s += inst[tau];
    out[t] = s / static_cast<double>(k);
  }
  return out;
}

double tail_mean(const std::vector<double>& series, int n) {
  if (series.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = std::min(series.size(), static_cast<std::size_t>(std::max(1, n)));
  double s = 0.0;
  for (std::size_t i = series.size() - k; i < series.size(); ++i) s += series[i];
  return s / static_cast<double>(k);
}

namespace {

std::vector<VehicleState> place_robots(const Config& cfg, RngStream& rng) {
  std::vector<VehicleState> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < cfg.robots) {
    if (++attempts > 100000) throw std::invalid_argument("cannot place robots with the requested min_separation");
    VehicleState s{rng.uniform(0.0, cfg.workspace), rng.uniform(0.0, cfg.workspace),
                   rng.uniform(-std::numbers::pi, std::numbers::pi)};
    bool ok = true;
    for (const VehicleState& o : out) ok = ok && std::hypot(o.x - s.x, o.y - s.y) >= cfg.min_separation;
    if (ok) out.push_back(s);
  }
  return out;
}

// Per-pair delivery in the no-delay mode: an instantaneous erasure draw.
struct InstantLink {
  RngStream rng;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
};

}  // namespace

Result run(const Config& cfg) {
  cfg.validate();
  const int n = cfg.robots;
  const auto N = static_cast<std::size_t>(n);
  SeedRegistry seeds(cfg.seed);

  RngStream motion = seeds.stream("motion");
  RngStream control_noise = seeds.stream("control_noise");
  RngStream gps_rng = seeds.stream("gps");
  RngStream lidar_rng = seeds.stream("lidar");
  const RngStream channel_root = seeds.stream("channel");
  const RngStream protocol_root = seeds.stream("protocol");

  PolicyParams pp;
  pp.dt = cfg.dt;
  pp.resample_period = cfg.resample_period;
  pp.reset_period = cfg.reset_period;
  pp.v_max = cfg.v_max;
  pp.accel_min = cfg.accel_min;
  pp.accel_max = cfg.accel_max;
  pp.steer_max = deg2rad(cfg.steer_max_deg);
  pp.avoid_distance = cfg.avoid_distance;
  pp.workspace = cfg.workspace;
  pp.wall_margin = cfg.wall_margin;

  std::vector<VehicleState> state = place_robots(cfg, motion);
  std::vector<ControlPolicy> policies;
  for (int i = 0; i < n; ++i) {
    const double v0 = motion.uniform(cfg.init_speed_min, cfg.init_speed_max);
    policies.emplace_back(pp, v0, motion.derive("robot/" + std::to_string(i)));
  }

  EkfParams ep;
  ep.dt = cfg.dt;
  ep.wheelbase = cfg.wheelbase;
  ep.sigma_process = cfg.sigma_process;
  ep.sigma_theta = deg2rad(cfg.sigma_theta_deg);
  ep.sigma_gps = cfg.sigma_gps;
  ep.workspace = cfg.workspace;
  std::vector<LocalizationFilter> filters;
  for (int i = 0; i < n; ++i) filters.emplace_back(ep, cfg.estimator, cfg.window);

  Result res;
  res.beta = cfg.protocol == LinkProtocol::kNone ? 1 : transport::compute_beta(cfg.epsilon, cfg.alpha, cfg.lambda);

  transport::ProtocolParams tp;
  tp.rtt = cfg.rtt;
  tp.a = cfg.a;
  tp.b = cfg.b;
  tp.alpha = cfg.alpha;
  tp.lambda = cfg.lambda;
  tp.beta = res.beta;
  tp.eps_hat_init = cfg.epsilon;
  tp.body_len = kMeasurementWireSize;
  const transport::Protocol proto = [&] {
    switch (cfg.protocol) {
      case LinkProtocol::kSrArq: return transport::Protocol::kSrArq;
      case LinkProtocol::kAcRlnc: return transport::Protocol::kAcRlnc;
      default: return transport::Protocol::kUdp;
    }
  }();

  // Directed pair (i -> j) lives at index i * n + j.
  std::vector<std::unique_ptr<transport::Session>> sessions(N * N);
  std::vector<InstantLink> instant(N * N);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::string label = std::to_string(i) + "/" + std::to_string(j);
      const std::size_t idx = static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j);
      if (cfg.delay_mode == DelayMode::kOneWay) {
        SlottedChannel ch(cfg.rtt, ErasureProfile::constant(cfg.epsilon, cfg.horizon), channel_root.derive(label));
        sessions[idx] = std::make_unique<transport::Session>(proto, tp, std::move(ch), protocol_root.derive(label));
      } else {
        instant[idx].rng = channel_root.derive(label);
      }
    }
  }

  res.truth.assign(static_cast<std::size_t>(cfg.horizon), {});
  res.estimate.assign(static_cast<std::size_t>(cfg.horizon), {});
  std::vector<ControlInput> u_bar_prev(N);
  std::vector<double> prev_dist(N * N, -1.0);
  std::vector<std::vector<InterRobotMeasurement>> inbox(N);

  for (int t = 0; t < cfg.horizon; ++t) {
    const auto T = static_cast<std::size_t>(t);
    for (auto& box : inbox) box.clear();

    // Inter-robot measurements: i measures j and sends the record to j.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const std::size_t idx = static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j);
        const VehicleState& si = state[static_cast<std::size_t>(i)];
        const VehicleState& sj = state[static_cast<std::size_t>(j)];
        std::optional<Bytes> body;
        if (std::hypot(sj.x - si.x, sj.y - si.y) <= cfg.sensing_radius) {
          const auto m = lidar_measure(static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j), t, si, sj,
                                       cfg.sigma_internal, cfg.workspace, lidar_rng);
          if (cfg.delay_mode == DelayMode::kNone) {
            InstantLink& link = instant[idx];
            ++link.sent;
            if (!(link.rng.uniform_at(static_cast<std::uint64_t>(t)) < cfg.epsilon)) {
              ++link.delivered;
              inbox[static_cast<std::size_t>(j)].push_back(m);
            }
            continue;
          }
          body = serialize(m);
        }
        if (sessions[idx]) {
          for (const auto& d : sessions[idx]->step(t, std::move(body))) {
            inbox[static_cast<std::size_t>(j)].push_back(deserialize(d.body));
          }
        }
      }
    }

    // GPS and filter updates, then record the per-slot estimates.
    res.truth[T].resize(N);
    for (int i = 0; i < n; ++i) {
      const auto I = static_cast<std::size_t>(i);
      const GpsMeasurement g = gps_measure(i, t, state[I], cfg.sigma_gps, gps_rng);
      if (t == 0) {
        filters[I].initialize(0, g.z);
        filters[I].ingest_at_current(inbox[I]);
      } else {
        filters[I].step(t, u_bar_prev[I], g, inbox[I]);
      }
      res.truth[T][I] = state[I];
    }

    // Controls for this slot, then move the robots.
    std::vector<VehicleState> next(N);
    for (int i = 0; i < n; ++i) {
      const auto I = static_cast<std::size_t>(i);
      std::vector<VehicleState> others;
      std::vector<double> others_prev;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        others.push_back(state[static_cast<std::size_t>(j)]);
        others_prev.push_back(prev_dist[I * N + static_cast<std::size_t>(j)]);
      }
      const ControlInput u = policies[I].step(t, state[I], others, others_prev);
      u_bar_prev[I] = ControlInput{u.v + control_noise.normal(0.0, cfg.sigma_v),
                                   u.delta + control_noise.normal(0.0, deg2rad(cfg.sigma_delta_deg))};
      next[I] = ackermann_step(state[I], u, cfg.dt, cfg.wheelbase);
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        prev_dist[i * N + j] = std::hypot(state[i].x - state[j].x, state[i].y - state[j].y);
      }
    }
    state = std::move(next);
  }

  // Per-slot estimates as the filters finally hold them: for I-ReE this is
  // the value after every replay that touched the slot.
  for (std::size_t t = 0; t < res.estimate.size(); ++t) {
    res.estimate[t].resize(N);
    for (std::size_t i = 0; i < N; ++i) res.estimate[t][i] = filters[i].track().at(t).head<2>();
  }
  std::vector<std::vector<Eigen::Vector2d>> truth_pos(res.truth.size());
  for (std::size_t t = 0; t < res.truth.size(); ++t) {
    for (const VehicleState& v : res.truth[t]) truth_pos[t].emplace_back(v.x, v.y);
  }
  res.err = err_series(truth_pos, res.estimate, cfg.err_window);
  res.tail_mean_err = tail_mean(res.err, cfg.tail_slots);

  std::vector<transport::DeliveryRecord> records;
  std::uint64_t frames = 0;
  for (const auto& s : sessions) {
    if (!s) continue;
    records.insert(records.end(), s->records().begin(), s->records().end());
    frames += s->channel().frames_sent();
  }
  if (cfg.delay_mode == DelayMode::kOneWay) {
    res.delivery = transport::collect_metrics(records, frames);
  } else {
    std::uint64_t sent = 0, delivered = 0;
    for (const auto& l : instant) {
      sent += l.sent;
      delivered += l.delivered;
    }
    res.delivery.generated = sent;
    res.delivery.delivered = delivered;
    res.delivery.frames = sent;
    res.delivery.mean_in_order_delay = delivered ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    res.delivery.delivery_ratio = sent ? static_cast<double>(delivered) / static_cast<double>(sent) : 0.0;
    res.delivery.throughput = res.delivery.delivery_ratio;
  }
  for (const auto& f : filters) {
    res.filters.applied += f.counters().applied;
    res.filters.dropped_stale += f.counters().dropped_stale;
    res.filters.dropped_underrun += f.counters().dropped_underrun;
    res.filters.replays += f.counters().replays;
  }
  return res;
}

std::vector<SweepCell> sweep(const Config& base, const std::vector<double>& epsilons,
                             const std::vector<LinkProtocol>& protocols, int jobs) {
  std::vector<Config> cells;
  for (double e : epsilons) {
    for (LinkProtocol p : protocols) {
      Config c = base;
      c.epsilon = e;
      c.protocol = p;
      c.validate();
      cells.push_back(c);
    }
  }
  auto results = parallel_map(cells.size(), jobs, [&](std::size_t i) { return run(cells[i]); });
  std::vector<SweepCell> out;
  for (std::size_t i = 0; i < cells.size(); ++i) out.push_back(SweepCell{cells[i], std::move(results[i])});
  return out;
}

}  // namespace mrsim::cooploc
