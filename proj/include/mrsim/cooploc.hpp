#pragma once

// n robots driving randomly in a square workspace, each running its own EKF
// on GPS plus inter-robot position measurements that travel over per-pair
// transport sessions.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mrsim/estimation.hpp"
#include "mrsim/kinematics.hpp"
#include "mrsim/transport.hpp"

namespace mrsim::cooploc {

enum class DelayMode { kNone, kOneWay };

/// "none" sends measurements over the bare channel: one copy each, no feedback.
enum class LinkProtocol { kNone, kUdp, kSrArq, kAcRlnc };

std::string_view delay_mode_name(DelayMode m) noexcept;
DelayMode parse_delay_mode(std::string_view s);
std::string_view link_protocol_name(LinkProtocol p) noexcept;
LinkProtocol parse_link_protocol(std::string_view s);
std::string_view estimator_name(DelayHandling h) noexcept;
DelayHandling parse_estimator(std::string_view s);

struct Config {
  int robots = 10;
  double workspace = 200.0;
  double dt = 0.1;
  int horizon = 2000;
  int resample_period = 8;
  int reset_period = 3;
  double wheelbase = 2.5;
  double sigma_gps = 3.0;
  double sigma_internal = 2.0;
  double sigma_process = 1.0;
  double sigma_theta_deg = 1.0;
  double sigma_v = 3.0;
  double sigma_delta_deg = 2.0;
  int rtt = 4;
  int window = 10;
  double alpha = 0.11;
  double lambda = 0.15;
  double a = 2.0;
  double b = 1.5;
  double epsilon = 0.0;
  LinkProtocol protocol = LinkProtocol::kNone;
  DelayMode delay_mode = DelayMode::kOneWay;
  DelayHandling estimator = DelayHandling::kIree;
  std::uint64_t seed = 1;

  double min_separation = 10.0;
  double init_speed_min = 1.0;
  double init_speed_max = 5.0;
  double v_max = 10.0;
  double accel_min = -1.0;
  double accel_max = 1.0;
  double steer_max_deg = 20.0;
  double avoid_distance = 8.0;
  double wall_margin = 5.0;
  double sensing_radius = std::numeric_limits<double>::infinity();
  int err_window = 200;
  int tail_slots = 500;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

struct Result {
  std::vector<double> err;  // Err(t) for t in [0, horizon)
  double tail_mean_err = 0.0;
  int beta = 1;
  transport::Metrics delivery;  // pooled over all directed pairs
  FilterCounters filters;       // summed over robots
  std::vector<std::vector<VehicleState>> truth;     // [slot][robot]
  std::vector<std::vector<Eigen::Vector2d>> estimate;  // [slot][robot]
};

Result run(const Config& cfg);

/// (1/n) sum_i (1/k) sum_{tau=t-k+1..t} |p_i(tau) - p_hat_i(tau)|, k = min(window, t+1).
double err_at(const std::vector<std::vector<Eigen::Vector2d>>& truth,
              const std::vector<std::vector<Eigen::Vector2d>>& estimate, int t, int window = 200);

/// Err(t) for every slot, O(T n) via running sums.
std::vector<double> err_series(const std::vector<std::vector<Eigen::Vector2d>>& truth,
                               const std::vector<std::vector<Eigen::Vector2d>>& estimate, int window = 200);

/// Mean of the last `n` entries (all of them if fewer).
double tail_mean(const std::vector<double>& series, int n);

struct SweepCell {
  Config config;
  Result result;
};

/// One run per (epsilon, protocol) with the template's seed, in parallel.
std::vector<SweepCell> sweep(const Config& base, const std::vector<double>& epsilons,
                             const std::vector<LinkProtocol>& protocols, int jobs);

}  // namespace mrsim::cooploc
