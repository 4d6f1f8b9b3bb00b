#pragma once

// Per-robot EKF over the Ackermann model, observing global position, with
// two ways of handling delayed inter-robot measurements: apply on arrival
// (naive) or buffer the last D slots and replay chronologically (I-ReE).

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mrsim/kinematics.hpp"
#include "mrsim/sensing.hpp"

namespace mrsim {

struct EkfState {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // x, y, theta
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
};

struct EkfParams {
  double dt = 0.1;
  double wheelbase = 2.5;
  double sigma_process = 1.0;
  double sigma_theta = deg2rad(1.0);
  double sigma_gps = 3.0;
  double workspace = 200.0;
  double sigma_theta_init = deg2rad(10.0);

  /// diag(sigma_process^2, sigma_process^2, sigma_theta^2).
  Eigen::Matrix3d process_noise() const;
};

/// Motion Jacobian of the Ackermann step with respect to the state.
Eigen::Matrix3d motion_jacobian(const Eigen::Vector3d& mean, const ControlInput& u, double dt);

/// Mean through the motion model with the (noisy) control taken as exact,
/// P <- F P F^T + Q, symmetrized. Throws std::invalid_argument on non-finite input.
EkfState predict(const EkfState& s, const ControlInput& u_bar, double dt, double wheelbase, const Eigen::Matrix3d& q);

/// Position update with H = [I2 0]. Throws std::invalid_argument when the
/// innovation covariance is not positive definite.
EkfState update(const EkfState& s, const Eigen::Vector2d& z, const Eigen::Matrix2d& r);

Eigen::Matrix2d r_gps(double sigma_gps);
/// (sigma_process + d_hat / (sqrt(2) M))^2 I2: the filter's own guess, not the generator's sigma.
Eigen::Matrix2d r_lidar(double d_hat, double sigma_process, double workspace);

enum class DelayHandling { kNaive, kIree };

struct FilterCounters {
  std::uint64_t applied = 0;         // inter-robot measurements fused
  std::uint64_t dropped_stale = 0;   // older than the window
  std::uint64_t dropped_underrun = 0;
  std::uint64_t replays = 0;         // slots re-executed by I-ReE
};

/// One robot's localization filter. Call `initialize` with the first GPS fix,
/// then `step` once per later slot.
class LocalizationFilter {
 public:
  LocalizationFilter(const EkfParams& params, DelayHandling mode, int window);

  /// Mean = (gps, 0), P = diag(sigma_gps^2, sigma_gps^2, sigma_theta_init^2).
  void initialize(Slot slot, const Eigen::Vector2d& gps);

  /// Advances to `slot` (previous slot + 1): predict with `u_bar_prev`, the
  /// control applied over the previous slot, fuse the GPS fix, then fuse the
  /// arrivals. Naive applies each arrival of age <= window now; I-ReE files it
  /// under its generation slot and replays from the earliest affected slot.
  void step(Slot slot, const ControlInput& u_bar_prev, const std::optional<GpsMeasurement>& gps,
            std::span<const InterRobotMeasurement> arrivals);

  /// Files arrivals that belong to the initialization slot itself (delay 0)
  /// or, for I-ReE, to any buffered slot, without advancing time.
  void ingest_at_current(std::span<const InterRobotMeasurement> arrivals);

  const EkfState& state() const noexcept { return state_; }
  /// Mean for every slot since initialization. I-ReE rewrites entries still in
  /// its buffer when a delayed measurement lands, so each holds the latest
  /// (smoothed-by-replay) value; naive entries are final when written.
  const std::vector<Eigen::Vector3d>& track() const noexcept { return track_; }
  Slot track_start() const noexcept { return track_start_; }
  Slot slot() const noexcept { return slot_; }
  bool initialized() const noexcept { return initialized_; }
  DelayHandling mode() const noexcept { return mode_; }
  const FilterCounters& counters() const noexcept { return counters_; }

 private:
  struct Entry {
    Slot slot = 0;
    EkfState pre;  // posterior of the previous slot (or the initial state)
    ControlInput u_bar;
    std::optional<GpsMeasurement> gps;
    std::vector<InterRobotMeasurement> meas;
    bool initial = false;
  };

  void absorb(std::span<const InterRobotMeasurement> arrivals);
  EkfState run_entry(const Entry& e) const;
  void replay_from(std::size_t index);
  void record(Slot slot, const Eigen::Vector3d& mean);

  EkfParams params_;
  Eigen::Matrix3d q_;
  DelayHandling mode_;
  int window_;
  bool initialized_ = false;
  Slot slot_ = -1;
  EkfState state_;
  std::deque<Entry> buffer_;  // I-ReE only: slots slot_-window .. slot_
  std::vector<Eigen::Vector3d> track_;
  Slot track_start_ = 0;
  FilterCounters counters_;
};

/// Deterministic order for fusing several measurements in one slot.
bool measurement_order(const InterRobotMeasurement& a, const InterRobotMeasurement& b) noexcept;

}  // namespace mrsim
