#pragma once

// Ackermann (kinematic bicycle) motion, the randomized piecewise-constant
// driving policy, and oriented-bounding-box overlap.

#include <cstddef>
#include <numbers>
#include <span>

#include "mrsim/rlnc.hpp"
#include "mrsim/rng.hpp"

namespace mrsim {

constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }

/// Wraps to (-pi, pi].
double normalize_angle(double theta) noexcept;

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct ControlInput {
  double v = 0.0;
  double delta = 0.0;
};

/// x' = x + dt v cos(theta), y' = y + dt v sin(theta),
/// theta' = theta + dt v tan(delta) / L, heading then normalized.
/// Throws std::invalid_argument for |delta| >= pi/2 or wheelbase <= 0.
VehicleState ackermann_step(const VehicleState& s, const ControlInput& u, double dt, double wheelbase);

struct PolicyParams {
  double dt = 0.1;
  int resample_period = 8;  // slots between acceleration/steering draws
  int reset_period = 3;     // slots between steering resets to zero
  double v_max = 10.0;
  double accel_min = -1.0;
  double accel_max = 1.0;
  double steer_max = deg2rad(20.0);
  double avoid_distance = 8.0;
  double workspace = 200.0;
  double wall_margin = 5.0;
};

/// Per-robot driving policy: acceleration integrated into speed with
/// saturation, steering resampled and periodically zeroed, plus reactive
/// steering away from closing neighbours and back from the walls.
class ControlPolicy {
 public:
  ControlPolicy(const PolicyParams& params, double initial_speed, RngStream rng);

  /// Control for `slot`. `neighbor_dist_prev[k]` is the distance to
  /// `neighbors[k]` at the previous slot (negative when unknown).
  ControlInput step(int slot, const VehicleState& own, std::span<const VehicleState> neighbors,
                    std::span<const double> neighbor_dist_prev);

  double speed() const noexcept { return v_; }
  double accel() const noexcept { return accel_; }
  double steering() const noexcept { return delta_; }
  /// True if the last step overrode steering for proximity or a wall.
  bool avoiding() const noexcept { return avoiding_; }

 private:
  PolicyParams p_;
  RngStream rng_;
  double v_;
  double accel_ = 0.0;
  double delta_ = 0.0;
  bool avoiding_ = false;
};

struct OrientedBox {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 1.0;
  double width = 1.0;
};

/// Separating-axis test over the four edge normals. Touching counts as overlap.
bool obb_overlap(const OrientedBox& a, const OrientedBox& b) noexcept;

}  // namespace mrsim
