#pragma once

// GPS self-fixes and inter-robot global-position measurements, plus the
// fixed 32-byte wire record that carries the latter across the transport.

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "mrsim/kinematics.hpp"
#include "mrsim/rlnc.hpp"
#include "mrsim/rng.hpp"

namespace mrsim {

struct GpsMeasurement {
  int robot = 0;
  Slot slot = 0;
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
};

struct InterRobotMeasurement {
  std::uint16_t sender = 0;  // measuring robot
  std::uint16_t target = 0;  // measured robot, which receives the record
  Slot slot = 0;             // generation slot
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  double d_hat = 0.0;

  friend bool operator==(const InterRobotMeasurement&, const InterRobotMeasurement&) = default;
};

inline constexpr std::size_t kMeasurementWireSize = 32;

/// True position plus isotropic Gaussian noise of std `sigma_gps` per axis.
GpsMeasurement gps_measure(int robot, Slot slot, const VehicleState& truth, double sigma_gps, RngStream& rng);

/// sigma_internal + d / (sqrt(2) * workspace). Throws for d < 0 or workspace <= 0.
double sigma_l(double d, double sigma_internal, double workspace);

/// Noisy global position of `target` as seen by `sender`, with a noisy range
/// (std d / (sqrt(2) M)) clamped at zero.
InterRobotMeasurement lidar_measure(std::uint16_t sender, std::uint16_t target, Slot slot,
                                    const VehicleState& truth_sender, const VehicleState& truth_target,
                                    double sigma_internal, double workspace, RngStream& rng);

/// Little-endian record: u16 sender, u16 target, u32 slot, f64 z.x, f64 z.y,
/// f64 d_hat, zero-padded to `padded_len` (>= 32).
Bytes serialize(const InterRobotMeasurement& m, std::size_t padded_len = kMeasurementWireSize);
/// Throws std::invalid_argument on a record shorter than 32 bytes.
InterRobotMeasurement deserialize(std::span<const std::uint8_t> bytes);

}  // namespace mrsim
