#include "mrsim/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mrsim/wire.hpp"

namespace mrsim {

GpsMeasurement gps_measure(int robot, Slot slot, const VehicleState& truth, double sigma_gps, RngStream& rng) {
  GpsMeasurement m;
  m.robot = robot;
  m.slot = slot;
  m.z.x() = truth.x + rng.normal(0.0, sigma_gps);
  m.z.y() = truth.y + rng.normal(0.0, sigma_gps);
  return m;
}

double sigma_l(double d, double sigma_internal, double workspace) {
  if (d < 0.0) throw std::invalid_argument("sigma_l: negative distance");
  if (!(workspace > 0.0)) throw std::invalid_argument("sigma_l: workspace must be positive");
  return sigma_internal + d / (std::numbers::sqrt2 * workspace);
}

InterRobotMeasurement lidar_measure(std::uint16_t sender, std::uint16_t target, Slot slot,
                                    const VehicleState& truth_sender, const VehicleState& truth_target,
                                    double sigma_internal, double workspace, RngStream& rng) {
  if (sender == target) throw std::invalid_argument("lidar_measure: a robot cannot measure itself");
  const double d = std::hypot(truth_target.x - truth_sender.x, truth_target.y - truth_sender.y);
  const double s = sigma_l(d, sigma_internal, workspace);
  InterRobotMeasurement m;
  m.sender = sender;
  m.target = target;
  m.slot = slot;
  m.z.x() = truth_target.x + rng.normal(0.0, s);
  m.z.y() = truth_target.y + rng.normal(0.0, s);
  m.d_hat = std::max(0.0, d + rng.normal(0.0, d / (std::numbers::sqrt2 * workspace)));
  return m;
}

Bytes serialize(const InterRobotMeasurement& m, std::size_t padded_len) {
  if (padded_len < kMeasurementWireSize) throw std::invalid_argument("measurement record needs at least 32 bytes");
  Bytes out;
  out.reserve(padded_len);
  wire::Writer(out)
      .put(m.sender)
      .put(m.target)
      .put(static_cast<std::uint32_t>(m.slot))
      .put(m.z.x())
      .put(m.z.y())
      .put(m.d_hat);
  out.resize(padded_len, 0);
  return out;
}

InterRobotMeasurement deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMeasurementWireSize) throw std::invalid_argument("measurement record shorter than 32 bytes");
  wire::Reader r(bytes);
  InterRobotMeasurement m;
  m.sender = r.get<std::uint16_t>();
  m.target = r.get<std::uint16_t>();
  m.slot = static_cast<Slot>(r.get<std::uint32_t>());
  m.z.x() = r.get<double>();
  m.z.y() = r.get<double>();
  m.d_hat = r.get<double>();
  return m;
}

}  // namespace mrsim
