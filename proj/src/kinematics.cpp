#include "mrsim/kinematics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mrsim {

double normalize_angle(double theta) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta <= -std::numbers::pi) theta += two_pi;
  if (theta > std::numbers::pi) theta -= two_pi;
  return theta;
}

VehicleState ackermann_step(const VehicleState& s, const ControlInput& u, double dt, double wheelbase) {
  if (!(wheelbase > 0.0)) throw std::invalid_argument("wheelbase must be positive");
  if (!(std::abs(u.delta) < std::numbers::pi / 2)) throw std::invalid_argument("steering angle must satisfy |delta| < pi/2");
  VehicleState n;
  n.x = s.x + dt * u.v * std::cos(s.theta);
  n.y = s.y + dt * u.v * std::sin(s.theta);
  n.theta = normalize_angle(s.theta + dt * u.v * std::tan(u.delta) / wheelbase);
  return n;
}

ControlPolicy::ControlPolicy(const PolicyParams& params, double initial_speed, RngStream rng)
    : p_(params), rng_(rng), v_(initial_speed) {}

namespace {

// +1 turns left (counter-clockwise), -1 right, to bring `heading` toward `bearing`.
double turn_sign_toward(double heading, double bearing) noexcept {
  return normalize_angle(bearing - heading) >= 0.0 ? 1.0 : -1.0;
}

}  // namespace

ControlInput ControlPolicy::step(int slot, const VehicleState& own, std::span<const VehicleState> neighbors,
                                 std::span<const double> neighbor_dist_prev) {
  if (slot % p_.resample_period == 0) {
    accel_ = rng_.uniform(p_.accel_min, p_.accel_max);
    delta_ = rng_.uniform(-p_.steer_max, p_.steer_max);
  }
  if (slot % p_.reset_period == 0) delta_ = 0.0;

  avoiding_ = false;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    const double dx = neighbors[k].x - own.x;
    const double dy = neighbors[k].y - own.y;
    const double d = std::hypot(dx, dy);
    const double prev = k < neighbor_dist_prev.size() ? neighbor_dist_prev[k] : -1.0;
    if (d < p_.avoid_distance && prev >= 0.0 && d < prev) {
      // Turn away from the neighbour's bearing.
      delta_ = -turn_sign_toward(own.theta, std::atan2(dy, dx)) * p_.steer_max;
      avoiding_ = true;
      break;
    }
  }

  if (!avoiding_) {
    const double m = p_.wall_margin;
    const double w = p_.workspace;
    if (own.x < m || own.y < m || own.x > w - m || own.y > w - m) {
      const double to_center = std::atan2(w / 2 - own.y, w / 2 - own.x);
      if (std::abs(normalize_angle(to_center - own.theta)) > std::numbers::pi / 4) {
        delta_ = turn_sign_toward(own.theta, to_center) * p_.steer_max;
        avoiding_ = true;
      }
    }
  }

  v_ = std::clamp(v_ + accel_ * p_.dt, 0.0, p_.v_max);
  return ControlInput{v_, delta_};
}

namespace {

struct Corners {
  std::array<double, 4> x;
  std::array<double, 4> y;
};

Corners corners_of(const OrientedBox& b) noexcept {
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  const double hl = b.length / 2;
  const double hw = b.width / 2;
  Corners k{};
  const std::array<double, 4> ls{hl, hl, -hl, -hl};
  const std::array<double, 4> ws{hw, -hw, -hw, hw};
  for (int i = 0; i < 4; ++i) {
    k.x[i] = b.cx + ls[i] * c - ws[i] * s;
    k.y[i] = b.cy + ls[i] * s + ws[i] * c;
  }
  return k;
}

bool separated_on(double ax, double ay, const Corners& a, const Corners& b) noexcept {
  double amin = INFINITY, amax = -INFINITY, bmin = INFINITY, bmax = -INFINITY;
  for (int i = 0; i < 4; ++i) {
    const double pa = a.x[i] * ax + a.y[i] * ay;
    const double pb = b.x[i] * ax + b.y[i] * ay;
    amin = std::min(amin, pa);
    amax = std::max(amax, pa);
    bmin = std::min(bmin, pb);
    bmax = std::max(bmax, pb);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool obb_overlap(const OrientedBox& a, const OrientedBox& b) noexcept {
  const Corners ca = corners_of(a);
  const Corners cb = corners_of(b);
  for (double h : {a.heading, b.heading}) {
    const double c = std::cos(h);
    const double s = std::sin(h);
    if (separated_on(c, s, ca, cb) || separated_on(-s, c, ca, cb)) return false;
  }
  return true;
}

}  // namespace mrsim
