#include "mrsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include <Eigen/Cholesky>

namespace mrsim {

Eigen::Matrix3d EkfParams::process_noise() const {
  return Eigen::Vector3d(sigma_process * sigma_process, sigma_process * sigma_process, sigma_theta * sigma_theta)
      .asDiagonal();
}

Eigen::Matrix3d motion_jacobian(const Eigen::Vector3d& mean, const ControlInput& u, double dt) {
  Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
  f(0, 2) = -dt * u.v * std::sin(mean.z());
  f(1, 2) = dt * u.v * std::cos(mean.z());
  return f;
}

EkfState predict(const EkfState& s, const ControlInput& u_bar, double dt, double wheelbase, const Eigen::Matrix3d& q) {
  if (!s.mean.allFinite() || !s.cov.allFinite() || !std::isfinite(u_bar.v) || !std::isfinite(u_bar.delta) ||
      !std::isfinite(dt)) {
    throw std::invalid_argument("predict: non-finite input");
  }
  const VehicleState next = ackermann_step(VehicleState{s.mean.x(), s.mean.y(), s.mean.z()}, u_bar, dt, wheelbase);
  const Eigen::Matrix3d f = motion_jacobian(s.mean, u_bar, dt);
  EkfState out;
  out.mean = Eigen::Vector3d(next.x, next.y, next.theta);
  out.cov = f * s.cov * f.transpose() + q;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

EkfState update(const EkfState& s, const Eigen::Vector2d& z, const Eigen::Matrix2d& r) {
  const Eigen::Matrix2d innov_cov = s.cov.topLeftCorner<2, 2>() + r;
  const Eigen::LLT<Eigen::Matrix2d> llt(innov_cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("update: innovation covariance not positive definite");
  // K = P H^T S^-1, with P H^T the first two columns of P.
  const Eigen::Matrix<double, 3, 2> pht = s.cov.leftCols<2>();
  const Eigen::Matrix<double, 3, 2> k = llt.solve(pht.transpose()).transpose();
  EkfState out;
  out.mean = s.mean + k * (z - s.mean.head<2>());
  out.mean.z() = normalize_angle(out.mean.z());
  Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity();
  ikh.leftCols<2>() -= k;
  out.cov = ikh * s.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

Eigen::Matrix2d r_gps(double sigma_gps) { return sigma_gps * sigma_gps * Eigen::Matrix2d::Identity(); }

Eigen::Matrix2d r_lidar(double d_hat, double sigma_process, double workspace) {
  const double s = sigma_process + d_hat / (std::numbers::sqrt2 * workspace);
  return s * s * Eigen::Matrix2d::Identity();
}

bool measurement_order(const InterRobotMeasurement& a, const InterRobotMeasurement& b) noexcept {
  return std::tie(a.sender, a.target, a.slot) < std::tie(b.sender, b.target, b.slot);
}

LocalizationFilter::LocalizationFilter(const EkfParams& params, DelayHandling mode, int window)
    : params_(params), q_(params.process_noise()), mode_(mode), window_(window) {
  if (window < 0) throw std::invalid_argument("estimation window must be non-negative");
}

void LocalizationFilter::initialize(Slot slot, const Eigen::Vector2d& gps) {
  state_.mean = Eigen::Vector3d(gps.x(), gps.y(), 0.0);
  const double g = params_.sigma_gps * params_.sigma_gps;
  const double t = params_.sigma_theta_init * params_.sigma_theta_init;
  state_.cov = Eigen::Vector3d(g, g, t).asDiagonal();
  slot_ = slot;
  initialized_ = true;
  buffer_.clear();
  track_.assign(1, state_.mean);
  track_start_ = slot;
  if (mode_ == DelayHandling::kIree) {
    Entry e;
    e.slot = slot;
    e.pre = state_;
    e.initial = true;
    buffer_.push_back(std::move(e));
  }
}

EkfState LocalizationFilter::run_entry(const Entry& e) const {
  EkfState s = e.initial ? e.pre : predict(e.pre, e.u_bar, params_.dt, params_.wheelbase, q_);
  if (e.gps) s = update(s, e.gps->z, r_gps(params_.sigma_gps));
  for (const InterRobotMeasurement& m : e.meas) {
    s = update(s, m.z, r_lidar(m.d_hat, params_.sigma_process, params_.workspace));
  }
  return s;
}

void LocalizationFilter::record(Slot slot, const Eigen::Vector3d& mean) {
  const auto idx = static_cast<std::size_t>(slot - track_start_);
  if (idx >= track_.size()) track_.resize(idx + 1);
  track_[idx] = mean;
}

void LocalizationFilter::replay_from(std::size_t index) {
  for (std::size_t i = index; i < buffer_.size(); ++i) {
    if (i > index) buffer_[i].pre = state_;
    state_ = run_entry(buffer_[i]);
    record(buffer_[i].slot, state_.mean);
    ++counters_.replays;
  }
  // The newest slot is always re-executed; only older slots count as replays.
  --counters_.replays;
}

void LocalizationFilter::absorb(std::span<const InterRobotMeasurement> arrivals) {
  std::vector<InterRobotMeasurement> accepted;
  for (const InterRobotMeasurement& m : arrivals) {
    const Slot age = slot_ - m.slot;
    if (age < 0) throw std::invalid_argument("measurement from the future");
    if (age > window_) {
      ++counters_.dropped_stale;
      continue;
    }
    accepted.push_back(m);
  }
  std::sort(accepted.begin(), accepted.end(), measurement_order);

  if (mode_ == DelayHandling::kNaive) {
    for (const InterRobotMeasurement& m : accepted) {
      state_ = update(state_, m.z, r_lidar(m.d_hat, params_.sigma_process, params_.workspace));
      ++counters_.applied;
    }
    return;
  }

  std::size_t earliest = buffer_.size();
  for (const InterRobotMeasurement& m : accepted) {
    const Slot front = buffer_.front().slot;
    if (m.slot < front) {
      ++counters_.dropped_underrun;
      continue;
    }
    const auto idx = static_cast<std::size_t>(m.slot - front);
    auto& list = buffer_[idx].meas;
    list.insert(std::upper_bound(list.begin(), list.end(), m, measurement_order), m);
    earliest = std::min(earliest, idx);
    ++counters_.applied;
  }
  if (earliest < buffer_.size()) replay_from(earliest);
}

void LocalizationFilter::step(Slot slot, const ControlInput& u_bar_prev, const std::optional<GpsMeasurement>& gps,
                              std::span<const InterRobotMeasurement> arrivals) {
  if (!initialized_) throw std::logic_error("filter stepped before initialization");
  if (slot != slot_ + 1) throw std::invalid_argument("filter slots must advance by one");

  if (mode_ == DelayHandling::kNaive) {
    state_ = predict(state_, u_bar_prev, params_.dt, params_.wheelbase, q_);
    slot_ = slot;
    if (gps) state_ = update(state_, gps->z, r_gps(params_.sigma_gps));
    absorb(arrivals);
    record(slot, state_.mean);
    return;
  }

  Entry e;
  e.slot = slot;
  e.pre = state_;
  e.u_bar = u_bar_prev;
  e.gps = gps;
  buffer_.push_back(std::move(e));
  while (buffer_.size() > static_cast<std::size_t>(window_) + 1) buffer_.pop_front();
  slot_ = slot;
  state_ = run_entry(buffer_.back());
  record(slot, state_.mean);
  absorb(arrivals);
}

void LocalizationFilter::ingest_at_current(std::span<const InterRobotMeasurement> arrivals) {
  if (!initialized_) throw std::logic_error("filter used before initialization");
  absorb(arrivals);
  if (mode_ == DelayHandling::kNaive) record(slot_, state_.mean);
}

}  // namespace mrsim
