#include "mrsim/channel.hpp"

#include <stdexcept>
#include <string>

namespace mrsim {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("erasure probability outside [0, 1]: " + std::to_string(p));
}

}  // namespace

ErasureProfile ErasureProfile::constant(double epsilon, Slot horizon) {
  check_probability(epsilon);
  if (horizon <= 0) throw std::invalid_argument("profile horizon must be positive");
  ErasureProfile p;
  p.mode_ = Mode::kConstant;
  p.epsilons_ = {epsilon};
  p.interval_len_ = horizon;
  p.horizon_ = horizon;
  return p;
}

ErasureProfile ErasureProfile::piecewise(std::vector<double> epsilons, Slot interval_len) {
  if (epsilons.empty()) throw std::invalid_argument("piecewise profile needs at least one interval");
  if (interval_len <= 0) throw std::invalid_argument("interval length must be positive");
  for (double e : epsilons) check_probability(e);
  ErasureProfile p;
  p.mode_ = Mode::kPiecewise;
  p.interval_len_ = interval_len;
  p.horizon_ = interval_len * static_cast<Slot>(epsilons.size());
  p.epsilons_ = std::move(epsilons);
  return p;
}

ErasureProfile ErasureProfile::linear(int intervals, Slot interval_len, double first_success,
                                      double last_success, Spacing spacing) {
  if (intervals <= 0) throw std::invalid_argument("interval count must be positive");
  check_probability(first_success);
  check_probability(last_success);
  std::vector<double> eps(static_cast<std::size_t>(intervals));
  for (int j = 0; j < intervals; ++j) {
    const double frac = intervals == 1 ? 0.0 : static_cast<double>(j) / (intervals - 1);
    if (spacing == Spacing::kLinearSuccess) {
      eps[static_cast<std::size_t>(j)] = 1.0 - (first_success + frac * (last_success - first_success));
    } else {
      const double e0 = 1.0 - first_success;
      const double e1 = 1.0 - last_success;
      eps[static_cast<std::size_t>(j)] = e0 + frac * (e1 - e0);
    }
  }
  return piecewise(std::move(eps), interval_len);
}

double ErasureProfile::epsilon_at(Slot slot) const {
  if (slot < 0 || slot >= horizon_) {
    throw std::out_of_range("slot " + std::to_string(slot) + " outside profile horizon " + std::to_string(horizon_));
  }
  if (mode_ == Mode::kConstant) return epsilons_.front();
  return epsilons_[static_cast<std::size_t>(slot / interval_len_)];
}

SlottedChannel::SlottedChannel(Slot rtt, ErasureProfile profile, RngStream rng)
    : rtt_(rtt), profile_(std::move(profile)), rng_(rng) {
  if (rtt < 0 || rtt % 2 != 0) {
    throw std::invalid_argument("RTT must be a non-negative even number of slots, got " + std::to_string(rtt));
  }
}

bool SlottedChannel::erased(Slot slot, std::uint32_t index) const {
  if (script_) return script_(slot, index);
  const double eps = profile_.epsilon_at(slot);
  if (eps <= 0.0) return false;
  if (eps >= 1.0) return true;
  // Keyed by (slot, index) so realizations line up across protocols that
  // emit different numbers of frames.
  const std::uint64_t key = (static_cast<std::uint64_t>(slot) << 20) | index;
  return rng_.uniform_at(key) < eps;
}

void SlottedChannel::send(Bytes payload, Slot slot) {
  if (slot < last_send_slot_) throw std::invalid_argument("send: slots must be non-decreasing");
  if (slot != last_send_slot_) {
    last_send_slot_ = slot;
    sent_this_slot_ = 0;
  }
  const std::uint32_t index = sent_this_slot_++;
  const bool lost = erased(slot, index);
  ++frames_sent_;
  if (lost) {
    ++frames_erased_;
    payload.clear();
  }
  const Slot arrive = slot + one_way();
  forward_[arrive].push_back(Frame{std::move(payload), slot, arrive, index, lost});
}

std::vector<Frame> SlottedChannel::receive(Slot slot) {
  if (slot <= last_forward_poll_) throw std::invalid_argument("receive: slots must be strictly increasing");
  last_forward_poll_ = slot;
  std::vector<Frame> out;
  auto it = forward_.begin();
  while (it != forward_.end() && it->first <= slot) {
    if (it->first == slot) out = std::move(it->second);
    it = forward_.erase(it);
  }
  return out;
}

std::vector<Bytes> SlottedChannel::deliver(Slot slot) {
  std::vector<Bytes> out;
  for (Frame& f : receive(slot)) {
    if (!f.erased) out.push_back(std::move(f.payload));
  }
  return out;
}

void SlottedChannel::send_feedback(Bytes content, Slot slot) {
  const Slot arrive = slot + one_way();
  backward_[arrive].push_back(FeedbackFrame{std::move(content), slot, arrive});
}

std::vector<Bytes> SlottedChannel::deliver_feedback(Slot slot) {
  if (slot <= last_backward_poll_) throw std::invalid_argument("deliver_feedback: slots must be strictly increasing");
  last_backward_poll_ = slot;
  std::vector<Bytes> out;
  auto it = backward_.begin();
  while (it != backward_.end() && it->first <= slot) {
    if (it->first == slot) {
      for (FeedbackFrame& f : it->second) out.push_back(std::move(f.content));
    }
    it = backward_.erase(it);
  }
  return out;
}

}  // namespace mrsim
