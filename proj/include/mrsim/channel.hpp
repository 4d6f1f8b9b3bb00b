#pragma once

// Slot-indexed binary erasure channel with a fixed one-way delay and a
// lossless feedback path with the same delay.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "mrsim/rlnc.hpp"
#include "mrsim/rng.hpp"

namespace mrsim {

class ErasureProfile {
 public:
  enum class Mode { kConstant, kPiecewise };
  enum class Spacing { kLinearSuccess, kLinearErasure };

  static ErasureProfile constant(double epsilon, Slot horizon);
  /// `epsilons.size()` intervals of `interval_len` slots each.
  static ErasureProfile piecewise(std::vector<double> epsilons, Slot interval_len);
  /// J intervals whose success probability (or erasure probability, per
  /// `spacing`) moves linearly from `first` to `last`, expressed as success
  /// probabilities 1 - epsilon.
  static ErasureProfile linear(int intervals, Slot interval_len, double first_success,
                               double last_success, Spacing spacing = Spacing::kLinearSuccess);

  /// Throws std::out_of_range outside [0, horizon).
  double epsilon_at(Slot slot) const;

  Mode mode() const noexcept { return mode_; }
  Slot horizon() const noexcept { return horizon_; }
  Slot interval_len() const noexcept { return interval_len_; }
  const std::vector<double>& epsilons() const noexcept { return epsilons_; }

 private:
  Mode mode_ = Mode::kConstant;
  std::vector<double> epsilons_;
  Slot interval_len_ = 1;
  Slot horizon_ = 0;
};

/// One transmission as seen at the channel output. An erased frame keeps its
/// slot metadata (the erasure symbol is observable) but carries no payload.
struct Frame {
  Bytes payload;
  Slot send_slot = 0;
  Slot arrive_slot = 0;
  std::uint32_t index = 0;  // emission order within send_slot
  bool erased = false;
};

struct FeedbackFrame {
  Bytes content;
  Slot send_slot = 0;
  Slot arrive_slot = 0;
};

class SlottedChannel {
 public:
  /// Replaces the Bernoulli draw; returns true when (slot, index) is erased.
  using ErasureScript = std::function<bool(Slot, std::uint32_t)>;

  /// Throws std::invalid_argument for an odd or negative RTT.
  SlottedChannel(Slot rtt, ErasureProfile profile, RngStream rng);

  void set_script(ErasureScript script) { script_ = std::move(script); }

  Slot rtt() const noexcept { return rtt_; }
  Slot one_way() const noexcept { return rtt_ / 2; }
  const ErasureProfile& profile() const noexcept { return profile_; }

  void send(Bytes payload, Slot slot);
  /// Intact payloads arriving at `slot`, in emission order.
  std::vector<Bytes> deliver(Slot slot);
  /// Everything arriving at `slot` including erasure symbols.
  std::vector<Frame> receive(Slot slot);

  void send_feedback(Bytes content, Slot slot);
  std::vector<Bytes> deliver_feedback(Slot slot);

  std::uint64_t frames_sent() const noexcept { return frames_sent_; }
  std::uint64_t frames_erased() const noexcept { return frames_erased_; }

 private:
  bool erased(Slot slot, std::uint32_t index) const;

  Slot rtt_;
  ErasureProfile profile_;
  RngStream rng_;
  ErasureScript script_;

  std::map<Slot, std::vector<Frame>> forward_;
  std::map<Slot, std::vector<FeedbackFrame>> backward_;
  Slot last_send_slot_ = -1;
  std::uint32_t sent_this_slot_ = 0;
  Slot last_forward_poll_ = -1;
  Slot last_backward_poll_ = -1;
  std::uint64_t frames_sent_ = 0;
  std::uint64_t frames_erased_ = 0;
};

}  // namespace mrsim
