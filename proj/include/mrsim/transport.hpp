#pragma once

// End-to-end delivery over a SlottedChannel: best-effort (UDP-like),
// selective-repeat ARQ and adaptive causal RLNC behind one session interface.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mrsim/channel.hpp"
#include "mrsim/rlnc.hpp"
#include "mrsim/rng.hpp"

namespace mrsim::transport {

enum class Protocol { kUdp, kSrArq, kAcRlnc };

std::string_view protocol_name(Protocol p) noexcept;
/// Accepts "udp", "sr_arq", "ac_rlnc". Throws std::invalid_argument otherwise.
Protocol parse_protocol(std::string_view name);

/// Rate factor: ceil(1 / max(1 - epsilon - alpha, lambda)).
/// Throws std::invalid_argument for lambda <= 0 or epsilon outside [0, 1].
int compute_beta(double epsilon, double alpha, double lambda);

struct ProtocolParams {
  Slot rtt = 4;
  double a = 2.0;        // SR-ARQ window factor
  double b = 1.5;        // AC-RLNC window factor
  double alpha = 0.11;
  double lambda = 0.15;
  int beta = 1;          // frames per slot
  double eps_hat_init = 0.5;
  double eps_hat_memory = 0.9;  // EWMA weight on history
  std::size_t body_len = 32;

  /// ceil(a * beta * rtt), at least 1.
  std::size_t window_sr() const;
  /// ceil(b * beta * rtt), at least 1.
  std::size_t window_ac() const;
  /// Transport symbol: 4-byte generation slot followed by the body.
  std::size_t symbol_len() const noexcept { return body_len + 4; }
};

struct AppMessage {
  Seq seq = 0;
  Slot gen_slot = 0;
  Bytes body;
};

struct Delivered {
  Seq seq = 0;
  Slot gen_slot = 0;
  Bytes body;
};

struct DeliveryRecord {
  Seq seq = 0;
  Slot gen_slot = 0;
  std::optional<Slot> delivered_slot;

  std::optional<Slot> in_order_delay() const {
    if (!delivered_slot) return std::nullopt;
    return *delivered_slot - gen_slot;
  }
};

/// Outcome of one transmission as observed by the receiver.
struct TxOutcome {
  Slot send_slot = 0;
  std::uint32_t index = 0;
  bool erased = false;
};

class Sender {
 public:
  virtual ~Sender() = default;
  virtual void submit(AppMessage msg) = 0;
  virtual void on_feedback(std::span<const std::uint8_t> content, Slot slot) = 0;
  /// Frames to put on the channel this slot, at most beta of them.
  virtual std::vector<Bytes> emit(Slot slot) = 0;
};

class Receiver {
 public:
  virtual ~Receiver() = default;
  /// Channel output for this slot, erasure symbols included.
  virtual std::vector<Delivered> on_arrivals(std::vector<Frame> frames, Slot slot) = 0;
  /// Feedback generated at the end of `slot`, if the protocol uses any.
  virtual std::optional<Bytes> feedback(Slot slot) = 0;
};

std::unique_ptr<Sender> make_sender(Protocol p, const ProtocolParams& params, RngStream rng);
std::unique_ptr<Receiver> make_receiver(Protocol p, const ProtocolParams& params);

/// Symbol layout shared by every protocol: generation slot then body.
Bytes pack_symbol(Slot gen_slot, std::span<const std::uint8_t> body);
Delivered unpack_symbol(Seq seq, std::span<const std::uint8_t> symbol);

/// Feedback trailer carrying per-transmission ACK/NACK outcomes.
void write_outcomes(Bytes& out, std::span<const TxOutcome> outcomes);
std::vector<TxOutcome> read_outcomes(std::span<const std::uint8_t>& in);

struct Metrics {
  double mean_in_order_delay = 0.0;  // over delivered messages; NaN if none
  Slot max_in_order_delay = 0;
  double throughput = 0.0;           // delivered messages / transmitted frames
  double delivery_ratio = 0.0;
  std::uint64_t delivered = 0;
  std::uint64_t generated = 0;
  std::uint64_t frames = 0;
};

Metrics collect_metrics(std::span<const DeliveryRecord> records, std::uint64_t frames_transmitted);

/// One directed sender -> receiver link: protocol endpoints plus the channel.
class Session {
 public:
  Session(Protocol protocol, const ProtocolParams& params, SlottedChannel channel, RngStream protocol_rng);

  /// Advances one slot: submit `body` (if any) as the next message, process
  /// feedback, transmit, receive, and emit feedback. Returns the messages
  /// released to the application at `slot`.
  std::vector<Delivered> step(Slot slot, std::optional<Bytes> body);

  Protocol protocol() const noexcept { return protocol_; }
  const ProtocolParams& params() const noexcept { return params_; }
  const std::vector<DeliveryRecord>& records() const noexcept { return records_; }
  const SlottedChannel& channel() const noexcept { return channel_; }
  SlottedChannel& channel() noexcept { return channel_; }
  Metrics metrics() const { return collect_metrics(records_, channel_.frames_sent()); }

 private:
  Protocol protocol_;
  ProtocolParams params_;
  SlottedChannel channel_;
  std::unique_ptr<Sender> sender_;
  std::unique_ptr<Receiver> receiver_;
  std::vector<DeliveryRecord> records_;
};

}  // namespace mrsim::transport
