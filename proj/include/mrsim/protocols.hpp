#pragma once

// Concrete protocol endpoints. Most callers go through transport::Session.

#include <deque>
#include <map>
#include <set>

#include "mrsim/transport.hpp"

namespace mrsim::transport {

// ---------------------------------------------------------------- UDP-like

/// Sends every message exactly once; spare frame opportunities stay idle.
class UdpSender final : public Sender {
 public:
  explicit UdpSender(const ProtocolParams& params) : params_(params) {}
  void submit(AppMessage msg) override { queue_.push_back(std::move(msg)); }
  void on_feedback(std::span<const std::uint8_t>, Slot) override {}
  std::vector<Bytes> emit(Slot slot) override;

 private:
  ProtocolParams params_;
  std::deque<AppMessage> queue_;
};

/// Hands every intact arrival to the application immediately.
class UdpReceiver final : public Receiver {
 public:
  std::vector<Delivered> on_arrivals(std::vector<Frame> frames, Slot slot) override;
  std::optional<Bytes> feedback(Slot) override { return std::nullopt; }
};

// ------------------------------------------------------ Selective-repeat ARQ

/// Feedback: cumulative ACK (next expected seq), selective ACK list for
/// buffered seqs above it, and the ACK/NACK outcome of every transmission that
/// reached the receiver this slot. A NACKed transmission is repeated (repair
/// before new data) unless the packet has been sent again since.
class SrArqSender final : public Sender {
 public:
  explicit SrArqSender(const ProtocolParams& params);
  void submit(AppMessage msg) override { pending_.push_back(std::move(msg)); }
  void on_feedback(std::span<const std::uint8_t> content, Slot slot) override;
  std::vector<Bytes> emit(Slot slot) override;

  /// Lowest unacknowledged sequence number (or next new one).
  Seq base() const noexcept;
  /// Highest sent-but-unacked seq minus base, plus one; 0 when idle.
  std::size_t unacked_span() const noexcept;
  std::size_t window() const noexcept { return window_; }
  std::uint64_t retransmissions() const noexcept { return retransmissions_; }

 private:
  struct Outstanding {
    Bytes symbol;
    Slot last_tx = 0;
    bool queued = false;
  };

  ProtocolParams params_;
  std::size_t window_;
  std::deque<AppMessage> pending_;
  std::map<Seq, Outstanding> outstanding_;
  std::deque<Seq> retx_;
  std::map<Slot, std::vector<Seq>> tx_log_;  // send_slot -> seq by frame index
  std::uint64_t retransmissions_ = 0;
};

class SrArqReceiver final : public Receiver {
 public:
  std::vector<Delivered> on_arrivals(std::vector<Frame> frames, Slot slot) override;
  std::optional<Bytes> feedback(Slot slot) override;

  Seq next_expected() const noexcept { return next_expected_; }
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  Seq next_expected_ = 0;
  std::map<Seq, Delivered> buffer_;
  std::vector<TxOutcome> outcomes_;
};

// ------------------------------------------------------- Adaptive causal RLNC

/// Sliding-window coded transport.
///
/// New source packets go out systematically; FEC frames are random GF(256)
/// combinations of the whole window [w_min, w_end). Per frame opportunity the
/// sender picks, in order: reactive FEC while the projected degree-of-freedom
/// deficit is positive, a-priori FEC while the credit is at least one, a new
/// packet if the window has room, otherwise spare FEC. When beta > 1 and data
/// is waiting, repair never takes the last opportunity of a slot. Credit grows by
/// eps_hat / (1 - eps_hat) per new packet; eps_hat is an EWMA of the
/// per-transmission outcomes reported in feedback. w_min follows the
/// receiver's in-order delivery point.
class AcRlncSender final : public Sender {
 public:
  AcRlncSender(const ProtocolParams& params, RngStream rng);
  void submit(AppMessage msg) override { pending_.push_back(std::move(msg)); }
  void on_feedback(std::span<const std::uint8_t> content, Slot slot) override;
  std::vector<Bytes> emit(Slot slot) override;

  Seq window_min() const noexcept { return w_min_; }
  Seq window_end() const noexcept { return w_end_; }
  std::size_t window_span() const noexcept { return static_cast<std::size_t>(w_end_ - w_min_); }
  std::size_t max_window() const noexcept { return max_window_; }
  double eps_hat() const noexcept { return eps_hat_; }
  double fec_credit() const noexcept { return credit_; }
  /// Expected missing degrees of freedom at the receiver once everything in
  /// flight has landed, from the latest feedback.
  double projected_deficit(Slot slot) const;
  std::uint64_t new_frames() const noexcept { return new_frames_; }
  std::uint64_t fec_frames() const noexcept { return fec_frames_; }
  std::uint64_t apriori_fec_frames() const noexcept { return apriori_frames_; }
  std::uint64_t reactive_fec_frames() const noexcept { return reactive_frames_; }

 private:
  Bytes make_fec(Slot slot);
  Bytes make_systematic(Seq seq, const Bytes& symbol) const;

  ProtocolParams params_;
  std::size_t max_window_;
  RngStream rng_;
  std::deque<AppMessage> pending_;
  std::deque<Bytes> window_;  // symbols for [w_min_, w_end_)
  Seq w_min_ = 0;
  Seq w_end_ = 0;
  double eps_hat_;
  double credit_ = 0.0;
  Seq fb_delivered_ = 0;
  std::size_t fb_rank_ = 0;
  std::map<Slot, std::size_t> sent_per_slot_;
  std::uint64_t new_frames_ = 0;
  std::uint64_t fec_frames_ = 0;
  std::uint64_t apriori_frames_ = 0;
  std::uint64_t reactive_frames_ = 0;
};

class AcRlncReceiver final : public Receiver {
 public:
  explicit AcRlncReceiver(const ProtocolParams& params) : decoder_(params.symbol_len()) {}
  std::vector<Delivered> on_arrivals(std::vector<Frame> frames, Slot slot) override;
  std::optional<Bytes> feedback(Slot slot) override;

  const rlnc::Decoder& decoder() const noexcept { return decoder_; }
  std::uint64_t redundant() const noexcept { return redundant_; }

 private:
  rlnc::Decoder decoder_;
  std::vector<TxOutcome> outcomes_;
  std::uint64_t redundant_ = 0;
};

}  // namespace mrsim::transport
