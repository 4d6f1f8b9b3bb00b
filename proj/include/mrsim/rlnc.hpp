#pragma once

// Random linear network coding over GF(256): a byte-wise encoder and an
// incremental Gaussian-elimination decoder that releases packets in order.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "mrsim/gf256.hpp"

namespace mrsim {

using Seq = std::uint64_t;
using Slot = std::int64_t;
using Bytes = std::vector<std::uint8_t>;

namespace rlnc {

/// Linear combination of the source packets window_start .. window_start + span - 1.
struct CodedPacket {
  Seq window_start = 0;
  std::vector<gf::Element> coefficients;
  Bytes payload;
  std::uint16_t sender_id = 0;
  std::uint16_t receiver_id = 0;
  Slot gen_slot = 0;

  std::size_t span() const noexcept { return coefficients.size(); }
  /// Exactly one nonzero coefficient and it equals 1.
  bool systematic() const noexcept;
};

/// Sum of coefficients[i] * window[i], byte-wise. Throws std::invalid_argument
/// on a count mismatch or unequal payload lengths.
Bytes encode(std::span<const Bytes> window, std::span<const gf::Element> coefficients);

class Decoder {
 public:
  struct Released {
    Seq seq;
    Bytes payload;
  };

  struct AbsorbResult {
    bool innovative = false;
    std::vector<Released> released;
  };

  explicit Decoder(std::size_t payload_len);

  /// Eliminates `pkt` into the basis and returns the packets that became
  /// decodable as a contiguous in-order prefix. Throws std::invalid_argument
  /// for a malformed packet (empty or payload-length mismatch, or a reference
  /// to a released packet that was already forgotten); the state is then
  /// unchanged.
  AbsorbResult absorb(const CodedPacket& pkt);

  /// Number of packets released so far; equivalently the next sequence
  /// number owed to the application.
  Seq delivered_upto() const noexcept { return base_; }
  /// One past the highest sequence number any absorbed packet referenced.
  Seq window_end() const noexcept { return end_; }
  /// Degrees of freedom received: released packets plus pending basis rows.
  std::size_t rank() const noexcept { return static_cast<std::size_t>(base_) + rows_.size(); }
  /// Basis rows over the still-undecoded window.
  std::size_t active_rank() const noexcept { return rows_.size(); }
  std::size_t absorbed() const noexcept { return absorbed_; }
  std::size_t payload_len() const noexcept { return payload_len_; }

  /// Drops retained copies of released packets below `seq`. Packets that
  /// still reference them can no longer be absorbed.
  void forget_below(Seq seq);

 private:
  struct Row {
    std::size_t pivot;  // column relative to base_
    Bytes coeffs;
    Bytes payload;
  };

  bool row_determined(const Row& row) const noexcept;
  void release_prefix(std::vector<Released>& out);

  std::size_t payload_len_;
  Seq base_ = 0;
  Seq end_ = 0;
  std::vector<Row> rows_;  // reduced row echelon form, sorted by pivot
  std::deque<Bytes> history_;
  Seq history_start_ = 0;
  std::size_t absorbed_ = 0;
};

}  // namespace rlnc
}  // namespace mrsim
