#include "mrsim/rlnc.hpp"

#include <algorithm>
#include <stdexcept>

namespace mrsim::rlnc {

bool CodedPacket::systematic() const noexcept {
  std::size_t nonzero = 0;
  for (gf::Element c : coefficients) {
    if (c.value == 0) continue;
    if (c.value != 1) return false;
    ++nonzero;
  }
  return nonzero == 1;
}

Bytes encode(std::span<const Bytes> window, std::span<const gf::Element> coefficients) {
  if (window.empty() || window.size() != coefficients.size()) {
    throw std::invalid_argument("encode: coefficient count must equal window length");
  }
  const std::size_t len = window.front().size();
  Bytes out(len, 0);
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i].size() != len) throw std::invalid_argument("encode: payload lengths differ");
    gf::region_muladd(out, window[i], coefficients[i]);
  }
  return out;
}

Decoder::Decoder(std::size_t payload_len) : payload_len_(payload_len) {}

bool Decoder::row_determined(const Row& row) const noexcept {
  for (std::size_t c = 0; c < row.coeffs.size(); ++c) {
    if (c != row.pivot && row.coeffs[c] != 0) return false;
  }
  return true;
}

Decoder::AbsorbResult Decoder::absorb(const CodedPacket& pkt) {
  if (pkt.coefficients.empty()) throw std::invalid_argument("absorb: empty coefficient vector");
  if (pkt.payload.size() != payload_len_) throw std::invalid_argument("absorb: payload length mismatch");

  const Seq pkt_end = pkt.window_start + pkt.span();
  for (std::size_t i = 0; i < pkt.span(); ++i) {
    const Seq seq = pkt.window_start + i;
    if (seq < base_ && seq < history_start_ && pkt.coefficients[i].value != 0) {
      throw std::invalid_argument("absorb: packet references a forgotten source packet");
    }
  }

  AbsorbResult result;
  ++absorbed_;
  if (pkt_end <= base_) return result;

  const Seq new_end = std::max(end_, pkt_end);
  const std::size_t width = static_cast<std::size_t>(new_end - base_);

  Row row{0, Bytes(width, 0), pkt.payload};
  for (std::size_t i = 0; i < pkt.span(); ++i) {
    const Seq seq = pkt.window_start + i;
    const gf::Element c = pkt.coefficients[i];
    if (c.value == 0) continue;
    if (seq < base_) {
      gf::region_muladd(row.payload, history_[static_cast<std::size_t>(seq - history_start_)], c);
    } else {
      row.coeffs[static_cast<std::size_t>(seq - base_)] = c.value;
    }
  }

  // Forward-reduce against the basis; pivots are normalized to 1.
  for (const Row& r : rows_) {
    const std::uint8_t f = r.pivot < row.coeffs.size() ? row.coeffs[r.pivot] : 0;
    if (f == 0) continue;
    gf::region_muladd(std::span(row.coeffs.data(), r.coeffs.size()), r.coeffs, gf::Element(f));
    gf::region_muladd(row.payload, r.payload, gf::Element(f));
  }

  const auto nz = std::find_if(row.coeffs.begin(), row.coeffs.end(), [](std::uint8_t v) { return v != 0; });
  if (nz == row.coeffs.end()) return result;

  // Innovative: commit the wider window now that the state will change.
  if (new_end > end_) {
    for (Row& r : rows_) r.coeffs.resize(width, 0);
    end_ = new_end;
  }

  row.pivot = static_cast<std::size_t>(nz - row.coeffs.begin());
  const gf::Element scale = gf::inv(gf::Element(*nz));
  gf::region_mul(row.coeffs, scale);
  gf::region_mul(row.payload, scale);

  for (Row& r : rows_) {
    const std::uint8_t f = r.coeffs[row.pivot];
    if (f == 0) continue;
    gf::region_muladd(r.coeffs, row.coeffs, gf::Element(f));
    gf::region_muladd(r.payload, row.payload, gf::Element(f));
  }

  const auto pos = std::lower_bound(rows_.begin(), rows_.end(), row.pivot,
                                    [](const Row& r, std::size_t p) { return r.pivot < p; });
  rows_.insert(pos, std::move(row));
  result.innovative = true;
  release_prefix(result.released);
  return result;
}

void Decoder::release_prefix(std::vector<Released>& out) {
  std::size_t count = 0;
  while (count < rows_.size() && rows_[count].pivot == count && row_determined(rows_[count])) ++count;
  if (count == 0) return;

  for (std::size_t k = 0; k < count; ++k) {
    out.push_back({base_ + k, rows_[k].payload});
    history_.push_back(std::move(rows_[k].payload));
  }
  rows_.erase(rows_.begin(), rows_.begin() + static_cast<std::ptrdiff_t>(count));
  for (Row& r : rows_) {
    r.coeffs.erase(r.coeffs.begin(), r.coeffs.begin() + static_cast<std::ptrdiff_t>(count));
    r.pivot -= count;
  }
  base_ += count;
}

void Decoder::forget_below(Seq seq) {
  seq = std::min(seq, base_);
  while (history_start_ < seq && !history_.empty()) {
    history_.pop_front();
    ++history_start_;
  }
}

}  // namespace mrsim::rlnc
