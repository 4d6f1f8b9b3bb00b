#include "mrsim/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrsim/wire.hpp"

namespace mrsim::transport {

namespace {

constexpr std::uint8_t kUdpData = 1;
constexpr std::uint8_t kSrData = 2;
constexpr std::uint8_t kAcFrame = 3;

TxOutcome outcome_of(const Frame& f) { return TxOutcome{f.send_slot, f.index, f.erased}; }

}  // namespace

// ---------------------------------------------------------------------------
// UDP-like
// ---------------------------------------------------------------------------

std::vector<Bytes> UdpSender::emit(Slot) {
  std::vector<Bytes> frames;
  while (!queue_.empty() && frames.size() < static_cast<std::size_t>(params_.beta)) {
    AppMessage& msg = queue_.front();
    Bytes f;
    wire::Writer(f).put(kUdpData).put(static_cast<std::uint64_t>(msg.seq)).bytes(pack_symbol(msg.gen_slot, msg.body));
    frames.push_back(std::move(f));
    queue_.pop_front();
  }
  return frames;
}

std::vector<Delivered> UdpReceiver::on_arrivals(std::vector<Frame> frames, Slot) {
  std::vector<Delivered> out;
  for (const Frame& f : frames) {
    if (f.erased) continue;
    wire::Reader r(f.payload);
    if (r.get<std::uint8_t>() != kUdpData) throw std::invalid_argument("udp: unexpected frame type");
    const auto seq = r.get<std::uint64_t>();
    out.push_back(unpack_symbol(seq, r.rest()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Selective-repeat ARQ
// ---------------------------------------------------------------------------

SrArqSender::SrArqSender(const ProtocolParams& params) : params_(params), window_(params.window_sr()) {}

Seq SrArqSender::base() const noexcept {
  if (!outstanding_.empty()) return outstanding_.begin()->first;
  if (!pending_.empty()) return pending_.front().seq;
  return 0;
}

std::size_t SrArqSender::unacked_span() const noexcept {
  if (outstanding_.empty()) return 0;
  return static_cast<std::size_t>(outstanding_.rbegin()->first - outstanding_.begin()->first + 1);
}

void SrArqSender::on_feedback(std::span<const std::uint8_t> content, Slot slot) {
  wire::Reader r(content);
  const auto next_expected = r.get<std::uint64_t>();
  const auto n_sack = r.get<std::uint32_t>();
  std::vector<Seq> sack(n_sack);
  for (auto& s : sack) s = r.get<std::uint64_t>();
  auto rest = r.rest();
  const auto outcomes = read_outcomes(rest);

  outstanding_.erase(outstanding_.begin(), outstanding_.lower_bound(next_expected));
  for (Seq s : sack) outstanding_.erase(s);

  for (const TxOutcome& o : outcomes) {
    if (!o.erased) continue;
    const auto log = tx_log_.find(o.send_slot);
    if (log == tx_log_.end() || o.index >= log->second.size()) continue;
    const Seq seq = log->second[o.index];
    const auto it = outstanding_.find(seq);
    // Only the latest copy's loss matters; older NACKs are superseded.
    if (it == outstanding_.end() || it->second.queued || it->second.last_tx != o.send_slot) continue;
    it->second.queued = true;
    retx_.push_back(seq);
  }

  // Outcomes for frames sent before slot - rtt have all been reported.
  tx_log_.erase(tx_log_.begin(), tx_log_.lower_bound(slot - params_.rtt));
}

std::vector<Bytes> SrArqSender::emit(Slot slot) {
  const auto beta = static_cast<std::size_t>(params_.beta);
  std::vector<Bytes> frames;
  auto& log = tx_log_[slot];

  auto send = [&](Seq seq, const Bytes& symbol) {
    Bytes f;
    wire::Writer(f).put(kSrData).put(static_cast<std::uint64_t>(seq)).bytes(symbol);
    frames.push_back(std::move(f));
    log.push_back(seq);
  };

  while (frames.size() < beta && !retx_.empty()) {
    const Seq seq = retx_.front();
    retx_.pop_front();
    const auto it = outstanding_.find(seq);
    if (it == outstanding_.end()) continue;
    it->second.queued = false;
    it->second.last_tx = slot;
    ++retransmissions_;
    send(seq, it->second.symbol);
  }

  while (frames.size() < beta && !pending_.empty()) {
    const Seq seq = pending_.front().seq;
    if (seq - base() >= window_) break;
    AppMessage msg = std::move(pending_.front());
    pending_.pop_front();
    auto [it, _] = outstanding_.emplace(seq, Outstanding{pack_symbol(msg.gen_slot, msg.body), slot, false});
    send(seq, it->second.symbol);
  }

  if (log.empty()) tx_log_.erase(slot);
  return frames;
}

std::vector<Delivered> SrArqReceiver::on_arrivals(std::vector<Frame> frames, Slot) {
  for (const Frame& f : frames) {
    outcomes_.push_back(outcome_of(f));
    if (f.erased) continue;
    wire::Reader r(f.payload);
    if (r.get<std::uint8_t>() != kSrData) throw std::invalid_argument("sr_arq: unexpected frame type");
    const auto seq = r.get<std::uint64_t>();
    if (seq < next_expected_ || buffer_.contains(seq)) continue;
    buffer_.emplace(seq, unpack_symbol(seq, r.rest()));
  }

  std::vector<Delivered> out;
  auto it = buffer_.begin();
  while (it != buffer_.end() && it->first == next_expected_) {
    out.push_back(std::move(it->second));
    it = buffer_.erase(it);
    ++next_expected_;
  }
  return out;
}

std::optional<Bytes> SrArqReceiver::feedback(Slot) {
  Bytes fb;
  wire::Writer w(fb);
  w.put(static_cast<std::uint64_t>(next_expected_)).put(static_cast<std::uint32_t>(buffer_.size()));
  for (const auto& [seq, _] : buffer_) w.put(static_cast<std::uint64_t>(seq));
  write_outcomes(fb, outcomes_);
  outcomes_.clear();
  return fb;
}

// ---------------------------------------------------------------------------
// Adaptive causal RLNC
// ---------------------------------------------------------------------------

namespace {

// Keeps eps_hat / (1 - eps_hat) finite on a channel that has looked dead so far.
constexpr double kMaxEpsHat = 0.99;

}  // namespace

AcRlncSender::AcRlncSender(const ProtocolParams& params, RngStream rng)
    : params_(params), max_window_(params.window_ac()), rng_(rng), eps_hat_(params.eps_hat_init) {}

void AcRlncSender::on_feedback(std::span<const std::uint8_t> content, Slot slot) {
  wire::Reader r(content);
  const auto delivered = r.get<std::uint64_t>();
  const auto rank = r.get<std::uint64_t>();
  r.get<std::uint64_t>();  // receiver's window end; informational
  auto rest = r.rest();
  const auto outcomes = read_outcomes(rest);

  const double keep = params_.eps_hat_memory;
  for (const TxOutcome& o : outcomes) eps_hat_ = keep * eps_hat_ + (1.0 - keep) * (o.erased ? 1.0 : 0.0);

  if (delivered >= fb_delivered_) {
    fb_delivered_ = delivered;
    fb_rank_ = static_cast<std::size_t>(rank);
  }
  while (w_min_ < fb_delivered_ && !window_.empty()) {
    window_.pop_front();
    ++w_min_;
  }
  sent_per_slot_.erase(sent_per_slot_.begin(), sent_per_slot_.lower_bound(slot - params_.rtt));
}

double AcRlncSender::projected_deficit(Slot slot) const {
  // Feedback arriving by `slot` covers frames sent up to slot - rtt.
  std::size_t in_flight = 0;
  for (auto it = sent_per_slot_.upper_bound(slot - params_.rtt); it != sent_per_slot_.end() && it->first < slot; ++it) {
    in_flight += it->second;
  }
  const double unknowns = static_cast<double>(w_end_ - std::min(w_end_, fb_delivered_)) - static_cast<double>(fb_rank_);
  return unknowns - static_cast<double>(in_flight);
}

Bytes AcRlncSender::make_systematic(Seq seq, const Bytes& symbol) const {
  Bytes f;
  wire::Writer(f)
      .put(kAcFrame)
      .put(static_cast<std::uint64_t>(w_min_))
      .put(static_cast<std::uint64_t>(seq))
      .put(static_cast<std::uint16_t>(1))
      .put(static_cast<std::uint8_t>(1))
      .bytes(symbol);
  return f;
}

Bytes AcRlncSender::make_fec(Slot) {
  const std::size_t span = window_.size();
  std::vector<gf::Element> coeffs(span);
  for (auto& c : coeffs) c = gf::Element(static_cast<std::uint8_t>(1 + rng_() % 255));
  const std::vector<Bytes> win(window_.begin(), window_.end());
  const Bytes payload = rlnc::encode(win, coeffs);

  Bytes f;
  wire::Writer w(f);
  w.put(kAcFrame).put(static_cast<std::uint64_t>(w_min_)).put(static_cast<std::uint64_t>(w_min_)).put(static_cast<std::uint16_t>(span));
  for (gf::Element c : coeffs) w.put(c.value);
  w.bytes(payload);
  return f;
}

std::vector<Bytes> AcRlncSender::emit(Slot slot) {
  const auto beta = static_cast<std::size_t>(params_.beta);
  std::vector<Bytes> frames;
  const double deficit = projected_deficit(slot);
  std::size_t reactive = deficit > 0.0 ? static_cast<std::size_t>(std::ceil(deficit - 1e-9)) : 0;
  const double eps = std::clamp(eps_hat_, 0.0, kMaxEpsHat);

  // With more than one opportunity per slot, repair may not take the last one
  // while new data is waiting; otherwise accumulated credit starves the source.
  const bool reserve = beta > 1 && !pending_.empty() && window_.size() < max_window_;
  const std::size_t repair_cap = reserve ? beta - 1 : beta;

  while (frames.size() < beta) {
    if (!window_.empty() && reactive > 0 && frames.size() < repair_cap) {
      --reactive;
      ++reactive_frames_;
      ++fec_frames_;
      frames.push_back(make_fec(slot));
    } else if (!window_.empty() && credit_ >= 1.0 && frames.size() < repair_cap) {
      credit_ -= 1.0;
      ++apriori_frames_;
      ++fec_frames_;
      frames.push_back(make_fec(slot));
    } else if (!pending_.empty() && window_.size() < max_window_) {
      AppMessage msg = std::move(pending_.front());
      pending_.pop_front();
      if (msg.seq != w_end_) throw std::logic_error("ac_rlnc: sequence gap in submitted messages");
      window_.push_back(pack_symbol(msg.gen_slot, msg.body));
      ++w_end_;
      ++new_frames_;
      frames.push_back(make_systematic(msg.seq, window_.back()));
      credit_ += eps / (1.0 - eps);
    } else if (!window_.empty()) {
      ++fec_frames_;
      frames.push_back(make_fec(slot));
    } else {
      break;
    }
  }
  if (!frames.empty()) sent_per_slot_[slot] += frames.size();
  return frames;
}

std::vector<Delivered> AcRlncReceiver::on_arrivals(std::vector<Frame> frames, Slot) {
  std::vector<Delivered> out;
  for (const Frame& f : frames) {
    outcomes_.push_back(outcome_of(f));
    if (f.erased) continue;
    wire::Reader r(f.payload);
    if (r.get<std::uint8_t>() != kAcFrame) throw std::invalid_argument("ac_rlnc: unexpected frame type");
    const auto floor = r.get<std::uint64_t>();
    rlnc::CodedPacket pkt;
    pkt.window_start = r.get<std::uint64_t>();
    const auto span = r.get<std::uint16_t>();
    const auto coeffs = r.bytes(span);
    pkt.coefficients.reserve(span);
    for (std::uint8_t c : coeffs) pkt.coefficients.emplace_back(c);
    const auto payload = r.rest();
    pkt.payload.assign(payload.begin(), payload.end());

    decoder_.forget_below(floor);
    auto res = decoder_.absorb(pkt);
    if (!res.innovative) ++redundant_;
    for (auto& rel : res.released) out.push_back(unpack_symbol(rel.seq, rel.payload));
  }
  return out;
}

std::optional<Bytes> AcRlncReceiver::feedback(Slot) {
  Bytes fb;
  wire::Writer(fb)
      .put(static_cast<std::uint64_t>(decoder_.delivered_upto()))
      .put(static_cast<std::uint64_t>(decoder_.active_rank()))
      .put(static_cast<std::uint64_t>(decoder_.window_end()));
  write_outcomes(fb, outcomes_);
  outcomes_.clear();
  return fb;
}

}  // namespace mrsim::transport
