#include "mrsim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mrsim/protocols.hpp"
#include "mrsim/wire.hpp"

namespace mrsim::transport {

std::string_view protocol_name(Protocol p) noexcept {
  switch (p) {
    case Protocol::kUdp: return "udp";
    case Protocol::kSrArq: return "sr_arq";
    case Protocol::kAcRlnc: return "ac_rlnc";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "udp") return Protocol::kUdp;
  if (name == "sr_arq") return Protocol::kSrArq;
  if (name == "ac_rlnc") return Protocol::kAcRlnc;
  throw std::invalid_argument("unknown protocol '" + std::string(name) + "' (expected udp, sr_arq or ac_rlnc)");
}

int compute_beta(double epsilon, double alpha, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon outside [0, 1]");
  const double denom = std::max(1.0 - epsilon - alpha, lambda);
  // Absorb round-off when the reciprocal is an exact integer (e.g. 1/0.5).
  return static_cast<int>(std::ceil(1.0 / denom - 1e-9));
}

namespace {

std::size_t window_of(double factor, int beta, Slot rtt) {
  const double w = std::ceil(factor * beta * static_cast<double>(rtt) - 1e-9);
  return static_cast<std::size_t>(std::max(1.0, w));
}

}  // namespace

std::size_t ProtocolParams::window_sr() const { return window_of(a, beta, rtt); }
std::size_t ProtocolParams::window_ac() const { return window_of(b, beta, rtt); }

Bytes pack_symbol(Slot gen_slot, std::span<const std::uint8_t> body) {
  Bytes out;
  out.reserve(body.size() + 4);
  wire::Writer(out).put(static_cast<std::uint32_t>(gen_slot)).bytes(body);
  return out;
}

Delivered unpack_symbol(Seq seq, std::span<const std::uint8_t> symbol) {
  wire::Reader r(symbol);
  Delivered d;
  d.seq = seq;
  d.gen_slot = static_cast<Slot>(r.get<std::uint32_t>());
  const auto body = r.rest();
  d.body.assign(body.begin(), body.end());
  return d;
}

void write_outcomes(Bytes& out, std::span<const TxOutcome> outcomes) {
  wire::Writer w(out);
  w.put(static_cast<std::uint32_t>(outcomes.size()));
  for (const TxOutcome& o : outcomes) {
    w.put(static_cast<std::int64_t>(o.send_slot)).put(o.index).put(static_cast<std::uint8_t>(o.erased ? 1 : 0));
  }
}

std::vector<TxOutcome> read_outcomes(std::span<const std::uint8_t>& in) {
  wire::Reader r(in);
  const auto n = r.get<std::uint32_t>();
  std::vector<TxOutcome> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    TxOutcome o;
    o.send_slot = r.get<std::int64_t>();
    o.index = r.get<std::uint32_t>();
    o.erased = r.get<std::uint8_t>() != 0;
    out.push_back(o);
  }
  in = r.rest();
  return out;
}

Metrics collect_metrics(std::span<const DeliveryRecord> records, std::uint64_t frames_transmitted) {
  Metrics m;
  m.generated = records.size();
  m.frames = frames_transmitted;
  double sum = 0.0;
  for (const DeliveryRecord& r : records) {
    const auto d = r.in_order_delay();
    if (!d) continue;
    ++m.delivered;
    sum += static_cast<double>(*d);
    m.max_in_order_delay = std::max(m.max_in_order_delay, *d);
  }
  m.mean_in_order_delay = m.delivered ? sum / static_cast<double>(m.delivered) : std::numeric_limits<double>::quiet_NaN();
  m.delivery_ratio = m.generated ? static_cast<double>(m.delivered) / static_cast<double>(m.generated) : 0.0;
  m.throughput = frames_transmitted ? static_cast<double>(m.delivered) / static_cast<double>(frames_transmitted) : 0.0;
  return m;
}

std::unique_ptr<Sender> make_sender(Protocol p, const ProtocolParams& params, RngStream rng) {
  switch (p) {
    case Protocol::kUdp: return std::make_unique<UdpSender>(params);
    case Protocol::kSrArq: return std::make_unique<SrArqSender>(params);
    case Protocol::kAcRlnc: return std::make_unique<AcRlncSender>(params, rng);
  }
  throw std::invalid_argument("make_sender: bad protocol");
}

std::unique_ptr<Receiver> make_receiver(Protocol p, const ProtocolParams& params) {
  switch (p) {
    case Protocol::kUdp: return std::make_unique<UdpReceiver>();
    case Protocol::kSrArq: return std::make_unique<SrArqReceiver>();
    case Protocol::kAcRlnc: return std::make_unique<AcRlncReceiver>(params);
  }
  throw std::invalid_argument("make_receiver: bad protocol");
}

Session::Session(Protocol protocol, const ProtocolParams& params, SlottedChannel channel, RngStream protocol_rng)
    : protocol_(protocol),
      params_(params),
      channel_(std::move(channel)),
      sender_(make_sender(protocol, params, protocol_rng)),
      receiver_(make_receiver(protocol, params)) {
  if (params.beta < 1) throw std::invalid_argument("beta must be at least 1");
  if (channel_.rtt() != params.rtt) throw std::invalid_argument("session RTT differs from channel RTT");
}

std::vector<Delivered> Session::step(Slot slot, std::optional<Bytes> body) {
  if (body) {
    if (body->size() != params_.body_len) throw std::invalid_argument("message body length differs from configured payload length");
    AppMessage msg{records_.size(), slot, std::move(*body)};
    records_.push_back(DeliveryRecord{msg.seq, slot, std::nullopt});
    sender_->submit(std::move(msg));
  }
  for (const Bytes& fb : channel_.deliver_feedback(slot)) sender_->on_feedback(fb, slot);
  for (Bytes& frame : sender_->emit(slot)) channel_.send(std::move(frame), slot);

  std::vector<Delivered> out = receiver_->on_arrivals(channel_.receive(slot), slot);
  for (const Delivered& d : out) {
    DeliveryRecord& rec = records_.at(static_cast<std::size_t>(d.seq));
    if (!rec.delivered_slot) rec.delivered_slot = slot;
  }
  if (auto fb = receiver_->feedback(slot)) channel_.send_feedback(std::move(*fb), slot);
  return out;
}

}  // namespace mrsim::transport
