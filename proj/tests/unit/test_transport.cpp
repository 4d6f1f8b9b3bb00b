#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "mrsim/protocols.hpp"
#include "mrsim/transport.hpp"

using namespace mrsim;
using namespace mrsim::transport;

namespace {

// Integer-hundredths evaluation of ceil(1 / max(1 - eps - alpha, lambda)) for
// eps = k/10, alpha = 0.11, lambda = 0.15. Exact, no floating point.
int beta_oracle(int k) {
  const int den = std::max(100 - 10 * k - 11, 15);
  return (100 + den - 1) / den;
}

Bytes body_for(Seq seq, std::size_t len) {
  Bytes b(len);
  for (std::size_t i = 0; i < len; ++i) b[i] = static_cast<std::uint8_t>((seq * 131 + i * 7 + 1) & 0xFF);
  return b;
}

struct Run {
  std::vector<DeliveryRecord> records;
  std::vector<std::pair<Slot, Delivered>> deliveries;
  Metrics metrics;
  std::size_t max_sr_span = 0;
  std::size_t max_ac_span = 0;
};

// One message per slot for `gen` slots, then idle until `horizon`.
Run simulate(Protocol p, ProtocolParams params, double eps, Slot gen, Slot horizon, std::uint64_t seed,
             SlottedChannel::ErasureScript script = {}) {
  SlottedChannel ch(params.rtt, ErasureProfile::constant(eps, horizon), RngStream(seed));
  if (script) ch.set_script(std::move(script));
  Session s(p, params, std::move(ch), RngStream(seed ^ 0xABCDEF));
  Run r;
  for (Slot t = 0; t < horizon; ++t) {
    std::optional<Bytes> body;
    if (t < gen) body = body_for(static_cast<Seq>(t), params.body_len);
    for (auto& d : s.step(t, std::move(body))) r.deliveries.emplace_back(t, std::move(d));
  }
  r.records = s.records();
  r.metrics = s.metrics();
  return r;
}

ProtocolParams params_with(int beta, Slot rtt = 4) {
  ProtocolParams p;
  p.beta = beta;
  p.rtt = rtt;
  p.body_len = 16;
  return p;
}

}  // namespace

TEST_CASE("compute_beta examples") {
  CHECK(compute_beta(0.0, 0.11, 0.15) == 2);
  CHECK(compute_beta(0.5, 0.11, 0.15) == 3);
  CHECK(compute_beta(0.95, 0.11, 0.15) == 7);
  CHECK_THROWS_AS(compute_beta(0.3, 0.11, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_beta(1.2, 0.11, 0.15), std::invalid_argument);
}

TEST_CASE("compute_beta over the epsilon grid matches exact arithmetic") {
  for (int k = 0; k <= 10; ++k) {
    CAPTURE(k);
    CHECK(compute_beta(k / 10.0, 0.11, 0.15) == beta_oracle(k));
  }
}

TEST_CASE("window sizes round up") {
  ProtocolParams p;
  p.rtt = 4;
  p.beta = 3;
  CHECK(p.window_sr() == 24);
  CHECK(p.window_ac() == 18);
  p.rtt = 2;
  p.beta = 1;
  p.b = 1.25;
  CHECK(p.window_ac() == 3);
  CHECK(parse_protocol("sr_arq") == Protocol::kSrArq);
  CHECK_THROWS_AS(parse_protocol("tcp"), std::invalid_argument);
}

TEST_CASE("UDP examples") {
  const auto lossless = simulate(Protocol::kUdp, params_with(2), 0.0, 50, 60, 1);
  for (const auto& rec : lossless.records) CHECK(rec.in_order_delay() == 2);
  CHECK(lossless.metrics.delivery_ratio == 1.0);
  CHECK(lossless.metrics.mean_in_order_delay == 2.0);

  const auto dead = simulate(Protocol::kUdp, params_with(2), 1.0, 50, 60, 1);
  CHECK(dead.metrics.delivered == 0);
  CHECK(std::isnan(dead.metrics.mean_in_order_delay));

  // m1 erased, m2 survives: m2 arrives, m1 never does.
  const auto gap = simulate(Protocol::kUdp, params_with(1), 0.0, 3, 20, 1,
                            [](Slot s, std::uint32_t) { return s == 1; });
  CHECK_FALSE(gap.records[1].delivered_slot);
  CHECK(gap.records[2].delivered_slot == 4);
  CHECK(gap.metrics.frames == 3);
}

TEST_CASE("SR-ARQ head-of-line trace") {
  const auto r = simulate(Protocol::kSrArq, params_with(1), 0.0, 4, 20, 1,
                          [](Slot s, std::uint32_t) { return s == 0; });
  for (Seq q = 0; q < 4; ++q) CHECK(r.records[q].delivered_slot == 6);
  CHECK(r.records[1].in_order_delay() == 5);
}

TEST_CASE("SR-ARQ repeated base loss stalls by one RTT per loss") {
  for (int k = 1; k <= 3; ++k) {
    CAPTURE(k);
    // The first k transmissions of seq 0 (slots 0, 4, 8, ...) are erased.
    const auto r = simulate(Protocol::kSrArq, params_with(1), 0.0, 4, 40, 1,
                            [k](Slot s, std::uint32_t i) { return i == 0 && s % 4 == 0 && s / 4 < k; });
    REQUIRE(r.records[0].delivered_slot);
    CHECK(*r.records[0].delivered_slot >= 0 + 2 + 4 * k);
  }
}

TEST_CASE("AC-RLNC recovers a single erasure without waiting for feedback") {
  ProtocolParams p = params_with(1);
  p.eps_hat_init = 0.5;
  const auto r = simulate(Protocol::kAcRlnc, p, 0.0, 1, 20, 1, [](Slot s, std::uint32_t) { return s == 0; });
  REQUIRE(r.records[0].delivered_slot);
  CHECK(r.records[0].in_order_delay() == 3);
}

TEST_CASE("AC-RLNC at epsilon 0 releases every packet after RTT/2") {
  ProtocolParams p = params_with(2);
  p.eps_hat_init = 0.0;
  SlottedChannel ch(p.rtt, ErasureProfile::constant(0.0, 100), RngStream(5));
  Session s(Protocol::kAcRlnc, p, std::move(ch), RngStream(6));
  for (Slot t = 0; t < 100; ++t) s.step(t, t < 80 ? std::optional<Bytes>(body_for(t, p.body_len)) : std::nullopt);
  for (const auto& rec : s.records()) CHECK(rec.in_order_delay() == 2);
  // Two frames per slot while generating, one new packet each.
  CHECK(s.channel().frames_sent() >= 160);
}

TEST_CASE("degeneracy: identical schedules at epsilon 0") {
  for (int beta : {1, 2, 3}) {
    const auto u = simulate(Protocol::kUdp, params_with(beta), 0.0, 60, 80, 2);
    const auto sr = simulate(Protocol::kSrArq, params_with(beta), 0.0, 60, 80, 2);
    ProtocolParams ap = params_with(beta);
    ap.eps_hat_init = 0.0;
    const auto ac = simulate(Protocol::kAcRlnc, ap, 0.0, 60, 80, 2);
    for (std::size_t i = 0; i < 60; ++i) {
      CHECK(u.records[i].delivered_slot == sr.records[i].delivered_slot);
      CHECK(u.records[i].delivered_slot == ac.records[i].delivered_slot);
    }
  }
}

TEST_CASE("reliability, ordering, integrity and window bounds") {
  const Slot horizon = 600;
  for (int k = 1; k <= 9; ++k) {
    const double eps = k / 10.0;
    const int beta = compute_beta(eps, 0.11, 0.15);
    for (Protocol proto : {Protocol::kSrArq, Protocol::kAcRlnc}) {
      CAPTURE(k);
      CAPTURE(protocol_name(proto));
      ProtocolParams p = params_with(beta);
      p.eps_hat_init = eps;
      // Offered load can exceed capacity at high eps, so drain well past the horizon.
      const Slot drain = 8 * horizon;
      SlottedChannel ch(p.rtt, ErasureProfile::constant(eps, drain), RngStream(100 + k));
      Session s(proto, p, std::move(ch), RngStream(200 + k));
      const Slot gen_until = horizon - 10 * p.rtt * beta;
      Seq next = 0;
      for (Slot t = 0; t < drain && next < static_cast<Seq>(gen_until); ++t) {
        std::optional<Bytes> body;
        if (t < gen_until) body = body_for(static_cast<Seq>(t), p.body_len);
        for (const auto& d : s.step(t, std::move(body))) {
          REQUIRE(d.seq == next);
          CHECK(d.body == body_for(d.seq, p.body_len));
          CHECK(d.gen_slot == static_cast<Slot>(d.seq));
          ++next;
        }
      }
      CHECK(next == static_cast<Seq>(gen_until));
      for (std::size_t i = 1; i < s.records().size(); ++i) {
        if (s.records()[i].delivered_slot && s.records()[i - 1].delivered_slot) {
          CHECK(*s.records()[i - 1].delivered_slot <= *s.records()[i].delivered_slot);
        }
      }
    }
  }
}

TEST_CASE("window occupancy never exceeds the configured maximum") {
  const double eps = 0.6;
  ProtocolParams p = params_with(compute_beta(eps, 0.11, 0.15));
  p.eps_hat_init = eps;
  SlottedChannel ch1(p.rtt, ErasureProfile::constant(eps, 1000), RngStream(9));
  SlottedChannel ch2 = ch1;
  SrArqSender sr(p);
  SrArqReceiver srr;
  AcRlncSender ac(p, RngStream(1));
  AcRlncReceiver acr(p);
  for (Slot t = 0; t < 1000; ++t) {
    sr.submit(AppMessage{static_cast<Seq>(t), t, body_for(t, p.body_len)});
    ac.submit(AppMessage{static_cast<Seq>(t), t, body_for(t, p.body_len)});
    for (const auto& fb : ch1.deliver_feedback(t)) sr.on_feedback(fb, t);
    for (const auto& fb : ch2.deliver_feedback(t)) ac.on_feedback(fb, t);
    for (auto& f : sr.emit(t)) ch1.send(std::move(f), t);
    for (auto& f : ac.emit(t)) ch2.send(std::move(f), t);
    CHECK(sr.unacked_span() <= p.window_sr());
    CHECK(ac.window_span() <= p.window_ac());
    srr.on_arrivals(ch1.receive(t), t);
    acr.on_arrivals(ch2.receive(t), t);
    if (auto fb = srr.feedback(t)) ch1.send_feedback(std::move(*fb), t);
    if (auto fb = acr.feedback(t)) ch2.send_feedback(std::move(*fb), t);
  }
}

TEST_CASE("AC-RLNC redundancy ratio tracks eps_hat at 0.5") {
  // Light load (one message every third slot) so window stalls do not force
  // extra spare FEC frames and a-priori credit dominates.
  ProtocolParams p = params_with(1);
  p.eps_hat_init = 0.5;
  const Slot horizon = 30000;
  SlottedChannel ch(p.rtt, ErasureProfile::constant(0.5, horizon), RngStream(42));
  AcRlncSender ac(p, RngStream(43));
  AcRlncReceiver rx(p);
  for (Slot t = 0; t < horizon; ++t) {
    if (t % 3 == 0) ac.submit(AppMessage{static_cast<Seq>(t / 3), t, body_for(t, p.body_len)});
    for (const auto& fb : ch.deliver_feedback(t)) ac.on_feedback(fb, t);
    for (auto& f : ac.emit(t)) ch.send(std::move(f), t);
    rx.on_arrivals(ch.receive(t), t);
    if (auto fb = rx.feedback(t)) ch.send_feedback(std::move(*fb), t);
  }
  const double ratio = static_cast<double>(ac.apriori_fec_frames()) / static_cast<double>(ac.new_frames());
  CHECK(ac.eps_hat() == doctest::Approx(0.5).epsilon(0.15));
  CHECK(std::abs(ratio - 1.0) < 0.1);
}

TEST_CASE("AC-RLNC beats SR-ARQ on mean in-order delay at epsilon 0.3") {
  const double eps = 0.3;
  const int beta = compute_beta(eps, 0.11, 0.15);
  ProtocolParams p = params_with(beta);
  p.eps_hat_init = eps;
  const auto sr = simulate(Protocol::kSrArq, p, eps, 2000, 2100, 17);
  const auto ac = simulate(Protocol::kAcRlnc, p, eps, 2000, 2100, 17);
  CHECK(ac.metrics.mean_in_order_delay < sr.metrics.mean_in_order_delay);
}

TEST_CASE("every protocol delivers nothing at epsilon 1") {
  for (Protocol proto : {Protocol::kUdp, Protocol::kSrArq, Protocol::kAcRlnc}) {
    const auto r = simulate(proto, params_with(2), 1.0, 40, 60, 3);
    CHECK(r.metrics.delivery_ratio == 0.0);
  }
}

TEST_CASE("session rejects bad input") {
  ProtocolParams p = params_with(1);
  SlottedChannel ch(p.rtt, ErasureProfile::constant(0.0, 10), RngStream(1));
  Session s(Protocol::kUdp, p, ch, RngStream(2));
  CHECK_THROWS_AS(s.step(0, Bytes(3)), std::invalid_argument);
  SlottedChannel other(8, ErasureProfile::constant(0.0, 10), RngStream(1));
  CHECK_THROWS_AS(Session(Protocol::kUdp, p, other, RngStream(2)), std::invalid_argument);
}

TEST_CASE("outcome trailer round trip") {
  std::vector<TxOutcome> in{{3, 0, true}, {3, 1, false}, {9, 2, true}};
  Bytes buf;
  write_outcomes(buf, in);
  buf.push_back(0x7F);
  std::span<const std::uint8_t> view(buf);
  const auto out = read_outcomes(view);
  REQUIRE(out.size() == 3);
  CHECK(out[2].send_slot == 9);
  CHECK(out[0].erased);
  CHECK(view.size() == 1);
}
