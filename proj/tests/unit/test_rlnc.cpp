#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mrsim/rlnc.hpp"

using mrsim::Bytes;
using mrsim::gf::Element;
using mrsim::rlnc::CodedPacket;
using mrsim::rlnc::Decoder;

namespace {

Element E(unsigned v) { return Element(static_cast<std::uint8_t>(v)); }

std::vector<Element> row(std::initializer_list<unsigned> vs) {
  std::vector<Element> out;
  for (unsigned v : vs) out.push_back(E(v));
  return out;
}

CodedPacket coded(mrsim::Seq start, const std::vector<Bytes>& window, std::vector<Element> coeffs) {
  CodedPacket p;
  p.window_start = start;
  p.payload = mrsim::rlnc::encode(window, coeffs);
  p.coefficients = std::move(coeffs);
  return p;
}

Bytes random_bytes(std::mt19937& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

}  // namespace

TEST_CASE("encode examples") {
  const Bytes p{0xDE, 0xAD, 0xBE, 0xEF};
  CHECK(mrsim::rlnc::encode(std::vector<Bytes>{p}, row({1})) == p);
  CHECK(mrsim::rlnc::encode(std::vector<Bytes>{p, p}, row({1, 1})) == Bytes(4, 0));
  CHECK(mrsim::rlnc::encode(std::vector<Bytes>{{0x01}, {0x02}}, row({0x02, 0x03})) == Bytes{0x04});
}

TEST_CASE("encode rejects mismatched input") {
  CHECK_THROWS_AS(mrsim::rlnc::encode(std::vector<Bytes>{{1}, {2}}, row({1})), std::invalid_argument);
  CHECK_THROWS_AS(mrsim::rlnc::encode(std::vector<Bytes>{{1}, {2, 3}}, row({1, 1})), std::invalid_argument);
}

TEST_CASE("systematic flag") {
  CodedPacket p;
  p.coefficients = row({0, 1, 0});
  CHECK(p.systematic());
  p.coefficients = row({0, 2, 0});
  CHECK_FALSE(p.systematic());
  p.coefficients = row({1, 1});
  CHECK_FALSE(p.systematic());
}

TEST_CASE("single systematic packet releases immediately") {
  Decoder d(3);
  const std::vector<Bytes> w{{9, 8, 7}};
  const auto r = d.absorb(coded(0, w, row({1})));
  CHECK(r.innovative);
  REQUIRE(r.released.size() == 1);
  CHECK(r.released[0].seq == 0);
  CHECK(r.released[0].payload == w[0]);
  CHECK(d.delivered_upto() == 1);
}

TEST_CASE("dependent third row then completing row") {
  const std::vector<Bytes> w{{0x11, 0x22}, {0x33, 0x44}, {0x55, 0x66}};
  Decoder d(2);
  CHECK(d.absorb(coded(0, w, row({1, 1, 0}))).innovative);
  CHECK(d.absorb(coded(0, w, row({0, 1, 1}))).innovative);
  const auto dep = d.absorb(coded(0, w, row({1, 0, 1})));
  CHECK_FALSE(dep.innovative);
  CHECK(dep.released.empty());
  CHECK(d.rank() == 2);
  CHECK(d.delivered_upto() == 0);

  const auto fin = d.absorb(coded(0, w, row({1, 0, 0})));
  CHECK(fin.innovative);
  CHECK(d.rank() == 3);
  REQUIRE(fin.released.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(fin.released[i].seq == i);
    CHECK(fin.released[i].payload == w[i]);
  }
}

TEST_CASE("malformed packets leave state unchanged") {
  Decoder d(2);
  const std::vector<Bytes> w{{1, 2}, {3, 4}};
  d.absorb(coded(0, w, row({1, 1})));
  CodedPacket empty;
  empty.payload = {0, 0};
  CHECK_THROWS_AS(d.absorb(empty), std::invalid_argument);
  CodedPacket wrong_len = coded(0, w, row({1, 0}));
  wrong_len.payload.push_back(0);
  CHECK_THROWS_AS(d.absorb(wrong_len), std::invalid_argument);
  CHECK(d.rank() == 1);
  CHECK(d.absorbed() == 1);
  const auto r = d.absorb(coded(0, w, row({1, 0})));
  CHECK(r.released.size() == 2);
}

TEST_CASE("round trip over random windows with rank monotone") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng() % 32;
    const std::size_t len = 1 + rng() % 64;
    std::vector<Bytes> w;
    for (std::size_t i = 0; i < k; ++i) w.push_back(random_bytes(rng, len));
    Decoder d(len);
    std::vector<Bytes> got(k);
    std::size_t released = 0;
    std::size_t prev_rank = 0;
    while (released < k) {
      std::vector<Element> c(k);
      for (auto& e : c) e = E(rng() % 256);
      const auto r = d.absorb(coded(0, w, c));
      REQUIRE(d.rank() >= prev_rank);
      CHECK(r.innovative == (d.rank() > prev_rank));
      prev_rank = d.rank();
      REQUIRE(d.rank() <= d.absorbed());
      for (const auto& rel : r.released) {
        REQUIRE(rel.seq == released);
        got[released++] = rel.payload;
      }
    }
    CHECK(got == w);
  }
}

TEST_CASE("sliding windows with projection of released packets") {
  std::mt19937 rng(5);
  const std::size_t len = 8;
  std::vector<Bytes> src;
  for (int i = 0; i < 40; ++i) src.push_back(random_bytes(rng, len));
  Decoder d(len);
  std::size_t next = 0;
  // Overlapping windows [s, s+6) with random nonzero coefficients.
  for (std::size_t s = 0; s + 6 <= src.size(); s += 2) {
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<Element> c(6);
      for (auto& e : c) e = E(1 + rng() % 255);
      const std::vector<Bytes> w(src.begin() + static_cast<long>(s), src.begin() + static_cast<long>(s + 6));
      for (const auto& rel : d.absorb(coded(s, w, c)).released) {
        REQUIRE(rel.seq == next);
        CHECK(rel.payload == src[next]);
        ++next;
      }
    }
  }
  CHECK(next >= 30);
}

TEST_CASE("a combination of held rows is not innovative") {
  std::mt19937 rng(9);
  std::vector<Bytes> w;
  for (int i = 0; i < 4; ++i) w.push_back(random_bytes(rng, 5));
  Decoder d(5);
  d.absorb(coded(0, w, row({1, 2, 3, 4})));
  d.absorb(coded(0, w, row({5, 6, 7, 8})));
  const auto a = row({1, 2, 3, 4});
  const auto b = row({5, 6, 7, 8});
  std::vector<Element> mix(4);
  for (int i = 0; i < 4; ++i) mix[i] = E(0x1D) * a[i] + E(0x42) * b[i];
  CHECK_FALSE(d.absorb(coded(0, w, mix)).innovative);
  CHECK(d.rank() == 2);
}

TEST_CASE("forgotten history cannot be referenced") {
  const std::vector<Bytes> w{{1}, {2}, {3}};
  Decoder d(1);
  d.absorb(coded(0, std::vector<Bytes>{w[0]}, row({1})));
  d.absorb(coded(1, std::vector<Bytes>{w[1]}, row({1})));
  d.forget_below(2);
  CHECK_THROWS_AS(d.absorb(coded(0, w, row({1, 1, 1}))), std::invalid_argument);
  const auto r = d.absorb(coded(2, std::vector<Bytes>{w[2]}, row({1})));
  REQUIRE(r.released.size() == 1);
  CHECK(r.released[0].payload == w[2]);
}
