#pragma once

// GF(2^8) arithmetic modulo x^8 + x^4 + x^3 + x + 1 (0x11B).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace mrsim::gf {

inline constexpr std::uint16_t kPolynomial = 0x11B;

/// Shift-and-reduce product. Reference for the table-driven paths.
constexpr std::uint8_t mul_slow(std::uint8_t a, std::uint8_t b) noexcept {
  std::uint8_t p = 0;
  while (b != 0) {
    if (b & 1U) p ^= a;
    const bool carry = (a & 0x80U) != 0;
    a = static_cast<std::uint8_t>(a << 1);
    if (carry) a ^= static_cast<std::uint8_t>(kPolynomial & 0xFFU);
    b >>= 1;
  }
  return p;
}

namespace detail {

struct LogTables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
};

// 0x03 generates the multiplicative group for 0x11B (0x02 does not).
constexpr LogTables make_log_tables() noexcept {
  LogTables t;
  std::uint8_t x = 1;
  for (int i = 0; i < 255; ++i) {
    t.exp[static_cast<std::size_t>(i)] = x;
    t.log[x] = static_cast<std::uint8_t>(i);
    x = mul_slow(x, 0x03);
  }
  for (int i = 255; i < 512; ++i) t.exp[static_cast<std::size_t>(i)] = t.exp[static_cast<std::size_t>(i - 255)];
  return t;
}

inline constexpr LogTables kTables = make_log_tables();

}  // namespace detail

/// One field element. Addition is XOR; multiplication goes through log/exp tables.
struct Element {
  std::uint8_t value = 0;

  constexpr Element() = default;
  constexpr explicit Element(std::uint8_t v) noexcept : value(v) {}

  friend constexpr bool operator==(Element, Element) = default;
};

constexpr Element add(Element a, Element b) noexcept {
  return Element(static_cast<std::uint8_t>(a.value ^ b.value));
}

constexpr Element mul(Element a, Element b) noexcept {
  if (a.value == 0 || b.value == 0) return Element(0);
  const auto& t = detail::kTables;
  return Element(t.exp[static_cast<std::size_t>(t.log[a.value]) + t.log[b.value]]);
}

/// Multiplicative inverse. Throws std::domain_error for zero.
Element inv(Element a);

inline constexpr Element operator+(Element a, Element b) noexcept { return add(a, b); }
inline constexpr Element operator*(Element a, Element b) noexcept { return mul(a, b); }

// ---------------------------------------------------------------------------
// Region kernels: the byte-wise inner loops of encoding and elimination.
// ---------------------------------------------------------------------------

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

/// Best ISA the running CPU supports among those compiled in.
Isa detect_isa() noexcept;

/// ISA currently used by `region_muladd` / `region_mul`.
Isa active_isa() noexcept;

/// Pins the dispatch to `isa`. Returns false (and changes nothing) when the
/// CPU or the build lacks it. MRSIM_SIMD=scalar in the environment pins scalar
/// at startup.
bool force_isa(Isa isa) noexcept;

/// dst[i] ^= c * src[i]. Sizes must match.
void region_muladd(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, Element c);

/// dst[i] = c * dst[i].
void region_mul(std::span<std::uint8_t> dst, Element c);

namespace kernels {

void muladd_scalar(std::uint8_t* dst, const std::uint8_t* src, std::size_t n, std::uint8_t c) noexcept;
void mul_scalar(std::uint8_t* dst, std::size_t n, std::uint8_t c) noexcept;

#if defined(__x86_64__) || defined(_M_X64)
void muladd_avx2(std::uint8_t* dst, const std::uint8_t* src, std::size_t n, std::uint8_t c) noexcept;
void mul_avx2(std::uint8_t* dst, std::size_t n, std::uint8_t c) noexcept;
#endif

#if defined(__aarch64__)
void muladd_neon(std::uint8_t* dst, const std::uint8_t* src, std::size_t n, std::uint8_t c) noexcept;
void mul_neon(std::uint8_t* dst, std::size_t n, std::uint8_t c) noexcept;
#endif

/// Nibble split tables used by the shuffle-based kernels:
/// lo[i] = c*i, hi[i] = c*(i<<4) for i in 0..15.
struct NibbleTables {
  alignas(16) std::array<std::uint8_t, 16> lo;
  alignas(16) std::array<std::uint8_t, 16> hi;
};

NibbleTables nibble_tables(std::uint8_t c) noexcept;

}  // namespace kernels

}  // namespace mrsim::gf
