#include "mrsim/gf256.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace mrsim::gf {

namespace {

using Table = std::array<std::array<std::uint8_t, 256>, 256>;

constexpr Table make_mul_table() noexcept {
  Table t{};
  for (unsigned a = 0; a < 256; ++a) {
    for (unsigned b = 0; b < 256; ++b) {
      t[a][b] = mul(Element(static_cast<std::uint8_t>(a)), Element(static_cast<std::uint8_t>(b))).value;
    }
  }
  return t;
}

constexpr Table kMul = make_mul_table();

using MulAddFn = void (*)(std::uint8_t*, const std::uint8_t*, std::size_t, std::uint8_t) noexcept;
using MulFn = void (*)(std::uint8_t*, std::size_t, std::uint8_t) noexcept;

struct Dispatch {
  Isa isa;
  MulAddFn muladd;
  MulFn mul;
};

bool cpu_has(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Dispatch table_for(Isa isa) noexcept {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::kAvx2:
      return {Isa::kAvx2, &kernels::muladd_avx2, &kernels::mul_avx2};
#endif
#if defined(__aarch64__)
    case Isa::kNeon:
      return {Isa::kNeon, &kernels::muladd_neon, &kernels::mul_neon};
#endif
    default:
      return {Isa::kScalar, &kernels::muladd_scalar, &kernels::mul_scalar};
  }
}

Isa initial_isa() noexcept {
  const char* env = std::getenv("MRSIM_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::kScalar;
  return detect_isa();
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Element inv(Element a) {
  if (a.value == 0) throw std::domain_error("gf256: zero has no inverse");
  const auto& t = detail::kTables;
  return Element(t.exp[255U - t.log[a.value]]);
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

Isa detect_isa() noexcept {
  if (cpu_has(Isa::kAvx2)) return Isa::kAvx2;
  if (cpu_has(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) noexcept {
  if (!cpu_has(isa) || table_for(isa).isa != isa) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

void region_muladd(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, Element c) {
  if (dst.size() != src.size()) throw std::invalid_argument("region_muladd: size mismatch");
  if (c.value == 0 || dst.empty()) return;
  table_for(active_isa()).muladd(dst.data(), src.data(), dst.size(), c.value);
}

void region_mul(std::span<std::uint8_t> dst, Element c) {
  if (dst.empty() || c.value == 1) return;
  table_for(active_isa()).mul(dst.data(), dst.size(), c.value);
}

namespace kernels {

void muladd_scalar(std::uint8_t* dst, const std::uint8_t* src, std::size_t n, std::uint8_t c) noexcept {
  const auto& row = kMul[c];
  for (std::size_t i = 0; i < n; ++i) dst[i] ^= row[src[i]];
}

void mul_scalar(std::uint8_t* dst, std::size_t n, std::uint8_t c) noexcept {
  const auto& row = kMul[c];
  for (std::size_t i = 0; i < n; ++i) dst[i] = row[dst[i]];
}

NibbleTables nibble_tables(std::uint8_t c) noexcept {
  NibbleTables t{};
  for (std::uint8_t i = 0; i < 16; ++i) {
    t.lo[i] = kMul[c][i];
    t.hi[i] = kMul[c][static_cast<std::uint8_t>(i << 4)];
  }
  return t;
}

}  // namespace kernels

}  // namespace mrsim::gf
