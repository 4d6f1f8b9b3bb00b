// aarch64 only. Same nibble-split scheme as the AVX2 kernel, 16 lanes via vqtbl1q.

#include "mrsim/gf256.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace mrsim::gf::kernels {

void muladd_neon(std::uint8_t* dst, const std::uint8_t* src, std::size_t n, std::uint8_t c) noexcept {
  const NibbleTables t = nibble_tables(c);
  const uint8x16_t lo = vld1q_u8(t.lo.data());
  const uint8x16_t hi = vld1q_u8(t.hi.data());
  const uint8x16_t mask = vdupq_n_u8(0x0F);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t x = vld1q_u8(src + i);
    const uint8x16_t p = veorq_u8(vqtbl1q_u8(lo, vandq_u8(x, mask)), vqtbl1q_u8(hi, vshrq_n_u8(x, 4)));
    vst1q_u8(dst + i, veorq_u8(vld1q_u8(dst + i), p));
  }
  if (i < n) muladd_scalar(dst + i, src + i, n - i, c);
}

void mul_neon(std::uint8_t* dst, std::size_t n, std::uint8_t c) noexcept {
  const NibbleTables t = nibble_tables(c);
  const uint8x16_t lo = vld1q_u8(t.lo.data());
  const uint8x16_t hi = vld1q_u8(t.hi.data());
  const uint8x16_t mask = vdupq_n_u8(0x0F);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t x = vld1q_u8(dst + i);
    vst1q_u8(dst + i, veorq_u8(vqtbl1q_u8(lo, vandq_u8(x, mask)), vqtbl1q_u8(hi, vshrq_n_u8(x, 4))));
  }
  if (i < n) mul_scalar(dst + i, n - i, c);
}

}  // namespace mrsim::gf::kernels

#endif
