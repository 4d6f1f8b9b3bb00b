// Compiled with -mavx2; only reached through the runtime dispatch in gf256.cpp.

#include "mrsim/gf256.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace mrsim::gf::kernels {

namespace {

struct Shuffles {
  __m256i lo;
  __m256i hi;
  __m256i mask;
};

inline Shuffles load_shuffles(std::uint8_t c) noexcept {
  const NibbleTables t = nibble_tables(c);
  const __m128i lo = _mm_load_si128(reinterpret_cast<const __m128i*>(t.lo.data()));
  const __m128i hi = _mm_load_si128(reinterpret_cast<const __m128i*>(t.hi.data()));
  return {_mm256_broadcastsi128_si256(lo), _mm256_broadcastsi128_si256(hi), _mm256_set1_epi8(0x0F)};
}

// c*x = lo[x & 15] ^ hi[x >> 4]; pshufb does 32 lookups per instruction.
inline __m256i product(const Shuffles& s, __m256i x) noexcept {
  const __m256i lo_nib = _mm256_and_si256(x, s.mask);
  const __m256i hi_nib = _mm256_and_si256(_mm256_srli_epi64(x, 4), s.mask);
  return _mm256_xor_si256(_mm256_shuffle_epi8(s.lo, lo_nib), _mm256_shuffle_epi8(s.hi, hi_nib));
}

}  // namespace

void muladd_avx2(std::uint8_t* dst, const std::uint8_t* src, std::size_t n, std::uint8_t c) noexcept {
  const Shuffles s = load_shuffles(c);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    const __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), _mm256_xor_si256(d, product(s, x)));
  }
  if (i < n) muladd_scalar(dst + i, src + i, n - i, c);
}

void mul_avx2(std::uint8_t* dst, std::size_t n, std::uint8_t c) noexcept {
  const Shuffles s = load_shuffles(c);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), product(s, x));
  }
  if (i < n) mul_scalar(dst + i, n - i, c);
}

}  // namespace mrsim::gf::kernels

#endif
