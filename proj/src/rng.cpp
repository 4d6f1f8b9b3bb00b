#include "mrsim/rng.hpp"

#include <random>
#include <stdexcept>

namespace mrsim {

namespace {

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

double RngStream::normal(double mean, double stddev) {
  if (stddev == 0.0) return mean;
  std::normal_distribution<double> dist(mean, stddev);
  return dist(*this);
}

RngStream RngStream::derive(std::string_view label) const noexcept {
  return RngStream(mix64(key_ ^ mix64(fnv1a(label))));
}

RngStream seed_stream(std::uint64_t master_seed, std::string_view label) noexcept {
  return RngStream(mix64(mix64(master_seed) ^ mix64(fnv1a(label) + 1)));
}

RngStream SeedRegistry::stream(const std::string& label) {
  if (!labels_.insert(label).second) {
    throw std::invalid_argument("duplicate RNG stream label: " + label);
  }
  return seed_stream(master_, label);
}

}  // namespace mrsim
