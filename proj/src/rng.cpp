#include "icc/rng.hpp"

#include <cstdio>
#include <stdexcept>

namespace icc {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t parent, std::string_view label) {
  return mix64(parent ^ mix64(fnv1a64(label) + kGolden));
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

SeededRng::SeededRng(std::uint64_t seed, std::string stream_label)
    : seed_(seed),
      label_(std::move(stream_label)),
      key_(derive_key(mix64(seed + kGolden), label_)) {}

SeededRng::SeededRng(std::uint64_t seed, std::string label, std::uint64_t key)
    : seed_(seed), label_(std::move(label)), key_(key) {}

std::uint64_t SeededRng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

std::uint64_t SeededRng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: bound is zero");
  // Reject the low (2^64 mod bound) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double SeededRng::uniform_real() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

SeededRng SeededRng::child(std::string_view sub_label) const {
  return SeededRng(seed_, label_ + "/" + std::string(sub_label),
                   derive_key(key_, sub_label));
}

SeededRng SeededRng::child(std::uint64_t index) const {
  return child(std::to_string(index));
}

SeededRng derive_rng(std::uint64_t seed, std::string_view stream_label) {
  return SeededRng(seed, std::string(stream_label));
}

}  // namespace icc
