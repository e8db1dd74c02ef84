#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icc {

// 64-bit FNV-1a. Used for stream keys and report digests.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// Counter-based random stream keyed by (seed, stream_label).
///
/// Draw n of a stream is a pure function of the key and n, so the same
/// (seed, label) pair yields the same sequence on every platform and
/// standard library. Child streams derive a fresh key from the parent key
/// and a sub-label; they never consume draws from the parent.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::string stream_label);

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& stream_label() const noexcept { return label_; }

  std::uint64_t next_u64();

  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Double in [0, 1) with 53 random bits.
  double uniform_real();

  SeededRng child(std::string_view sub_label) const;
  SeededRng child(std::uint64_t index) const;

 private:
  SeededRng(std::uint64_t seed, std::string label, std::uint64_t key);

  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

SeededRng derive_rng(std::uint64_t seed, std::string_view stream_label);

// In-place Fisher-Yates, walking from the back.
template <typename T>
void fisher_yates(std::vector<T>& items, SeededRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace icc
