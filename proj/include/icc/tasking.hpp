#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "icc/core.hpp"
#include "icc/rng.hpp"

namespace icc {

enum class MappingKind { kIdentity, kStringNumber, kSymbol, kPermutation };

const char* to_string(MappingKind kind);
// Accepts the CLI spellings: original, string-number, symbol, permuted.
MappingKind parse_label_mode(std::string_view name);
const char* label_mode_name(MappingKind kind);

inline constexpr std::array<std::string_view, 10> kSymbolTokens = {
    "@", "#", "$", "%", "*", "^", "##", "$$", "%%", "**"};

/// Bijection applied to a label space for one seed.
///
/// String kinds (identity, string-number, symbol) change what is displayed
/// for each original label. The permutation kind keeps the displayed label
/// strings but reassigns which label each example carries.
struct LabelMapping {
  MappingKind kind = MappingKind::kIdentity;
  std::uint64_t seed = 0;
  // String kinds: displayed string per original label index.
  std::vector<std::string> display;
  // Permutation kind: original index -> replacement index.
  std::vector<std::size_t> permutation;

  // The label space the model sees.
  LabelSpace displayed_space(const LabelSpace& ls) const;
};

// Throws Error(kTooManyLabels) for symbol kind with more than 10 labels.
// Permutations are uniform derangements unless allow_fixed_points is set.
LabelMapping make_mapping(MappingKind kind, const LabelSpace& ls, SeededRng& rng,
                          bool allow_fixed_points = false);

DemoSet apply_mapping_to_demos(const LabelMapping& m, const DemoSet& demos);

// Index, in the displayed label space, that a correct prediction for an
// example with original label `gold` must name.
std::size_t apply_mapping_to_eval(const LabelMapping& m, std::size_t gold);

// Uniform derangement of {0..n-1} by rejection. n >= 2.
std::vector<std::size_t> sample_derangement(std::size_t n, SeededRng& rng);

}  // namespace icc
