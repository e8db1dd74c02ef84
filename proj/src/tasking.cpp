#include "icc/tasking.hpp"

#include <numeric>

#include "icc/error.hpp"

namespace icc {

const char* to_string(MappingKind kind) {
  switch (kind) {
    case MappingKind::kIdentity: return "identity";
    case MappingKind::kStringNumber: return "string-number";
    case MappingKind::kSymbol: return "symbol";
    case MappingKind::kPermutation: return "permutation";
  }
  return "identity";
}

const char* label_mode_name(MappingKind kind) {
  switch (kind) {
    case MappingKind::kIdentity: return "original";
    case MappingKind::kStringNumber: return "string-number";
    case MappingKind::kSymbol: return "symbol";
    case MappingKind::kPermutation: return "permuted";
  }
  return "original";
}

MappingKind parse_label_mode(std::string_view name) {
  if (name == "original" || name == "identity") return MappingKind::kIdentity;
  if (name == "string-number") return MappingKind::kStringNumber;
  if (name == "symbol") return MappingKind::kSymbol;
  if (name == "permuted" || name == "permutation") return MappingKind::kPermutation;
  throw Error(ErrorCode::kConfig, "unknown label mode '" + std::string(name) + "'");
}

LabelSpace LabelMapping::displayed_space(const LabelSpace& ls) const {
  if (kind == MappingKind::kPermutation) return ls;
  if (display.size() != ls.size()) {
    throw Error(ErrorCode::kInvariant, "mapping does not match label space size");
  }
  return LabelSpace(display);
}

std::vector<std::size_t> sample_derangement(std::size_t n, SeededRng& rng) {
  if (n < 2) throw Error(ErrorCode::kInvariant, "no derangement of fewer than 2 items");
  std::vector<std::size_t> perm(n);
  for (;;) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    fisher_yates(perm, rng);
    bool fixed = false;
    for (std::size_t i = 0; i < n && !fixed; ++i) fixed = perm[i] == i;
    if (!fixed) return perm;
  }
}

LabelMapping make_mapping(MappingKind kind, const LabelSpace& ls, SeededRng& rng,
                          bool allow_fixed_points) {
  LabelMapping m;
  m.kind = kind;
  m.seed = rng.seed();
  const std::size_t n = ls.size();
  switch (kind) {
    case MappingKind::kIdentity:
      m.display = ls.labels();
      break;
    case MappingKind::kStringNumber: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      fisher_yates(order, rng);
      for (std::size_t i = 0; i < n; ++i) m.display.push_back(std::to_string(order[i]));
      break;
    }
    case MappingKind::kSymbol: {
      if (n > kSymbolTokens.size()) {
        throw Error(ErrorCode::kTooManyLabels,
                    "symbol mode supports at most 10 labels (label space has " +
                        std::to_string(n) + ")");
      }
      std::vector<std::string> symbols(kSymbolTokens.begin(), kSymbolTokens.end());
      fisher_yates(symbols, rng);
      m.display.assign(symbols.begin(), symbols.begin() + static_cast<std::ptrdiff_t>(n));
      break;
    }
    case MappingKind::kPermutation:
      if (allow_fixed_points) {
        m.permutation.resize(n);
        std::iota(m.permutation.begin(), m.permutation.end(), std::size_t{0});
        fisher_yates(m.permutation, rng);
      } else {
        m.permutation = sample_derangement(n, rng);
      }
      break;
  }
  return m;
}

DemoSet apply_mapping_to_demos(const LabelMapping& m, const DemoSet& demos) {
  if (m.kind != MappingKind::kPermutation) return demos;
  DemoSet out = demos;
  for (auto& d : out.demos) d.gold_label = m.permutation.at(d.gold_label);
  return out;
}

std::size_t apply_mapping_to_eval(const LabelMapping& m, std::size_t gold) {
  if (m.kind == MappingKind::kPermutation) return m.permutation.at(gold);
  return gold;
}

}  // namespace icc
