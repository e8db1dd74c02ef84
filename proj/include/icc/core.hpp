#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icc {

struct PromptTemplate;

std::string_view trim(std::string_view s);

// Maximal runs of non-whitespace.
std::vector<std::string> split_words(std::string_view text);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// Ordered, unique label verbalizers. Labels are trimmed on construction
/// and compared by exact string match afterwards; no case folding.
class LabelSpace {
 public:
  explicit LabelSpace(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::optional<std::size_t> index_of(std::string_view label) const;

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<std::string> labels_;
};

struct Example {
  std::map<std::string, std::string> fields;
  std::size_t gold_label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

struct DemoSet {
  std::vector<Example> demos;
  std::uint64_t sample_seed = 0;
  // Train-split positions the demos were drawn from, in demo order.
  std::vector<std::size_t> source_indices;

  std::size_t k() const noexcept { return demos.size(); }
};

/// Nonnegative scores aligned to a LabelSpace. Not required to sum to one.
class LabelDistribution {
 public:
  LabelDistribution() = default;
  explicit LabelDistribution(std::vector<double> scores);

  static LabelDistribution zeros(std::size_t n);
  static LabelDistribution ones(std::size_t n);

  std::size_t size() const noexcept { return scores_.size(); }
  double operator[](std::size_t i) const { return scores_.at(i); }
  const std::vector<double>& scores() const noexcept { return scores_; }

  LabelDistribution& operator+=(const LabelDistribution& other);
  LabelDistribution& operator*=(double factor);
  LabelDistribution& operator/=(double divisor);

  friend bool operator==(const LabelDistribution&,
                         const LabelDistribution&) = default;

 private:
  std::vector<double> scores_;
};

LabelDistribution operator+(LabelDistribution a, const LabelDistribution& b);
LabelDistribution operator*(double factor, LabelDistribution d);

// Sum then divide by count. Empty input is an error.
LabelDistribution mean(std::span<const LabelDistribution> items);

// Lowest index among the maximal entries.
std::size_t argmax(const LabelDistribution& d);

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

ValidationResult validate_example(const Example& e, const PromptTemplate& t,
                                  const LabelSpace& ls);

}  // namespace icc
