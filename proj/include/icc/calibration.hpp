#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icc/core.hpp"
#include "icc/prompting.hpp"
#include "icc/rng.hpp"
#include "icc/scorer.hpp"

namespace icc {

inline constexpr double kDefaultEpsilon = 1e-12;
inline constexpr std::string_view kContentFreeToken = "N/A";

struct IccConfig {
  double lambda = 0.5;
  std::size_t shuffle_count = 1;
  double epsilon = kDefaultEpsilon;

  void validate() const;
};

enum class DcSource { kDemo, kTest };
const char* to_string(DcSource s);

struct DcConfig {
  std::size_t m_samples = 20;
  DcSource source = DcSource::kDemo;
  // The only supported length rule: rounded mean word count of the source
  // texts, at least 1.
  static constexpr std::string_view kSampleLengthMode = "mean-source-length";

  void validate() const;
};

/// Words available to domain calibration, with the length of each sampled
/// pseudo-input.
struct WordBag {
  std::vector<std::string> words;
  std::size_t sample_length = 1;

  // Every input field of every example is one source text.
  static WordBag from_examples(std::span<const Example> examples);
  bool empty() const noexcept { return words.empty(); }
};

/// Per-demonstration terms of the in-context calibration vector. A term the
/// lambda weight zeroes out is never scored and is left empty.
struct IccComponents {
  std::vector<LabelDistribution> leave_one_out;  // P_i
  std::vector<LabelDistribution> shuffled;       // P_R(i), averaged over shuffles
};

struct CalibrationResult {
  LabelDistribution raw;
  LabelDistribution calibration_vector;
  LabelDistribution calibrated;
  std::size_t predicted = 0;
  std::optional<IccComponents> components;
};

struct IccVector {
  LabelDistribution vector;
  IccComponents components;
};

LabelDistribution score_prompt(const Scorer& scorer, const PromptTemplate& t,
                               const LabelSpace& ls, std::string prompt);

// calibrated[j] = raw[j] / max(vector[j], epsilon); prediction is the lowest
// index among the maxima.
CalibrationResult reuse_calibration(const LabelDistribution& vector,
                                    const LabelDistribution& raw,
                                    double epsilon = kDefaultEpsilon);

CalibrationResult original_inference(const Scorer& scorer, const PromptTemplate& t,
                                     const DemoSet& demos, const Example& query,
                                     const LabelSpace& ls);

// Score of the prompt whose query fields all hold the content-free token.
LabelDistribution content_free_vector(const Scorer& scorer, const PromptTemplate& t,
                                      const DemoSet& demos, const LabelSpace& ls,
                                      std::string_view token = kContentFreeToken);

CalibrationResult contextual_calibration(const Scorer& scorer, const PromptTemplate& t,
                                         const DemoSet& demos, const Example& query,
                                         const LabelSpace& ls,
                                         std::string_view token = kContentFreeToken,
                                         double epsilon = kDefaultEpsilon);

// The M pseudo-inputs that domain calibration scores. Sample r draws from
// rng.child(r); every template field gets its own sample_length words.
std::vector<Example> domain_calibration_queries(const PromptTemplate& t,
                                                const DcConfig& cfg,
                                                const WordBag& bag,
                                                const SeededRng& rng);

LabelDistribution domain_calibration_vector(const Scorer& scorer, const PromptTemplate& t,
                                            const DemoSet& demos, const LabelSpace& ls,
                                            const DcConfig& cfg, const WordBag& bag,
                                            const SeededRng& rng);

CalibrationResult domain_calibration(const Scorer& scorer, const PromptTemplate& t,
                                     const DemoSet& demos, const Example& query,
                                     const LabelSpace& ls, const DcConfig& cfg,
                                     const WordBag& bag, const SeededRng& rng,
                                     double epsilon = kDefaultEpsilon);

/// (1/K) * sum_i (lambda * P_i + (1 - lambda) * P_R(i)).
///
/// P_i scores demo i as the query given the other K-1 demos in order; P_R(i)
/// is the same with demo i's words shuffled, averaged over shuffle_count
/// shuffles. Shuffle n of demo i draws from rng.child(i).child(n), so the
/// shuffled prompts do not depend on lambda. At lambda = 1 no shuffled prompt
/// is scored; at lambda = 0 no unshuffled one is.
IccVector icc_calibration_vector(const Scorer& scorer, const PromptTemplate& t,
                                 const DemoSet& demos, const LabelSpace& ls,
                                 const IccConfig& cfg, const SeededRng& rng);

CalibrationResult icc_predict(const Scorer& scorer, const PromptTemplate& t,
                              const DemoSet& demos, const Example& query,
                              const LabelSpace& ls, const IccConfig& cfg,
                              const SeededRng& rng);

}  // namespace icc
