#pragma once

#include <atomic>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icc/scorer.hpp"

namespace icc {

/// Scores label continuations through an OpenAI-style completions endpoint.
///
/// Echo mode (default) posts prompt + label with echo enabled and
/// max_tokens = 0, then sums the logprobs of the tokens that overlap the
/// label by character offset. One request per label.
///
/// Top-logprobs mode posts the bare prompt with max_tokens = 1 and reads the
/// first position's top alternatives. Only single-word labels are accepted.
///
/// Transport failures and 5xx responses are retried with exponential backoff
/// up to retry_limit times; any other non-200 status aborts at once.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(ScorerConfig cfg);

  LabelDistribution score(const ScoreRequest& req) const override;
  std::vector<LabelDistribution> score_batch(
      std::span<const ScoreRequest> reqs) const override;
  std::string mode() const override;

  // HTTP attempts made so far, retries included.
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  double label_log_prob(const std::string& prompt, const std::string& label) const;
  std::vector<double> top_logprob_scores(const ScoreRequest& req) const;
  nlohmann::json post(const nlohmann::json& body) const;

  ScorerConfig cfg_;
  std::string host_;    // scheme://host[:port]
  std::string path_;    // base path + "/completions"
  std::string api_key_;
  mutable std::atomic<std::size_t> attempts_{0};
};

nlohmann::json build_echo_body(std::string_view model, std::string_view prompt,
                               std::string_view label);
nlohmann::json build_top_logprobs_body(std::string_view model,
                                       std::string_view prompt,
                                       std::size_t top_n);

// Number of Unicode code points in a UTF-8 string; completion servers report
// token offsets in characters.
std::size_t utf8_length(std::string_view s);

// Sum of logprobs over tokens that overlap [prompt_chars, total_chars).
// Throws Error(kScoring) on a malformed response.
double sum_label_logprobs(const nlohmann::json& response,
                          std::size_t prompt_chars, std::size_t total_chars);

// Probability mass of each variant among the first position's top
// alternatives; a variant matches a token exactly or after trimming. Absent
// variants score 0.
std::vector<double> read_top_logprobs(const nlohmann::json& response,
                                      std::span<const std::string> variants);

}  // namespace icc
