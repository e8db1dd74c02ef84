#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icc/core.hpp"
#include "icc/prompting.hpp"

namespace icc {

/// One prompt and the continuations to score, aligned to LabelSpace order.
struct ScoreRequest {
  std::string prompt;
  std::vector<std::string> label_variants;
};

ScoreRequest make_score_request(std::string prompt, const PromptTemplate& t,
                                const LabelSpace& displayed);

enum class Backend { kMock, kNgram, kHttp };
enum class HttpMode { kEcho, kTopLogprobs };

const char* to_string(Backend b);
Backend parse_backend(std::string_view name);
const char* to_string(HttpMode m);
HttpMode parse_http_mode(std::string_view name);

struct ScorerConfig {
  Backend backend = Backend::kMock;
  std::string endpoint_url;
  std::string model_name;
  std::size_t max_in_flight = 4;
  std::size_t retry_limit = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff_initial{200};
  std::string api_key_env = "LLM_API_KEY";
  HttpMode http_mode = HttpMode::kEcho;
  // Number of alternatives requested per position in top-logprobs mode.
  std::size_t top_logprobs = 5;
  std::string mock_table_path;
  std::string corpus_path;

  // Throws Error(kConfig). Never touches the network.
  void validate() const;
};

/// The language-model boundary. Implementations are safe to call from
/// several threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // One nonnegative finite score per label variant, proportional to the
  // probability of that continuation. Not normalized.
  virtual LabelDistribution score(const ScoreRequest& req) const = 0;

  // Results are in request order. Any failure fails the whole batch.
  virtual std::vector<LabelDistribution> score_batch(
      std::span<const ScoreRequest> reqs) const;

  // Short tag recorded in reports ("mock", "ngram", "http-echo", ...).
  virtual std::string mode() const = 0;
};

/// Table-driven scorer: exact prompt matches and regex rules in file order,
/// then the default distribution. Regex rules use search semantics.
class MockScorer final : public Scorer {
 public:
  MockScorer() = default;

  // JSON array of {"match": {"exact"|"regex": str}, "scores": [..]} entries
  // and at most one {"default": [..]} entry.
  static MockScorer from_json(std::string_view json_text);
  static MockScorer from_file(const std::string& path);

  void add_exact(std::string prompt, std::vector<double> scores);
  void add_regex(const std::string& pattern, std::vector<double> scores);
  void set_default(std::vector<double> scores);

  LabelDistribution score(const ScoreRequest& req) const override;
  std::string mode() const override { return "mock"; }

 private:
  struct Rule {
    bool exact = true;
    std::string pattern;
    std::regex re;
    std::vector<double> scores;
  };

  std::vector<Rule> rules_;
  std::optional<std::vector<double>> default_;
};

/// Word-bigram model with add-one smoothing.
///
/// The vocabulary is the corpus vocabulary plus the words of the label
/// variants in the request being scored. A label's score is the product over
/// its words of P(word | previous word), where the first previous word is the
/// last word of the prompt:
///
///   P(w | h) = (c(h, w) + 1) / (c(h) + V)    where c(h) = sum_w c(h, w)
///
/// When h never occurs as a history in the corpus the bigram estimate carries
/// no information, so the add-one unigram estimate (c(w) + 1) / (N + V) is
/// used instead.
class NGramScorer final : public Scorer {
 public:
  static NGramScorer from_text(std::string_view corpus);

  LabelDistribution score(const ScoreRequest& req) const override;
  std::string mode() const override { return "ngram"; }

  double conditional(std::string_view prev, std::string_view word,
                     std::size_t vocab_size) const;
  std::size_t corpus_vocab_size() const noexcept { return unigram_.size(); }
  std::size_t vocab_size_with(std::span<const std::string> extra_words) const;

 private:
  std::unordered_map<std::string, std::size_t> unigram_;
  std::unordered_map<std::string, std::size_t> history_;
  std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>>
      bigram_;
  std::size_t tokens_ = 0;
};

// Reads a UTF-8 text corpus. Only order 2 is supported.
NGramScorer ngram_train(const std::string& corpus_path, int order = 2);

/// Forwards to another scorer and keeps every scored prompt, in call order
/// for sequential use.
class RecordingScorer final : public Scorer {
 public:
  explicit RecordingScorer(const Scorer& inner) : inner_(inner) {}

  LabelDistribution score(const ScoreRequest& req) const override;
  std::vector<LabelDistribution> score_batch(
      std::span<const ScoreRequest> reqs) const override;
  std::string mode() const override { return inner_.mode(); }

  std::vector<std::string> prompts() const;
  std::size_t calls() const;
  void clear();

 private:
  const Scorer& inner_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> log_;
};

// Builds the configured backend. `fallback_corpus` feeds the n-gram backend
// when no corpus path is configured.
std::unique_ptr<Scorer> make_scorer(const ScorerConfig& cfg,
                                    std::string_view fallback_corpus = {});

}  // namespace icc
