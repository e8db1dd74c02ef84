#include "icc/scorer.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "icc/error.hpp"
#include "icc/http_scorer.hpp"

namespace icc {

using json = nlohmann::json;

ScoreRequest make_score_request(std::string prompt, const PromptTemplate& t,
                                const LabelSpace& displayed) {
  ScoreRequest req;
  req.prompt = std::move(prompt);
  req.label_variants.reserve(displayed.size());
  for (const auto& label : displayed.labels()) {
    req.label_variants.push_back(label_continuation(t, label));
  }
  return req;
}

const char* to_string(Backend b) {
  switch (b) {
    case Backend::kMock: return "mock";
    case Backend::kNgram: return "ngram";
    case Backend::kHttp: return "http";
  }
  return "mock";
}

Backend parse_backend(std::string_view name) {
  if (name == "mock") return Backend::kMock;
  if (name == "ngram") return Backend::kNgram;
  if (name == "http") return Backend::kHttp;
  throw Error(ErrorCode::kConfig, "unknown backend '" + std::string(name) + "'");
}

const char* to_string(HttpMode m) {
  return m == HttpMode::kEcho ? "echo" : "top-logprobs";
}

HttpMode parse_http_mode(std::string_view name) {
  if (name == "echo") return HttpMode::kEcho;
  if (name == "top-logprobs") return HttpMode::kTopLogprobs;
  throw Error(ErrorCode::kConfig, "unknown http mode '" + std::string(name) + "'");
}

void ScorerConfig::validate() const {
  if (max_in_flight == 0) {
    throw Error(ErrorCode::kConfig, "max_in_flight must be positive");
  }
  if (backend == Backend::kHttp) {
    if (endpoint_url.empty()) {
      throw Error(ErrorCode::kConfig, "http backend requires --endpoint");
    }
    if (model_name.empty()) {
      throw Error(ErrorCode::kConfig, "http backend requires --model");
    }
  }
  if (timeout.count() <= 0) {
    throw Error(ErrorCode::kConfig, "timeout must be positive");
  }
}

std::vector<LabelDistribution> Scorer::score_batch(
    std::span<const ScoreRequest> reqs) const {
  std::vector<LabelDistribution> out;
  out.reserve(reqs.size());
  for (const auto& r : reqs) out.push_back(score(r));
  return out;
}

// --- mock -----------------------------------------------------------------

namespace {

std::vector<double> parse_scores(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::kConfig, "mock scores must be a nonempty array");
  }
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::kConfig, "mock score not a number");
    v.push_back(x.get<double>());
  }
  LabelDistribution check(v);  // rejects negative / non-finite entries
  return v;
}

}  // namespace

MockScorer MockScorer::from_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("mock table: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kConfig, "mock table must be a JSON list");
  MockScorer m;
  for (const auto& entry : doc) {
    if (entry.contains("default")) {
      m.set_default(parse_scores(entry.at("default")));
      continue;
    }
    if (!entry.contains("match") || !entry.contains("scores")) {
      throw Error(ErrorCode::kConfig, "mock rule needs 'match' and 'scores'");
    }
    const auto& match = entry.at("match");
    if (match.contains("exact")) {
      m.add_exact(match.at("exact").get<std::string>(), parse_scores(entry.at("scores")));
    } else if (match.contains("regex")) {
      m.add_regex(match.at("regex").get<std::string>(), parse_scores(entry.at("scores")));
    } else {
      throw Error(ErrorCode::kConfig, "mock match needs 'exact' or 'regex'");
    }
  }
  return m;
}

MockScorer MockScorer::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read mock table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void MockScorer::add_exact(std::string prompt, std::vector<double> scores) {
  Rule r;
  r.exact = true;
  r.pattern = std::move(prompt);
  r.scores = std::move(scores);
  rules_.push_back(std::move(r));
}

void MockScorer::add_regex(const std::string& pattern, std::vector<double> scores) {
  Rule r;
  r.exact = false;
  r.pattern = pattern;
  try {
    r.re = std::regex(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kConfig, "bad mock regex '" + pattern + "': " + e.what());
  }
  r.scores = std::move(scores);
  rules_.push_back(std::move(r));
}

void MockScorer::set_default(std::vector<double> scores) {
  default_ = std::move(scores);
}

LabelDistribution MockScorer::score(const ScoreRequest& req) const {
  const std::vector<double>* hit = nullptr;
  for (const auto& rule : rules_) {
    const bool matched = rule.exact ? rule.pattern == req.prompt
                                    : std::regex_search(req.prompt, rule.re);
    if (matched) {
      hit = &rule.scores;
      break;
    }
  }
  if (!hit && default_) hit = &*default_;
  if (!hit) {
    throw Error(ErrorCode::kScoring, "mock table has no entry for prompt");
  }
  if (hit->size() != req.label_variants.size()) {
    throw Error(ErrorCode::kScoring,
                "mock entry has " + std::to_string(hit->size()) +
                    " scores for " + std::to_string(req.label_variants.size()) +
                    " labels");
  }
  return LabelDistribution(*hit);
}

// --- n-gram ---------------------------------------------------------------

NGramScorer NGramScorer::from_text(std::string_view corpus) {
  NGramScorer m;
  const auto words = split_words(corpus);
  if (words.empty()) throw Error(ErrorCode::kEmptyCorpus, "n-gram corpus is empty");
  for (std::size_t i = 0; i < words.size(); ++i) {
    ++m.unigram_[words[i]];
    if (i + 1 < words.size()) {
      ++m.history_[words[i]];
      ++m.bigram_[words[i]][words[i + 1]];
    }
  }
  m.tokens_ = words.size();
  return m;
}

std::size_t NGramScorer::vocab_size_with(std::span<const std::string> extra_words) const {
  std::size_t v = unigram_.size();
  std::set<std::string_view> added;
  for (const auto& w : extra_words) {
    if (!unigram_.contains(w) && added.insert(w).second) ++v;
  }
  return v;
}

double NGramScorer::conditional(std::string_view prev, std::string_view word,
                                std::size_t vocab_size) const {
  const std::string p(prev);
  const std::string w(word);
  const auto h = history_.find(p);
  const double v = static_cast<double>(vocab_size);
  if (h == history_.end()) {
    const auto u = unigram_.find(w);
    const double cw = u == unigram_.end() ? 0.0 : static_cast<double>(u->second);
    return (cw + 1.0) / (static_cast<double>(tokens_) + v);
  }
  double pair = 0.0;
  const auto& row = bigram_.at(p);
  if (auto it = row.find(w); it != row.end()) pair = static_cast<double>(it->second);
  return (pair + 1.0) / (static_cast<double>(h->second) + v);
}

LabelDistribution NGramScorer::score(const ScoreRequest& req) const {
  std::vector<std::vector<std::string>> label_words;
  std::vector<std::string> all_label_words;
  for (const auto& variant : req.label_variants) {
    auto words = split_words(variant);
    if (words.empty()) throw Error(ErrorCode::kScoring, "empty label variant");
    all_label_words.insert(all_label_words.end(), words.begin(), words.end());
    label_words.push_back(std::move(words));
  }
  const std::size_t v = vocab_size_with(all_label_words);
  const auto prompt_words = split_words(req.prompt);
  const std::string start = prompt_words.empty() ? std::string() : prompt_words.back();

  std::vector<double> scores;
  scores.reserve(label_words.size());
  for (const auto& words : label_words) {
    double logp = 0.0;
    std::string_view prev = start;
    for (const auto& w : words) {
      logp += std::log(conditional(prev, w, v));
      prev = w;
    }
    scores.push_back(std::exp(logp));
  }
  return LabelDistribution(std::move(scores));
}

NGramScorer ngram_train(const std::string& corpus_path, int order) {
  if (order != 2) throw Error(ErrorCode::kConfig, "only bigram (order 2) models are supported");
  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read corpus " + corpus_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return NGramScorer::from_text(ss.str());
}

// --- recording ------------------------------------------------------------

LabelDistribution RecordingScorer::score(const ScoreRequest& req) const {
  {
    std::lock_guard lock(mu_);
    log_.push_back(req.prompt);
  }
  return inner_.score(req);
}

std::vector<LabelDistribution> RecordingScorer::score_batch(
    std::span<const ScoreRequest> reqs) const {
  {
    std::lock_guard lock(mu_);
    for (const auto& r : reqs) log_.push_back(r.prompt);
  }
  return inner_.score_batch(reqs);
}

std::vector<std::string> RecordingScorer::prompts() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t RecordingScorer::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

void RecordingScorer::clear() {
  std::lock_guard lock(mu_);
  log_.clear();
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& cfg,
                                    std::string_view fallback_corpus) {
  cfg.validate();
  switch (cfg.backend) {
    case Backend::kMock:
      if (cfg.mock_table_path.empty()) {
        throw Error(ErrorCode::kConfig, "mock backend requires --mock-table");
      }
      return std::make_unique<MockScorer>(MockScorer::from_file(cfg.mock_table_path));
    case Backend::kNgram:
      if (!cfg.corpus_path.empty()) {
        return std::make_unique<NGramScorer>(ngram_train(cfg.corpus_path));
      }
      return std::make_unique<NGramScorer>(NGramScorer::from_text(fallback_corpus));
    case Backend::kHttp:
      return std::make_unique<HttpScorer>(cfg);
  }
  throw Error(ErrorCode::kConfig, "unknown backend");
}

}  // namespace icc
