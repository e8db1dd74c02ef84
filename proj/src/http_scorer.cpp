#include "icc/http_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "icc/error.hpp"
#include "icc/parallel.hpp"

namespace icc {

using json = nlohmann::json;

namespace {

std::string excerpt(std::string_view prompt) {
  constexpr std::size_t kMax = 80;
  std::string out(prompt.substr(0, kMax));
  if (prompt.size() > kMax) out += "...";
  for (char& c : out) {
    if (c == '\n') c = ' ';
  }
  return out;
}

}  // namespace

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

json build_echo_body(std::string_view model, std::string_view prompt,
                     std::string_view label) {
  return json{{"model", model},
              {"prompt", std::string(prompt) + std::string(label)},
              {"max_tokens", 0},
              {"echo", true},
              {"logprobs", 1},
              {"temperature", 0}};
}

json build_top_logprobs_body(std::string_view model, std::string_view prompt,
                             std::size_t top_n) {
  return json{{"model", model},       {"prompt", prompt},
              {"max_tokens", 1},      {"echo", false},
              {"logprobs", top_n},    {"temperature", 0}};
}

double sum_label_logprobs(const json& response, std::size_t prompt_chars,
                          std::size_t total_chars) {
  try {
    const auto& lp = response.at("choices").at(0).at("logprobs");
    const auto& tokens = lp.at("tokens");
    const auto& logprobs = lp.at("token_logprobs");
    const auto& offsets = lp.at("text_offset");
    if (tokens.size() != logprobs.size() || tokens.size() != offsets.size()) {
      throw Error(ErrorCode::kScoring, "logprob arrays differ in length");
    }
    double sum = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto start = offsets[i].get<std::size_t>();
      const std::size_t end =
          i + 1 < tokens.size()
              ? offsets[i + 1].get<std::size_t>()
              : start + utf8_length(tokens[i].get<std::string>());
      if (end <= prompt_chars || start >= total_chars) continue;
      if (logprobs[i].is_null()) {
        throw Error(ErrorCode::kScoring, "label token has no logprob");
      }
      const double v = logprobs[i].get<double>();
      if (std::isnan(v) || v > 0.0) {
        throw Error(ErrorCode::kScoring, "invalid token logprob");
      }
      sum += v;
      any = true;
    }
    if (!any) throw Error(ErrorCode::kScoring, "no label tokens in echoed response");
    return sum;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kScoring, std::string("malformed completion: ") + e.what());
  }
}

std::vector<double> read_top_logprobs(const json& response,
                                      std::span<const std::string> variants) {
  try {
    const auto& top = response.at("choices").at(0).at("logprobs")
                          .at("top_logprobs").at(0);
    if (!top.is_object()) throw Error(ErrorCode::kScoring, "top_logprobs[0] is not an object");
    std::vector<double> out;
    out.reserve(variants.size());
    for (const auto& variant : variants) {
      const auto want = trim(variant);
      double p = 0.0;
      for (auto it = top.begin(); it != top.end(); ++it) {
        if (it.key() == variant || trim(it.key()) == want) {
          const double v = it.value().get<double>();
          if (std::isnan(v)) throw Error(ErrorCode::kScoring, "NaN logprob");
          p += std::exp(v);
        }
      }
      out.push_back(p);
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kScoring, std::string("malformed completion: ") + e.what());
  }
}

HttpScorer::HttpScorer(ScorerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto& url = cfg_.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfig, "endpoint must start with http:// or https://");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kConfig, "unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  std::string base = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  path_ = base + "/completions";
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
    api_key_ = key;
  }
}

std::string HttpScorer::mode() const {
  return std::string("http-") + to_string(cfg_.http_mode);
}

json HttpScorer::post(const json& body) const {
  const std::string payload = body.dump();
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= cfg_.retry_limit; ++attempt) {
    if (attempt > 0) {
      const auto shift = std::min<std::size_t>(attempt - 1, 16);
      const auto delay = std::min<std::chrono::milliseconds>(
          cfg_.backoff_initial * (std::int64_t{1} << shift), std::chrono::milliseconds(30000));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(host_);
    const auto secs = cfg_.timeout.count() / 1000;
    const auto usecs = (cfg_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    ++attempts_;
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kBackendUnavailable,
                  "HTTP " + std::to_string(res->status) + " from " + host_ + path_ +
                      " (not retried): " + excerpt(res->body));
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kScoring, std::string("response is not JSON: ") + e.what());
    }
  }
  throw Error(ErrorCode::kBackendUnavailable,
              host_ + path_ + " failed after " + std::to_string(cfg_.retry_limit + 1) +
                  " attempts: " + last_error);
}

double HttpScorer::label_log_prob(const std::string& prompt,
                                  const std::string& label) const {
  try {
    const auto response = post(build_echo_body(cfg_.model_name, prompt, label));
    return sum_label_logprobs(response, utf8_length(prompt),
                              utf8_length(prompt) + utf8_length(label));
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " [prompt: " + excerpt(prompt) + "]");
  }
}

std::vector<double> HttpScorer::top_logprob_scores(const ScoreRequest& req) const {
  for (const auto& v : req.label_variants) {
    if (split_words(v).size() != 1) {
      throw Error(ErrorCode::kConfig,
                  "top-logprobs mode supports single-token labels only; got '" + v + "'");
    }
  }
  try {
    const auto response =
        post(build_top_logprobs_body(cfg_.model_name, req.prompt, cfg_.top_logprobs));
    return read_top_logprobs(response, req.label_variants);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(e.code(), std::string(e.what()) + " [prompt: " + excerpt(req.prompt) + "]");
  }
}

LabelDistribution HttpScorer::score(const ScoreRequest& req) const {
  return score_batch(std::span<const ScoreRequest>(&req, 1)).front();
}

std::vector<LabelDistribution> HttpScorer::score_batch(
    std::span<const ScoreRequest> reqs) const {
  std::vector<std::vector<double>> raw(reqs.size());
  if (cfg_.http_mode == HttpMode::kTopLogprobs) {
    parallel_for(reqs.size(), cfg_.max_in_flight,
                 [&](std::size_t i) { raw[i] = top_logprob_scores(reqs[i]); });
  } else {
    std::vector<std::pair<std::size_t, std::size_t>> units;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      raw[i].assign(reqs[i].label_variants.size(), 0.0);
      for (std::size_t j = 0; j < reqs[i].label_variants.size(); ++j) {
        units.emplace_back(i, j);
      }
    }
    // Each unit writes its own slot, so completion order cannot reorder
    // results.
    parallel_for(units.size(), cfg_.max_in_flight, [&](std::size_t u) {
      const auto [i, j] = units[u];
      raw[i][j] = std::exp(label_log_prob(reqs[i].prompt, reqs[i].label_variants[j]));
    });
  }
  std::vector<LabelDistribution> out;
  out.reserve(raw.size());
  for (auto& r : raw) out.emplace_back(std::move(r));
  return out;
}

}  // namespace icc
