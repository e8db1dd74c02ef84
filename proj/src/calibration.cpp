#include "icc/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "icc/error.hpp"

namespace icc {

void IccConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kConfig, "lambda must lie in [0, 1]");
  }
  if (shuffle_count < 1) throw Error(ErrorCode::kConfig, "shuffle count must be >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kConfig, "epsilon must be > 0");
}

const char* to_string(DcSource s) { return s == DcSource::kDemo ? "demo" : "test"; }

void DcConfig::validate() const {
  if (m_samples < 1) throw Error(ErrorCode::kConfig, "DC needs M >= 1");
}

WordBag WordBag::from_examples(std::span<const Example> examples) {
  WordBag bag;
  std::size_t texts = 0;
  for (const auto& e : examples) {
    for (const auto& [name, text] : e.fields) {
      auto words = split_words(text);
      ++texts;
      bag.words.insert(bag.words.end(), words.begin(), words.end());
    }
  }
  if (texts > 0) {
    const double avg = static_cast<double>(bag.words.size()) / static_cast<double>(texts);
    bag.sample_length = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(avg)));
  }
  return bag;
}

LabelDistribution score_prompt(const Scorer& scorer, const PromptTemplate& t,
                               const LabelSpace& ls, std::string prompt) {
  return scorer.score(make_score_request(std::move(prompt), t, ls));
}

CalibrationResult reuse_calibration(const LabelDistribution& vector,
                                    const LabelDistribution& raw, double epsilon) {
  if (vector.size() != raw.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "calibration vector has " + std::to_string(vector.size()) +
                    " entries, raw scores have " + std::to_string(raw.size()));
  }
  std::vector<double> calibrated(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    calibrated[j] = raw[j] / std::max(vector[j], epsilon);
  }
  CalibrationResult r;
  r.raw = raw;
  r.calibration_vector = vector;
  r.calibrated = LabelDistribution(std::move(calibrated));
  r.predicted = argmax(r.calibrated);
  return r;
}

namespace {

LabelDistribution raw_scores(const Scorer& scorer, const PromptTemplate& t,
                             const DemoSet& demos, const Example& query,
                             const LabelSpace& ls) {
  return score_prompt(scorer, t, ls, render_icl_prompt(t, demos, query, ls).text);
}

Example fill_fields(const PromptTemplate& t, std::string_view text) {
  Example e;
  for (const auto& name : t.field_names) e.fields[name] = std::string(text);
  return e;
}

}  // namespace

CalibrationResult original_inference(const Scorer& scorer, const PromptTemplate& t,
                                     const DemoSet& demos, const Example& query,
                                     const LabelSpace& ls) {
  const auto raw = raw_scores(scorer, t, demos, query, ls);
  return reuse_calibration(LabelDistribution::ones(raw.size()), raw);
}

LabelDistribution content_free_vector(const Scorer& scorer, const PromptTemplate& t,
                                      const DemoSet& demos, const LabelSpace& ls,
                                      std::string_view token) {
  const auto query = fill_fields(t, token);
  return score_prompt(scorer, t, ls, render_icl_prompt(t, demos, query, ls).text);
}

CalibrationResult contextual_calibration(const Scorer& scorer, const PromptTemplate& t,
                                         const DemoSet& demos, const Example& query,
                                         const LabelSpace& ls, std::string_view token,
                                         double epsilon) {
  const auto vec = content_free_vector(scorer, t, demos, ls, token);
  return reuse_calibration(vec, raw_scores(scorer, t, demos, query, ls), epsilon);
}

std::vector<Example> domain_calibration_queries(const PromptTemplate& t,
                                                const DcConfig& cfg,
                                                const WordBag& bag,
                                                const SeededRng& rng) {
  cfg.validate();
  if (bag.empty()) throw Error(ErrorCode::kEmptyBag, "domain calibration word bag is empty");
  std::vector<Example> queries;
  queries.reserve(cfg.m_samples);
  for (std::size_t r = 0; r < cfg.m_samples; ++r) {
    auto draw = rng.child(r);
    Example q;
    for (const auto& name : t.field_names) {
      std::vector<std::string> words;
      words.reserve(bag.sample_length);
      for (std::size_t w = 0; w < bag.sample_length; ++w) {
        words.push_back(bag.words[draw.uniform_index(bag.words.size())]);
      }
      q.fields[name] = join(words, " ");
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

LabelDistribution domain_calibration_vector(const Scorer& scorer, const PromptTemplate& t,
                                            const DemoSet& demos, const LabelSpace& ls,
                                            const DcConfig& cfg, const WordBag& bag,
                                            const SeededRng& rng) {
  const auto queries = domain_calibration_queries(t, cfg, bag, rng);
  std::vector<ScoreRequest> reqs;
  reqs.reserve(queries.size());
  for (const auto& q : queries) {
    reqs.push_back(make_score_request(render_icl_prompt(t, demos, q, ls).text, t, ls));
  }
  const auto scores = scorer.score_batch(reqs);
  return mean(scores);
}

CalibrationResult domain_calibration(const Scorer& scorer, const PromptTemplate& t,
                                     const DemoSet& demos, const Example& query,
                                     const LabelSpace& ls, const DcConfig& cfg,
                                     const WordBag& bag, const SeededRng& rng,
                                     double epsilon) {
  const auto vec = domain_calibration_vector(scorer, t, demos, ls, cfg, bag, rng);
  return reuse_calibration(vec, raw_scores(scorer, t, demos, query, ls), epsilon);
}

IccVector icc_calibration_vector(const Scorer& scorer, const PromptTemplate& t,
                                 const DemoSet& demos, const LabelSpace& ls,
                                 const IccConfig& cfg, const SeededRng& rng) {
  cfg.validate();
  const std::size_t k = demos.k();
  if (k < 1) throw Error(ErrorCode::kConfig, "in-context calibration needs K >= 1");
  const bool use_plain = cfg.lambda > 0.0;
  const bool use_shuffled = cfg.lambda < 1.0;

  // All prompts go out as one batch: K plain, then K * N shuffled.
  std::vector<ScoreRequest> reqs;
  if (use_plain) {
    for (std::size_t i = 0; i < k; ++i) {
      SeededRng unused = rng.child(i);
      reqs.push_back(make_score_request(
          render_leave_one_out(t, demos, i, false, unused, ls).text, t, ls));
    }
  }
  if (use_shuffled) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto per_demo = rng.child(i);
      for (std::size_t n = 0; n < cfg.shuffle_count; ++n) {
        auto stream = per_demo.child(n);
        reqs.push_back(make_score_request(
            render_leave_one_out(t, demos, i, true, stream, ls).text, t, ls));
      }
    }
  }
  const auto scores = scorer.score_batch(reqs);

  IccVector out;
  std::size_t cursor = 0;
  if (use_plain) {
    out.components.leave_one_out.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k));
    cursor = k;
  }
  if (use_shuffled) {
    for (std::size_t i = 0; i < k; ++i) {
      std::span<const LabelDistribution> draws(scores.data() + cursor, cfg.shuffle_count);
      out.components.shuffled.push_back(mean(draws));
      cursor += cfg.shuffle_count;
    }
  }

  std::vector<LabelDistribution> terms;
  terms.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!use_shuffled) {
      terms.push_back(out.components.leave_one_out[i]);
    } else if (!use_plain) {
      terms.push_back(out.components.shuffled[i]);
    } else {
      terms.push_back(cfg.lambda * out.components.leave_one_out[i] +
                      (1.0 - cfg.lambda) * out.components.shuffled[i]);
    }
  }
  out.vector = mean(terms);
  return out;
}

CalibrationResult icc_predict(const Scorer& scorer, const PromptTemplate& t,
                              const DemoSet& demos, const Example& query,
                              const LabelSpace& ls, const IccConfig& cfg,
                              const SeededRng& rng) {
  auto icc = icc_calibration_vector(scorer, t, demos, ls, cfg, rng);
  auto result = reuse_calibration(icc.vector, raw_scores(scorer, t, demos, query, ls),
                                  cfg.epsilon);
  result.components = std::move(icc.components);
  return result;
}

}  // namespace icc
