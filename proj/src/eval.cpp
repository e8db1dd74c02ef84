#include "icc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "icc/dataset_io.hpp"
#include "icc/parallel.hpp"

namespace icc {

const char* to_string(DatasetFamily f) {
  switch (f) {
    case DatasetFamily::kSentiment: return "sentiment";
    case DatasetFamily::kNli: return "nli";
    case DatasetFamily::kDetection: return "detection";
    case DatasetFamily::kCustom: return "custom";
  }
  return "custom";
}

DatasetFamily parse_dataset_family(std::string_view name) {
  if (name == "sentiment") return DatasetFamily::kSentiment;
  if (name == "nli") return DatasetFamily::kNli;
  if (name == "detection") return DatasetFamily::kDetection;
  if (name == "custom") return DatasetFamily::kCustom;
  throw Error(ErrorCode::kDataset, "unknown dataset family '" + std::string(name) + "'");
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kOriginal: return "original";
    case Method::kCc: return "cc";
    case Method::kDcDemo: return "dc-demo";
    case Method::kDcTest: return "dc-test";
    case Method::kIcc: return "icc";
  }
  return "original";
}

Method parse_method(std::string_view name) {
  if (name == "original") return Method::kOriginal;
  if (name == "cc") return Method::kCc;
  if (name == "dc-demo") return Method::kDcDemo;
  if (name == "dc-test") return Method::kDcTest;
  if (name == "icc") return Method::kIcc;
  throw Error(ErrorCode::kConfig, "unknown method '" + std::string(name) + "'");
}

ValidationResult validate_dataset(const Dataset& ds) {
  ValidationResult all;
  auto check = [&](const std::vector<Example>& split, const char* name) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      for (auto& v : validate_example(split[i], ds.prompt_template, ds.label_space).violations) {
        all.violations.push_back(std::string(name) + "[" + std::to_string(i) + "]: " + v);
      }
    }
  };
  check(ds.train, "train");
  check(ds.eval, "eval");
  if (ds.train.empty()) all.violations.push_back("train split is empty");
  if (ds.eval.empty()) all.violations.push_back("eval split is empty");
  return all;
}

void RunConfig::validate() const {
  if (seeds.empty()) throw Error(ErrorCode::kConfig, "at least one seed is required");
  if (eval_cap < 1) throw Error(ErrorCode::kConfig, "eval cap must be >= 1");
  if (workers < 1) throw Error(ErrorCode::kConfig, "workers must be >= 1");
  icc.validate();
  dc.validate();
  if (method == Method::kIcc && k < 1) {
    throw Error(ErrorCode::kConfig, "in-context calibration needs K >= 1");
  }
  if (method == Method::kDcDemo && k < 1) {
    throw Error(ErrorCode::kConfig, "dc-demo needs K >= 1 to build its word bag");
  }
  backend.validate();
}

void validate_run(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  if (cfg.label_mode == MappingKind::kSymbol && ds.label_space.size() > kSymbolTokens.size()) {
    throw Error(ErrorCode::kTooManyLabels,
                "symbol mode supports at most 10 labels (dataset '" + ds.name + "' has " +
                    std::to_string(ds.label_space.size()) + ")");
  }
  if (ds.train.size() < cfg.k) {
    throw Error(ErrorCode::kInsufficientTrain,
                "train split has " + std::to_string(ds.train.size()) +
                    " examples, K=" + std::to_string(cfg.k));
  }
  if (ds.eval.empty()) throw Error(ErrorCode::kDataset, "eval split is empty");
}

DemoSet sample_demos(const Dataset& ds, std::size_t k, SeededRng& rng, bool balanced) {
  const std::size_t n = ds.train.size();
  if (n < k) {
    throw Error(ErrorCode::kInsufficientTrain,
                "cannot sample " + std::to_string(k) + " demos from " +
                    std::to_string(n) + " train examples");
  }
  DemoSet out;
  out.sample_seed = rng.seed();
  if (!balanced) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
      std::swap(idx[i], idx[j]);
      out.source_indices.push_back(idx[i]);
    }
  } else {
    std::vector<std::vector<std::size_t>> by_class(ds.label_space.size());
    for (std::size_t i = 0; i < n; ++i) by_class.at(ds.train[i].gold_label).push_back(i);
    for (auto& bucket : by_class) fisher_yates(bucket, rng);
    std::vector<std::size_t> cursor(by_class.size(), 0);
    while (out.source_indices.size() < k) {
      for (std::size_t c = 0; c < by_class.size() && out.source_indices.size() < k; ++c) {
        if (cursor[c] < by_class[c].size()) out.source_indices.push_back(by_class[c][cursor[c]++]);
      }
    }
    fisher_yates(out.source_indices, rng);
  }
  for (std::size_t i : out.source_indices) out.demos.push_back(ds.train[i]);
  return out;
}

std::vector<Example> cap_eval_split(const Dataset& ds, std::size_t cap, SeededRng& rng) {
  if (cap < 1) throw Error(ErrorCode::kConfig, "eval cap must be >= 1");
  const std::size_t n = ds.eval.size();
  if (n <= cap) return ds.eval;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cap; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  std::vector<Example> out;
  out.reserve(cap);
  for (std::size_t i : idx) out.push_back(ds.eval[i]);
  return out;
}

double macro_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                std::size_t n_labels) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::kLengthMismatch, "gold and prediction lists differ in length");
  }
  if (gold.empty()) throw Error(ErrorCode::kInvariant, "macro F1 of an empty list");
  std::vector<std::size_t> tp(n_labels, 0), fp(n_labels, 0), fn(n_labels, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= n_labels || pred[i] >= n_labels) {
      throw Error(ErrorCode::kIndex, "label index out of range in macro F1");
    }
    if (gold[i] == pred[i]) {
      ++tp[gold[i]];
    } else {
      ++fp[pred[i]];
      ++fn[gold[i]];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < n_labels; ++c) {
    // F1 = 2TP / (2TP + FP + FN); zero when the denominator vanishes.
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    if (denom > 0.0) total += 2.0 * tp[c] / denom;
  }
  return total / static_cast<double>(n_labels);
}

std::pair<double, double> mean_std(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double m = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - m) * (x - m);
  return {m, std::sqrt(sq / static_cast<double>(xs.size()))};
}

std::string digest_of(const LabelDistribution& d) {
  std::string text;
  char buf[40];
  for (double v : d.scores()) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    text += buf;
  }
  return hex64(fnv1a64(text));
}

std::string digest_of(const DemoSet& demos) {
  std::string text;
  for (std::size_t i = 0; i < demos.k(); ++i) {
    if (i < demos.source_indices.size()) text += std::to_string(demos.source_indices[i]);
    text += '\x1f';
    for (const auto& [name, value] : demos.demos[i].fields) {
      text += name;
      text += '\x1e';
      text += value;
      text += '\x1e';
    }
    text += std::to_string(demos.demos[i].gold_label);
    text += '\x1d';
  }
  return hex64(fnv1a64(text));
}

SeedSetup prepare_seed(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed) {
  SeedSetup s;
  s.seed = seed;
  auto cap_rng = derive_rng(seed, "eval-cap");
  s.eval_split = cap_eval_split(ds, cfg.eval_cap, cap_rng);
  auto demo_rng = derive_rng(seed, "demo-sample");
  s.demos = sample_demos(ds, cfg.k, demo_rng, cfg.balanced);
  auto map_rng = derive_rng(seed, "label-map");
  s.mapping = make_mapping(cfg.label_mode, ds.label_space, map_rng, cfg.allow_fixed_points);
  s.shown_demos = apply_mapping_to_demos(s.mapping, s.demos);
  s.displayed_labels = s.mapping.displayed_space(ds.label_space).labels();
  s.expected.reserve(s.eval_split.size());
  for (const auto& e : s.eval_split) s.expected.push_back(apply_mapping_to_eval(s.mapping, e.gold_label));
  return s;
}

MethodVector method_calibration_vector(const Scorer& scorer, const Dataset& ds,
                                       const RunConfig& cfg, const SeedSetup& setup) {
  const LabelSpace shown(setup.displayed_labels);
  const auto& t = ds.prompt_template;
  MethodVector out;
  switch (cfg.method) {
    case Method::kOriginal:
      out.vector = LabelDistribution::ones(shown.size());
      break;
    case Method::kCc:
      out.vector = content_free_vector(scorer, t, setup.shown_demos, shown);
      break;
    case Method::kDcDemo:
    case Method::kDcTest: {
      const auto bag = cfg.method == Method::kDcDemo
                           ? WordBag::from_examples(setup.shown_demos.demos)
                           : WordBag::from_examples(setup.eval_split);
      DcConfig dc = cfg.dc;
      dc.source = cfg.method == Method::kDcDemo ? DcSource::kDemo : DcSource::kTest;
      out.vector = domain_calibration_vector(scorer, t, setup.shown_demos, shown, dc, bag,
                                             derive_rng(setup.seed, "dc-sample"));
      out.dc_sample_length = bag.sample_length;
      break;
    }
    case Method::kIcc: {
      auto icc = icc_calibration_vector(scorer, t, setup.shown_demos, shown, cfg.icc,
                                        derive_rng(setup.seed, "shuffle"));
      out.vector = std::move(icc.vector);
      out.components = std::move(icc.components);
      break;
    }
  }
  return out;
}

namespace {

SeedResult run_seed(const Dataset& ds, const RunConfig& cfg, const Scorer& scorer,
                    std::uint64_t seed) {
  const auto setup = prepare_seed(ds, cfg, seed);
  const LabelSpace shown(setup.displayed_labels);
  const auto& t = ds.prompt_template;
  auto vec = method_calibration_vector(scorer, ds, cfg, setup);

  std::vector<ScoreRequest> reqs;
  reqs.reserve(setup.eval_split.size());
  for (const auto& e : setup.eval_split) {
    reqs.push_back(make_score_request(render_icl_prompt(t, setup.shown_demos, e, shown).text,
                                      t, shown));
  }

  // Contiguous chunks, one per worker; every chunk writes its own slots.
  std::vector<LabelDistribution> raw(reqs.size());
  const std::size_t chunks = std::max<std::size_t>(1, std::min(cfg.workers, reqs.size()));
  const std::size_t per = (reqs.size() + chunks - 1) / chunks;
  parallel_for(chunks, chunks, [&](std::size_t c) {
    const std::size_t begin = c * per;
    const std::size_t end = std::min(reqs.size(), begin + per);
    if (begin >= end) return;
    auto part = scorer.score_batch(std::span<const ScoreRequest>(reqs).subspan(begin, end - begin));
    std::move(part.begin(), part.end(), raw.begin() + static_cast<std::ptrdiff_t>(begin));
  });

  SeedResult r;
  r.seed = seed;
  r.n_eval = setup.eval_split.size();
  r.mapping = setup.mapping;
  r.displayed_labels = setup.displayed_labels;
  r.demo_digest = digest_of(setup.demos);
  r.demo_indices = setup.demos.source_indices;
  r.expected = setup.expected;
  r.predictions.reserve(raw.size());
  for (const auto& scores : raw) {
    r.predictions.push_back(reuse_calibration(vec.vector, scores, cfg.icc.epsilon).predicted);
  }
  r.macro_f1 = macro_f1(r.expected, r.predictions, shown.size());
  r.calibration_vector_digest = digest_of(vec.vector);
  r.calibration_vector = std::move(vec.vector);
  r.dc_sample_length = vec.dc_sample_length;
  r.components = std::move(vec.components);
  return r;
}

}  // namespace

EvalReport run_evaluation(const Dataset& ds, const RunConfig& cfg, const Scorer& scorer) {
  validate_run(ds, cfg);
  EvalReport report;
  report.dataset = ds.name;
  report.variant = to_string(cfg.method);
  report.config = cfg;
  report.backend_mode = scorer.mode();
  for (auto seed : cfg.seeds) {
    try {
      report.per_seed.push_back(run_seed(ds, cfg, scorer, seed));
    } catch (const Error& e) {
      report.failed = true;
      report.failed_seed = seed;
      report.error_code = e.code();
      report.error = e.what();
      break;
    }
  }
  std::vector<double> f1s;
  for (const auto& s : report.per_seed) f1s.push_back(s.macro_f1);
  std::tie(report.mean, report.std) = mean_std(f1s);
  return report;
}

EvalReport run_evaluation(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  const auto scorer = make_scorer(cfg.backend, default_corpus(ds));
  return run_evaluation(ds, cfg, *scorer);
}

}  // namespace icc
