// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "icc/calibration.hpp"
#include "icc/cli.hpp"
#include "icc/dataset_io.hpp"
#include "icc/eval.hpp"
#include "icc/http_scorer.hpp"
#include "icc/prompting.hpp"
#include "icc/tasking.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"

namespace fs = std::filesystem;
using namespace icc;

namespace {

struct Failure {
  std::string what;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure{what};
}

PromptTemplate oracle_template() {
  return make_template(TemplateFamily::kSingleInput, oracle::kExampleBlock, {"input"},
                       oracle::kSeparator);
}

std::vector<std::string> make_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("l" + std::to_string(i));
  return out;
}

std::string random_text(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> len(lo, hi), word(0, 39);
  std::string s;
  const auto n = len(gen);
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(word(gen));
  return s;
}

struct Fixture {
  std::vector<oracle::Demo> demos;
  DemoSet set;
};

Fixture make_demos(std::mt19937_64& gen, std::size_t k, std::size_t n_labels,
                   std::size_t min_words = 3) {
  Fixture f;
  std::uniform_int_distribution<std::size_t> lab(0, n_labels - 1);
  for (std::size_t i = 0; i < k; ++i) {
    // Numbered lead word keeps every demo distinct.
    const std::string text = "d" + std::to_string(i) + " " + random_text(gen, min_words, 8);
    const auto label = lab(gen);
    f.demos.push_back({text, label});
    f.set.demos.push_back(Example{{{"input", text}}, label});
    f.set.source_indices.push_back(i);
  }
  return f;
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// --- 1 -------------------------------------------------------------------
void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(11);
  const std::size_t ks[] = {1, 2, 4, 8};
  const std::size_t ns[] = {2, 3, 6};
  const double lambdas[] = {0, 0.25, 0.5, 0.75, 1};
  const std::size_t shuffles[] = {1, 5, 10};
  const auto t = oracle_template();
  const oracle::HashScorer scorer;
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = ks[gen() % 4];
    const auto n = ns[gen() % 3];
    IccConfig cfg;
    cfg.lambda = lambdas[gen() % 5];
    cfg.shuffle_count = shuffles[gen() % 3];
    const auto labels = make_labels(n);
    const LabelSpace ls(labels);
    auto fx = make_demos(gen, k, n);
    const std::string query = random_text(gen, 3, 8);
    const auto rng = derive_rng(gen(), "shuffle");

    const auto got = icc_predict(scorer, t, fx.set, Example{{{"input", query}}, 0}, ls, cfg, rng);
    const auto want = oracle::icc(fx.demos, query, labels, cfg.lambda, cfg.shuffle_count, rng);
    for (std::size_t c = 0; c < n; ++c) {
      require(close(got.calibration_vector[c], want.vector[c], 1e-9),
              "trial " + std::to_string(trial) + ": vector mismatch");
      require(close(got.calibrated[c], want.calibrated[c], 1e-9),
              "trial " + std::to_string(trial) + ": calibrated mismatch");
    }
    require(got.predicted == want.predicted, "trial " + std::to_string(trial) + ": prediction mismatch");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(secs < 10.0, "took " + std::to_string(secs) + " s");
}

// --- 2 -------------------------------------------------------------------
void criterion_2() {
  std::mt19937_64 gen(22);
  const auto t = oracle_template();
  const oracle::HashScorer inner;
  for (std::size_t k : {1, 4, 8}) {
    const auto labels = make_labels(3);
    const LabelSpace ls(labels);
    auto fx = make_demos(gen, k, 3, 6);
    const auto rng = derive_rng(7, "shuffle");

    std::set<std::string> plain, shuffled;
    for (std::size_t i = 0; i < k; ++i) {
      plain.insert(oracle::loo_prompt(fx.demos, i, fx.demos[i].text, labels));
      for (std::size_t s = 0; s < 5; ++s) {
        shuffled.insert(oracle::loo_prompt(
            fx.demos, i, oracle::shuffle(fx.demos[i].text, rng.child(i).child(s)), labels));
      }
    }
    for (const auto& p : shuffled) require(!plain.count(p), "a shuffle reproduced its input");

    RecordingScorer rec(inner);
    IccConfig cfg;
    cfg.shuffle_count = 5;
    cfg.lambda = 1.0;
    const auto one = icc_calibration_vector(rec, t, fx.set, ls, cfg, rng);
    std::vector<double> sum(3, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const auto s = oracle::score_labels(oracle::loo_prompt(fx.demos, i, fx.demos[i].text, labels), labels);
      for (std::size_t c = 0; c < 3; ++c) sum[c] += s[c];
    }
    for (std::size_t c = 0; c < 3; ++c) {
      require(one.vector[c] == sum[c] / static_cast<double>(k), "lambda=1 vector is not mean_i(P_i)");
    }
    require(rec.calls() == k, "lambda=1 scored " + std::to_string(rec.calls()) + " prompts");
    for (const auto& p : rec.prompts()) {
      require(plain.count(p) && !shuffled.count(p), "lambda=1 scored a shuffled prompt");
    }

    rec.clear();
    cfg.lambda = 0.0;
    const auto zero = icc_calibration_vector(rec, t, fx.set, ls, cfg, rng);
    require(rec.calls() == k * 5, "lambda=0 scored " + std::to_string(rec.calls()) + " prompts");
    for (const auto& p : rec.prompts()) {
      require(shuffled.count(p) && !plain.count(p), "lambda=0 scored an unshuffled prompt");
    }
    std::vector<std::vector<double>> per_demo;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::vector<double>> draws;
      for (std::size_t s = 0; s < 5; ++s) {
        draws.push_back(oracle::score_labels(
            oracle::loo_prompt(fx.demos, i, oracle::shuffle(fx.demos[i].text, rng.child(i).child(s)), labels),
            labels));
      }
      per_demo.push_back(oracle::avg(draws));
    }
    const auto want = oracle::avg(per_demo);
    for (std::size_t c = 0; c < 3; ++c) {
      require(zero.vector[c] == want[c], "lambda=0 vector is not mean_i(P_R(i))");
    }
  }
}

// --- 3 -------------------------------------------------------------------
std::vector<std::string> split_blocks(const std::string& prompt) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = prompt.find(oracle::kSeparator, pos);
    out.push_back(prompt.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 2;
  }
  return out;
}

void criterion_3() {
  std::mt19937_64 gen(33);
  const auto t = oracle_template();
  const auto labels = make_labels(2);
  const LabelSpace ls(labels);
  auto fx = make_demos(gen, 8, 2);
  const oracle::HashScorer inner;
  RecordingScorer rec(inner);
  IccConfig cfg;
  cfg.lambda = 1.0;
  icc_calibration_vector(rec, t, fx.set, ls, cfg, derive_rng(0, "shuffle"));
  const auto prompts = rec.prompts();
  require(prompts.size() == 8, "expected 8 calibration prompts");

  std::vector<std::string> blocks_of;
  for (const auto& d : fx.demos) blocks_of.push_back(oracle::demo_block(d.text, labels[d.label]));
  std::set<std::size_t> excluded;
  for (const auto& p : prompts) {
    const auto blocks = split_blocks(p);
    require(blocks.size() == 8, "prompt does not hold 7 demos plus a query");
    std::vector<std::size_t> present;
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
      const auto it = std::find(blocks_of.begin(), blocks_of.end(), blocks[b]);
      require(it != blocks_of.end(), "unknown demo block");
      present.push_back(static_cast<std::size_t>(it - blocks_of.begin()));
    }
    require(std::is_sorted(present.begin(), present.end()), "demo order not preserved");
    require(std::set<std::size_t>(present.begin(), present.end()).size() == 7, "repeated demo");
    std::size_t missing = 0;
    while (std::find(present.begin(), present.end(), missing) != present.end()) ++missing;
    require(blocks.back() == oracle::query_block(fx.demos[missing].text),
            "query is not the excluded demo");
    excluded.insert(missing);
  }
  require(excluded.size() == 8, "exclusions do not cover every demo");
}

// --- 4 -------------------------------------------------------------------
void criterion_4() {
  std::mt19937_64 gen(44);
  for (int i = 0; i < 1000; ++i) {
    std::string s = random_text(gen, 0, 30);
    if (i % 3 == 0) s = "  " + s + "\t\n";
    auto rng = derive_rng(static_cast<std::uint64_t>(i), "shuffle");
    const auto out = shuffle_words(s, rng);
    require(oracle::multiset(out) == oracle::multiset(s), "word multiset changed");
    auto again = derive_rng(static_cast<std::uint64_t>(i), "shuffle");
    require(shuffle_words(s, again) == out, "shuffle not deterministic");
  }

  const auto t = oracle_template();
  const oracle::HashScorer inner;
  const auto labels = make_labels(3);
  const LabelSpace ls(labels);
  auto fx = make_demos(gen, 4, 3, 6);
  const auto rng = derive_rng(3, "shuffle");
  {
    RecordingScorer rec(inner);
    IccConfig cfg;  // default shuffle count
    cfg.lambda = 0.0;
    icc_calibration_vector(rec, t, fx.set, ls, cfg, rng);
    require(IccConfig{}.shuffle_count == 1, "default shuffle count is not 1");
    require(rec.calls() == 4, "default mode did not shuffle each demo exactly once");
  }
  for (std::size_t n : {5, 10}) {
    IccConfig cfg;
    cfg.lambda = 0.0;
    cfg.shuffle_count = n;
    const auto got = icc_calibration_vector(inner, t, fx.set, ls, cfg, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      std::vector<std::vector<double>> single;
      for (std::size_t s = 0; s < n; ++s) {
        auto stream = rng.child(i).child(s);
        const auto p = render_leave_one_out(t, fx.set, i, true, stream, ls).text;
        single.push_back(inner.score(make_score_request(p, t, ls)).scores());
      }
      const auto want = oracle::avg(single);
      for (std::size_t c = 0; c < 3; ++c) {
        require(got.components.shuffled[i][c] == want[c], "N-shuffle term is not the mean of singles");
      }
    }
  }
}

// --- 5 -------------------------------------------------------------------
void criterion_5() {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + gen() % 5;
    std::vector<double> raw;
    for (std::size_t c = 0; c < n; ++c) raw.push_back(u(gen));
    const LabelDistribution r(raw);
    const double level = 0.05 + u(gen);
    const auto res = reuse_calibration(LabelDistribution(std::vector<double>(n, level)), r);
    require(res.predicted == argmax(r), "uniform content-free vector changed the argmax");
  }

  const auto t = oracle_template();
  const auto labels = make_labels(3);
  const LabelSpace ls(labels);
  MockScorer constant;
  constant.set_default({0.2, 0.3, 0.1});
  auto fx = make_demos(gen, 4, 3);
  DcConfig dc;
  require(dc.m_samples == 20, "default M is not 20");
  const auto bag = WordBag::from_examples(fx.set.demos);
  const auto v = domain_calibration_vector(constant, t, fx.set, ls, dc, bag, derive_rng(1, "dc-sample"));
  require(v == LabelDistribution({0.2, 0.3, 0.1}), "DC of a constant scorer is not that constant");

  // Demo words and eval words come from disjoint vocabularies.
  Dataset ds("bags", LabelSpace({"a", "b"}), t);
  for (int i = 0; i < 12; ++i) {
    ds.train.push_back(Example{{{"input", "alpha" + std::to_string(i) + " beta gamma" + std::to_string(i % 3)}},
                               static_cast<std::size_t>(i % 2)});
  }
  for (int i = 0; i < 30; ++i) {
    ds.eval.push_back(Example{{{"input", "omega" + std::to_string(i) + " psi chi" + std::to_string(i % 4) + " rho"}},
                              static_cast<std::size_t>(i % 2)});
  }
  std::set<std::string> train_words, eval_words;
  for (const auto& e : ds.train) for (const auto& w : oracle::words(e.fields.at("input"))) train_words.insert(w);
  for (const auto& e : ds.eval) for (const auto& w : oracle::words(e.fields.at("input"))) eval_words.insert(w);

  for (auto method : {Method::kDcDemo, Method::kDcTest}) {
    RunConfig cfg;
    cfg.method = method;
    cfg.k = 4;
    const auto setup = prepare_seed(ds, cfg, 2);
    std::set<std::string> demo_words;
    for (const auto& e : setup.shown_demos.demos) {
      for (const auto& w : oracle::words(e.fields.at("input"))) demo_words.insert(w);
    }
    const oracle::HashScorer inner;
    RecordingScorer rec(inner);
    method_calibration_vector(rec, ds, cfg, setup);
    const auto prompts = rec.prompts();
    require(prompts.size() == 20, "DC did not score M=20 prompts");
    for (const auto& p : prompts) {
      const auto query = split_blocks(p).back();
      const auto text = query.substr(7, query.size() - 7 - 8);  // strip "Input: " and "\nLabel: "
      for (const auto& w : oracle::words(text)) {
        if (method == Method::kDcDemo) {
          require(demo_words.count(w) == 1, "dc-demo drew '" + w + "' outside the demonstrations");
        } else {
          require(eval_words.count(w) == 1, "dc-test drew '" + w + "' outside the eval split");
        }
      }
    }
  }
}

// --- 6 -------------------------------------------------------------------
void criterion_6() {
  std::mt19937_64 gen(66);
  std::uniform_real_distribution<double> u(0.0, 1.0), scale(0.001, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + gen() % 9;
    std::vector<double> raw, vec;
    for (std::size_t c = 0; c < n; ++c) {
      raw.push_back(u(gen));
      vec.push_back(0.01 + u(gen));
    }
    const double c = scale(gen);
    const LabelDistribution r(raw), v(vec);
    const auto base = reuse_calibration(v, r).predicted;
    require(reuse_calibration(v, c * r).predicted == base, "scaling raw changed the prediction");
    require(reuse_calibration(c * v, r).predicted == base, "scaling the vector changed the prediction");
  }
}

// --- 7 -------------------------------------------------------------------
void criterion_7() {
  for (std::size_t n = 2; n <= 10; ++n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
    const LabelSpace ls(names);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto rng = derive_rng(seed, "label-map");
      const auto sn = make_mapping(MappingKind::kStringNumber, ls, rng);
      std::set<std::string> want, got(sn.display.begin(), sn.display.end());
      for (std::size_t i = 0; i < n; ++i) want.insert(std::to_string(i));
      require(got == want && sn.display.size() == n, "string-number images are not {0..n-1}");

      auto rng2 = derive_rng(seed, "label-map");
      const auto sym = make_mapping(MappingKind::kSymbol, ls, rng2);
      std::set<std::string> seen;
      for (const auto& s : sym.display) {
        require(std::find(kSymbolTokens.begin(), kSymbolTokens.end(), s) != kSymbolTokens.end(),
                "symbol '" + s + "' is not in the fixed list");
        seen.insert(s);
      }
      require(seen.size() == n, "symbol images repeat");
    }
  }

  std::size_t samples = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + i % 9;
    auto rng = derive_rng(i, "label-map");
    const auto p = sample_derangement(n, rng);
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < n; ++j) {
      require(sorted[j] == j, "not a permutation");
      require(p[j] != j, "fixed point in derangement");
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < n; ++j) names.push_back("c" + std::to_string(j));
    auto rng2 = derive_rng(i, "label-map");
    const auto m = make_mapping(MappingKind::kPermutation, LabelSpace(names), rng2);
    for (std::size_t j = 0; j < n; ++j) require(m.permutation[j] != j, "mapping has a fixed point");
    ++samples;
  }
  require(samples == 10000, "sample count");

  const LabelSpace ag({"world", "sports", "business", "technology"});
  auto idx = [&](const char* s) { return *ag.index_of(s); };
  LabelMapping m;
  m.kind = MappingKind::kPermutation;
  m.permutation.resize(4);
  m.permutation[idx("sports")] = idx("world");
  m.permutation[idx("business")] = idx("technology");
  m.permutation[idx("technology")] = idx("sports");
  m.permutation[idx("world")] = idx("business");
  require(apply_mapping_to_eval(m, idx("technology")) == idx("sports"), "technology gold is not expected as sports");
  require(apply_mapping_to_eval(m, idx("sports")) == idx("world"), "sports gold is not expected as world");
  DemoSet demos;
  demos.demos = {Example{{{"input", "a"}}, idx("world")}, Example{{{"input", "b"}}, idx("business")}};
  const auto shown = apply_mapping_to_demos(m, demos);
  require(shown.demos[0].gold_label == idx("business") && shown.demos[1].gold_label == idx("technology"),
          "demo labels not permuted");
  require(m.displayed_space(ag) == ag, "permutation changed the displayed label strings");
}

// --- 8 -------------------------------------------------------------------
void criterion_8() {
  std::mt19937_64 gen(88);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + gen() % 6;
    const std::size_t len = 1 + gen() % 60;
    std::vector<std::size_t> gold, pred;
    for (std::size_t j = 0; j < len; ++j) {
      gold.push_back(gen() % n);
      pred.push_back(gen() % n);
    }
    require(close(macro_f1(gold, pred, n), oracle::macro_f1(gold, pred, n), 1e-12), "macro F1 mismatch");
  }
  const std::vector<std::size_t> g = {0, 0, 1, 1}, all0(4, 0);
  require(macro_f1(g, g, 2) == 1.0, "perfect predictions are not 1.0");
  require(close(macro_f1(g, all0, 2), 0.3333, 1e-4), "all-one-class binary is not 0.3333");
}

// --- 9 -------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_9() {
  const auto root = fs::temp_directory_path() / ("icc-accept-" + std::to_string(::getpid()));
  fs::create_directories(root);
  for (const char* ds : {"toy_sentiment", "toy_nli", "toy_topic"}) {
    std::vector<std::string> outputs;
    for (const char* run : {"a1", "b1", "c8"}) {
      const auto dir = root / (std::string(ds) + "-" + run);
      std::ostringstream out, err;
      const std::string workers = run[1] == '8' ? "8" : "1";
      const int rc = run_cli({"compare", "--methods", "original,cc,dc-demo,dc-test,icc", "--k", "8",
                              "--seeds", "5", "--backend", "ngram", "--dataset", ds,
                              "--workers", workers, "--out", dir.string()},
                             out, err);
      require(rc == 0, std::string(ds) + ": compare exited " + std::to_string(rc) + ": " + err.str());
      outputs.push_back(slurp(dir / "compare.json") + slurp(dir / "compare.csv"));
    }
    require(outputs[0] == outputs[1], std::string(ds) + ": repeated runs differ");
    require(outputs[0] == outputs[2], std::string(ds) + ": workers 1 vs 8 differ");

    const auto doc = nlohmann::json::parse(slurp(root / (std::string(ds) + "-a1") / "compare.json"));
    const auto& variants = doc.at("variants");
    require(variants.size() == 5, "expected five variants");
    for (std::size_t s = 0; s < 5; ++s) {
      const auto digest = variants[0].at("per_seed")[s].at("demo_digest");
      for (const auto& v : variants) {
        require(v.at("per_seed")[s].at("demo_digest") == digest, std::string(ds) + ": demo digests differ across methods");
      }
    }
  }
  fs::remove_all(root);
}

// --- 10 ------------------------------------------------------------------
void criterion_10() {
  stub::Server server;
  ScorerConfig cfg;
  cfg.backend = Backend::kHttp;
  cfg.endpoint_url = server.endpoint();
  cfg.model_name = "stub";
  cfg.max_in_flight = 4;
  cfg.retry_limit = 3;
  cfg.backoff_initial = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(5000);
  HttpScorer scorer(cfg);

  std::vector<ScoreRequest> reqs;
  for (int i = 0; i < 40; ++i) {
    reqs.push_back({"Review: item " + std::to_string(i) + "\nSentiment:", {" positive", " negative"}});
  }
  const auto got = scorer.score_batch(reqs);
  require(got.size() == reqs.size(), "batch size changed");
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      require(close(got[i][j], stub::single_token_score(reqs[i].prompt, reqs[i].label_variants[j]), 1e-12),
              "result " + std::to_string(i) + " out of order");
    }
  }
  require(server.injected() > 0, "no 500s were injected");
  require(scorer.attempts() == 80 + server.injected(), "each injected 500 was not retried exactly once");

  {
    HttpScorer fresh(cfg);
    bool threw = false;
    try {
      fresh.score({"FORBID this", {" a"}});
    } catch (const Error& e) {
      threw = e.code() == ErrorCode::kBackendUnavailable;
    }
    require(threw && fresh.attempts() == 1, "4xx was retried or not reported");
  }
  {
    auto limited = cfg;
    limited.max_in_flight = 1;
    HttpScorer fresh(limited);
    bool threw = false;
    try {
      fresh.score({"DOWN here", {" a"}});
    } catch (const Error& e) {
      threw = e.code() == ErrorCode::kBackendUnavailable;
    }
    require(threw && fresh.attempts() == 1 + cfg.retry_limit, "5xx retry budget not honored");
  }

  const auto ds = load_dataset(resolve_dataset_path("toy_sentiment", default_data_dir()));
  RunConfig run;
  run.method = Method::kIcc;
  run.k = 4;
  run.seeds = {0, 1};
  run.eval_cap = 16;
  run.backend = cfg;
  const auto report = run_evaluation(ds, run, scorer);
  require(!report.failed, "ICC evaluation failed: " + report.error);
  for (const auto& s : report.per_seed) {
    require(s.macro_f1 >= 0.0 && s.macro_f1 <= 1.0, "macro F1 outside [0,1]");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
      {"1 icc vector and prediction match brute-force oracle", criterion_1},
      {"2 lambda endpoints score only the needed prompts", criterion_2},
      {"3 leave-one-out prompt structure", criterion_3},
      {"4 shuffle contract", criterion_4},
      {"5 baseline fidelity (cc, dc)", criterion_5},
      {"6 argmax scale invariance", criterion_6},
      {"7 label-mode contracts", criterion_7},
      {"8 macro F1 oracle", criterion_8},
      {"9 protocol determinism", criterion_9},
      {"10 http backend contract", criterion_10},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    std::string detail;
    bool ok = true;
    try {
      fn();
    } catch (const Failure& f) {
      ok = false;
      detail = f.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %s%s%s\n", ok ? "PASS" : "FAIL", name, ok ? "" : ": ", detail.c_str());
    failed += ok ? 0 : 1;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
