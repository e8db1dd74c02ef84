#include "icc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "icc/calibration.hpp"
#include "icc/dataset_io.hpp"
#include "icc/error.hpp"
#include "icc/eval.hpp"
#include "icc/report.hpp"
#include "icc/scorer.hpp"

namespace icc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string dataset;
  std::string data_dir;
  std::string template_path;
  std::string method;
  std::string methods;
  double lambda = 0.5;
  std::string lambda_grid;
  std::size_t shuffles = 1;
  std::size_t m = 20;
  std::size_t k = 8;
  std::string seeds;
  std::string label_mode;
  bool allow_fixed_points = false;
  bool balanced = false;
  std::size_t eval_cap = 500;
  double epsilon = kDefaultEpsilon;
  std::string backend;
  std::string endpoint;
  std::string model;
  std::string api_key_env;
  std::size_t max_in_flight = 4;
  std::size_t retry_limit = 3;
  long timeout_ms = 30000;
  long backoff_ms = 200;
  std::string http_mode;
  std::size_t top_logprobs = 5;
  std::string corpus;
  std::string mock_table;
  std::size_t workers = 1;
  std::string out;
  bool audit = false;
  std::size_t index = 0;
  std::string prompt;

  // Registered options by long name, to tell "given" from "defaulted".
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

// Settings resolved from config file and flags, beyond RunConfig itself.
struct Effective {
  RunConfig run;
  std::string dataset;
  std::string data_dir;
  std::string template_path;
  std::vector<Method> methods;
  std::vector<double> lambda_grid;
  std::string out = "icc-out";
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = std::string(trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, std::string("invalid ") + what + " '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, std::string("invalid ") + what + " '" + s + "'");
  }
}

// "5" means seeds 0..4; "0,3,7" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  if (s.find(',') == std::string::npos) {
    const auto n = parse_u64(std::string(trim(s)), "seed count");
    if (n == 0) throw Error(ErrorCode::kConfig, "--seeds must be at least 1");
    for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(i);
  } else {
    for (const auto& item : split_list(s)) seeds.push_back(parse_u64(item, "seed"));
  }
  return seeds;
}

std::vector<std::uint64_t> seeds_from_json(const json& j) {
  if (j.is_number_unsigned()) return parse_seeds(std::to_string(j.get<std::uint64_t>()));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : j) seeds.push_back(s.get<std::uint64_t>());
  return seeds;
}

std::string config_path(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  const auto candidate = base / p;
  return fs::exists(candidate) ? candidate.lexically_normal().string() : p;
}

void check_keys(const json& section, const char* name, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : section.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw Error(ErrorCode::kConfig,
                  std::string("unknown key '") + key + "' in config section [" + name + "]");
    }
  }
}

// Config file layout: {"run": {...}, "icc": {...}, "dc": {...},
// "backend": {...}}; keys match the long flag names with '_' for '-'.
void apply_config_file(const std::string& path, Effective& eff) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path);
  json doc;
  try {
    doc = json::parse(in);
    check_keys(doc, "top", {"run", "icc", "dc", "backend"});
    const fs::path base = fs::path(path).parent_path();
    auto& run = eff.run;
    if (doc.contains("run")) {
      const auto& r = doc["run"];
      check_keys(r, "run", {"dataset", "data_dir", "template", "method", "methods", "k", "seeds",
                            "label_mode", "allow_fixed_points", "balanced", "eval_cap",
                            "workers", "out", "lambda_grid", "audit"});
      if (r.contains("dataset")) eff.dataset = config_path(base, r["dataset"].get<std::string>());
      if (r.contains("data_dir")) eff.data_dir = config_path(base, r["data_dir"].get<std::string>());
      if (r.contains("template")) eff.template_path = config_path(base, r["template"].get<std::string>());
      if (r.contains("method")) run.method = parse_method(r["method"].get<std::string>());
      if (r.contains("methods")) {
        eff.methods.clear();
        for (const auto& m : r["methods"]) eff.methods.push_back(parse_method(m.get<std::string>()));
      }
      if (r.contains("k")) run.k = r["k"].get<std::size_t>();
      if (r.contains("seeds")) run.seeds = seeds_from_json(r["seeds"]);
      if (r.contains("label_mode")) run.label_mode = parse_label_mode(r["label_mode"].get<std::string>());
      if (r.contains("allow_fixed_points")) run.allow_fixed_points = r["allow_fixed_points"].get<bool>();
      if (r.contains("balanced")) run.balanced = r["balanced"].get<bool>();
      if (r.contains("eval_cap")) run.eval_cap = r["eval_cap"].get<std::size_t>();
      if (r.contains("workers")) run.workers = r["workers"].get<std::size_t>();
      if (r.contains("audit")) run.audit = r["audit"].get<bool>();
      if (r.contains("out")) eff.out = r["out"].get<std::string>();
      if (r.contains("lambda_grid")) eff.lambda_grid = r["lambda_grid"].get<std::vector<double>>();
    }
    if (doc.contains("icc")) {
      const auto& c = doc["icc"];
      check_keys(c, "icc", {"lambda", "shuffles", "epsilon"});
      if (c.contains("lambda")) run.icc.lambda = c["lambda"].get<double>();
      if (c.contains("shuffles")) run.icc.shuffle_count = c["shuffles"].get<std::size_t>();
      if (c.contains("epsilon")) run.icc.epsilon = c["epsilon"].get<double>();
    }
    if (doc.contains("dc")) {
      const auto& c = doc["dc"];
      check_keys(c, "dc", {"m"});
      if (c.contains("m")) run.dc.m_samples = c["m"].get<std::size_t>();
    }
    if (doc.contains("backend")) {
      const auto& b = doc["backend"];
      check_keys(b, "backend", {"backend", "endpoint", "model", "api_key_env", "max_in_flight",
                                "retry_limit", "timeout_ms", "backoff_ms", "http_mode",
                                "top_logprobs", "corpus", "mock_table"});
      auto& sc = run.backend;
      if (b.contains("backend")) sc.backend = parse_backend(b["backend"].get<std::string>());
      if (b.contains("endpoint")) sc.endpoint_url = b["endpoint"].get<std::string>();
      if (b.contains("model")) sc.model_name = b["model"].get<std::string>();
      if (b.contains("api_key_env")) sc.api_key_env = b["api_key_env"].get<std::string>();
      if (b.contains("max_in_flight")) sc.max_in_flight = b["max_in_flight"].get<std::size_t>();
      if (b.contains("retry_limit")) sc.retry_limit = b["retry_limit"].get<std::size_t>();
      if (b.contains("timeout_ms")) sc.timeout = std::chrono::milliseconds(b["timeout_ms"].get<long>());
      if (b.contains("backoff_ms")) sc.backoff_initial = std::chrono::milliseconds(b["backoff_ms"].get<long>());
      if (b.contains("http_mode")) sc.http_mode = parse_http_mode(b["http_mode"].get<std::string>());
      if (b.contains("top_logprobs")) sc.top_logprobs = b["top_logprobs"].get<std::size_t>();
      if (b.contains("corpus")) sc.corpus_path = config_path(base, b["corpus"].get<std::string>());
      if (b.contains("mock_table")) sc.mock_table_path = config_path(base, b["mock_table"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
}

void apply_flags(const Options& o, Effective& eff) {
  auto& run = eff.run;
  auto& sc = run.backend;
  if (o.given("--dataset")) eff.dataset = o.dataset;
  if (o.given("--data-dir")) eff.data_dir = o.data_dir;
  if (o.given("--template")) eff.template_path = o.template_path;
  if (o.given("--method")) run.method = parse_method(o.method);
  if (o.given("--methods")) {
    eff.methods.clear();
    for (const auto& m : split_list(o.methods)) eff.methods.push_back(parse_method(m));
  }
  if (o.given("--lambda")) run.icc.lambda = o.lambda;
  if (o.given("--lambda-grid")) {
    eff.lambda_grid.clear();
    for (const auto& v : split_list(o.lambda_grid)) eff.lambda_grid.push_back(parse_double(v, "lambda"));
  }
  if (o.given("--shuffles")) run.icc.shuffle_count = o.shuffles;
  if (o.given("--epsilon")) run.icc.epsilon = o.epsilon;
  if (o.given("--m")) run.dc.m_samples = o.m;
  if (o.given("--k")) run.k = o.k;
  if (o.given("--seeds")) run.seeds = parse_seeds(o.seeds);
  if (o.given("--label-mode")) run.label_mode = parse_label_mode(o.label_mode);
  if (o.given("--allow-fixed-points")) run.allow_fixed_points = o.allow_fixed_points;
  if (o.given("--balanced")) run.balanced = o.balanced;
  if (o.given("--eval-cap")) run.eval_cap = o.eval_cap;
  if (o.given("--workers")) run.workers = o.workers;
  if (o.given("--audit")) run.audit = o.audit;
  if (o.given("--out")) eff.out = o.out;
  if (o.given("--backend")) sc.backend = parse_backend(o.backend);
  if (o.given("--endpoint")) sc.endpoint_url = o.endpoint;
  if (o.given("--model")) sc.model_name = o.model;
  if (o.given("--api-key-env")) sc.api_key_env = o.api_key_env;
  if (o.given("--max-in-flight")) sc.max_in_flight = o.max_in_flight;
  if (o.given("--retry-limit")) sc.retry_limit = o.retry_limit;
  if (o.given("--timeout-ms")) sc.timeout = std::chrono::milliseconds(o.timeout_ms);
  if (o.given("--backoff-ms")) sc.backoff_initial = std::chrono::milliseconds(o.backoff_ms);
  if (o.given("--http-mode")) sc.http_mode = parse_http_mode(o.http_mode);
  if (o.given("--top-logprobs")) sc.top_logprobs = o.top_logprobs;
  if (o.given("--corpus")) sc.corpus_path = o.corpus;
  if (o.given("--mock-table")) sc.mock_table_path = o.mock_table;
}

void add_common(CLI::App* app, Options& o) {
  auto add = [&](const std::string& name, auto& target, const std::string& help) {
    o.opts[name] = app->add_option(name, target, help);
  };
  auto flag = [&](const std::string& name, bool& target, const std::string& help) {
    o.opts[name] = app->add_flag(name, target, help);
  };
  add("--config", o.config, "JSON config file with run/icc/dc/backend sections");
  add("--dataset", o.dataset, "dataset name (under --data-dir) or metadata file path");
  add("--data-dir", o.data_dir, "directory holding bundled datasets");
  add("--template", o.template_path, "override the dataset's template file");
  add("--method", o.method, "original | cc | dc-demo | dc-test | icc");
  add("--lambda", o.lambda, "ICC blend weight in [0,1]");
  add("--shuffles", o.shuffles, "shuffles averaged per demonstration for P_R(i)");
  add("--epsilon", o.epsilon, "denominator floor");
  add("--m", o.m, "domain-calibration sample count");
  add("--k", o.k, "demonstrations per prompt");
  add("--seeds", o.seeds, "seed count N (seeds 0..N-1) or comma list");
  add("--label-mode", o.label_mode, "original | string-number | symbol | permuted");
  flag("--allow-fixed-points", o.allow_fixed_points, "permuted mode: allow labels mapped to themselves");
  flag("--balanced", o.balanced, "class-balanced demonstration sampling");
  add("--eval-cap", o.eval_cap, "maximum eval examples per seed");
  add("--backend", o.backend, "mock | ngram | http");
  add("--endpoint", o.endpoint, "completions base URL (http backend)");
  add("--model", o.model, "model name (http backend)");
  add("--api-key-env", o.api_key_env, "environment variable holding the API key");
  add("--max-in-flight", o.max_in_flight, "concurrent HTTP requests");
  add("--retry-limit", o.retry_limit, "retries on transport errors and 5xx");
  add("--timeout-ms", o.timeout_ms, "HTTP timeout");
  add("--backoff-ms", o.backoff_ms, "initial retry backoff");
  add("--http-mode", o.http_mode, "echo | top-logprobs");
  add("--top-logprobs", o.top_logprobs, "alternatives requested in top-logprobs mode");
  add("--corpus", o.corpus, "n-gram training text");
  add("--mock-table", o.mock_table, "mock scorer table (JSON)");
  add("--workers", o.workers, "parallel prediction workers");
  add("--out", o.out, "output directory");
  flag("--audit", o.audit, "dump per-demonstration calibration components");
}

Effective resolve(const Options& o) {
  Effective eff;
  if (o.given("--config")) apply_config_file(o.config, eff);
  apply_flags(o, eff);
  if (eff.data_dir.empty()) eff.data_dir = default_data_dir();
  // Backend problems surface before any dataset or network access.
  eff.run.backend.validate();
  eff.run.validate();
  if (eff.dataset.empty()) throw Error(ErrorCode::kConfig, "--dataset is required");
  return eff;
}

Dataset load(const Effective& eff) {
  auto ds = load_dataset(resolve_dataset_path(eff.dataset, eff.data_dir));
  if (!eff.template_path.empty()) {
    ds.prompt_template = load_template(eff.template_path);
    ds.template_ref = eff.template_path;
  }
  return ds;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
}

fs::path ensure_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

int report_status(const EvalReport& r, std::ostream& err) {
  if (!r.failed) return 0;
  err << "error: " << r.variant << " failed at seed " << r.failed_seed.value_or(0) << ": "
      << r.error << "\n";
  return exit_code_for(r.error_code.value_or(ErrorCode::kInvariant));
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  const auto eff = resolve(o);
  const auto ds = load(eff);
  validate_run(ds, eff.run);
  const auto scorer = make_scorer(eff.run.backend, default_corpus(ds));
  const auto report = run_evaluation(ds, eff.run, *scorer);

  const auto dir = ensure_out(eff.out);
  write_file(dir / "report.json", dump(report_to_json(report, ds.label_space)));
  const EvalReport one[] = {report};
  write_file(dir / "report.csv", reports_csv(one));
  if (eff.run.audit) write_file(dir / "audit.json", dump(audit_json(report)));

  out << "config " << provenance_json(eff.run, report.backend_mode).dump() << "\n";
  for (const auto& s : report.per_seed) {
    out << "seed " << s.seed << " macro_f1 " << s.macro_f1 << " n_eval " << s.n_eval << "\n";
  }
  out << report.variant << " mean " << report.mean << " std " << report.std << "\n";
  out << "wrote " << (dir / "report.json").string() << "\n";
  return report_status(report, err);
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  const auto eff = resolve(o);
  std::vector<std::pair<std::string, RunConfig>> variants;
  for (auto m : eff.methods) {
    if (m == Method::kIcc && !eff.lambda_grid.empty()) {
      for (double lambda : eff.lambda_grid) {
        RunConfig cfg = eff.run;
        cfg.method = m;
        cfg.icc.lambda = lambda;
        std::ostringstream name;
        name << "icc[lambda=" << lambda << "]";
        variants.emplace_back(name.str(), cfg);
      }
    } else {
      RunConfig cfg = eff.run;
      cfg.method = m;
      variants.emplace_back(to_string(m), cfg);
    }
  }
  if (variants.size() < 2) {
    throw Error(ErrorCode::kConfig,
                "compare needs at least two variants (--methods a,b or --lambda-grid with icc)");
  }
  for (auto& [name, cfg] : variants) cfg.validate();
  const auto ds = load(eff);
  for (auto& [name, cfg] : variants) validate_run(ds, cfg);
  const auto scorer = make_scorer(eff.run.backend, default_corpus(ds));

  std::vector<EvalReport> reports;
  int status = 0;
  for (auto& [name, cfg] : variants) {
    auto r = run_evaluation(ds, cfg, *scorer);
    r.variant = name;
    out << name << " mean " << r.mean << " std " << r.std << "\n";
    if (status == 0) status = report_status(r, err);
    reports.push_back(std::move(r));
  }
  const auto dir = ensure_out(eff.out);
  write_file(dir / "compare.json", dump(compare_to_json(reports, ds.label_space)));
  write_file(dir / "compare.csv", reports_csv(reports));
  out << "wrote " << (dir / "compare.json").string() << "\n";
  return status;
}

int cmd_score(const Options& o, std::ostream& out, std::ostream&) {
  const auto eff = resolve(o);
  const auto ds = load(eff);
  validate_run(ds, eff.run);
  const auto scorer = make_scorer(eff.run.backend, default_corpus(ds));
  const auto seed = eff.run.seeds.front();
  const auto setup = prepare_seed(ds, eff.run, seed);
  const LabelSpace shown(setup.displayed_labels);

  json j;
  j["seed"] = seed;
  j["method"] = to_string(eff.run.method);
  if (o.given("--prompt")) {
    const auto raw = score_prompt(*scorer, ds.prompt_template, shown, o.prompt);
    j["prompt"] = o.prompt;
    j["labels"] = setup.displayed_labels;
    j["raw"] = raw.scores();
    out << dump(j);
    return 0;
  }
  if (o.index >= ds.eval.size()) {
    throw Error(ErrorCode::kDataset, "--index " + std::to_string(o.index) + " out of range (eval has " +
                                         std::to_string(ds.eval.size()) + " examples)");
  }
  const Example& query = ds.eval[o.index];
  const auto prompt = render_icl_prompt(ds.prompt_template, setup.shown_demos, query, shown).text;
  const auto vec = method_calibration_vector(*scorer, ds, eff.run, setup);
  auto result = reuse_calibration(vec.vector, score_prompt(*scorer, ds.prompt_template, shown, prompt),
                                  eff.run.icc.epsilon);
  if (eff.run.audit) result.components = vec.components;
  j["index"] = o.index;
  j["prompt"] = prompt;
  j["expected"] = apply_mapping_to_eval(setup.mapping, query.gold_label);
  j["result"] = calibration_result_json(result, setup.displayed_labels);
  out << dump(j);
  return 0;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto eff = resolve(o);
  const auto ds = load(eff);
  const auto v = validate_dataset(ds);
  if (v.ok()) {
    out << "ok: " << ds.name << " (" << ds.train.size() << " train, " << ds.eval.size()
        << " eval, " << ds.label_space.size() << " labels)\n";
    return 0;
  }
  for (const auto& msg : v.violations) err << ds.name << ": " << msg << "\n";
  return exit_code_for(ErrorCode::kDataset);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"In-context calibration for few-shot classification"};
  app.require_subcommand(1);
  Options o;
  auto* run = app.add_subcommand("run", "evaluate one method over seeds");
  auto* compare = app.add_subcommand("compare", "evaluate several methods on shared demonstrations");
  auto* score = app.add_subcommand("score", "score one example and print the calibration");
  auto* validate = app.add_subcommand("validate", "check a dataset against its template");

  Options run_o, compare_o, score_o, validate_o;
  add_common(run, run_o);
  add_common(compare, compare_o);
  compare_o.opts["--methods"] = compare->add_option("--methods", compare_o.methods, "comma-separated methods");
  compare_o.opts["--lambda-grid"] =
      compare->add_option("--lambda-grid", compare_o.lambda_grid, "comma-separated lambda values for icc");
  add_common(score, score_o);
  score_o.opts["--index"] = score->add_option("--index", score_o.index, "eval example index");
  score_o.opts["--prompt"] = score->add_option("--prompt", score_o.prompt, "score a raw prompt instead");
  add_common(validate, validate_o);

  std::vector<std::string> argv_store;
  argv_store.emplace_back("icc");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_o, out, err);
    if (compare->parsed()) return cmd_compare(compare_o, out, err);
    if (score->parsed()) return cmd_score(score_o, out, err);
    if (validate->parsed()) return cmd_validate(validate_o, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 5;
  }
  return 2;
}

}  // namespace icc
