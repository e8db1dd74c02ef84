#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icc/calibration.hpp"
#include "icc/core.hpp"
#include "icc/error.hpp"
#include "icc/prompting.hpp"
#include "icc/rng.hpp"
#include "icc/scorer.hpp"
#include "icc/tasking.hpp"

namespace icc {

inline constexpr std::string_view kToolVersion = "icc 1.0.0";

enum class DatasetFamily { kSentiment, kNli, kDetection, kCustom };
const char* to_string(DatasetFamily f);
DatasetFamily parse_dataset_family(std::string_view name);

struct Dataset {
  Dataset(std::string name, LabelSpace labels, PromptTemplate tmpl)
      : name(std::move(name)), label_space(std::move(labels)),
        prompt_template(std::move(tmpl)) {}

  std::string name;
  LabelSpace label_space;
  PromptTemplate prompt_template;
  std::string template_ref;
  DatasetFamily family = DatasetFamily::kCustom;
  std::vector<Example> train;
  std::vector<Example> eval;
  // Optional n-gram corpus; empty means "derive from the train split".
  std::string corpus_path;
};

// Every violation across both splits, prefixed with its split and position.
ValidationResult validate_dataset(const Dataset& ds);

enum class Method { kOriginal, kCc, kDcDemo, kDcTest, kIcc };
const char* to_string(Method m);
Method parse_method(std::string_view name);

struct RunConfig {
  Method method = Method::kIcc;
  std::size_t k = 8;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  MappingKind label_mode = MappingKind::kIdentity;
  bool allow_fixed_points = false;
  bool balanced = false;
  IccConfig icc;
  DcConfig dc;
  std::size_t eval_cap = 500;
  ScorerConfig backend;
  // Execution knobs; never affect results and are not part of provenance.
  std::size_t workers = 1;
  bool audit = false;

  void validate() const;
};

// Dataset-dependent checks: split sizes against K, symbol-mode label count.
void validate_run(const Dataset& ds, const RunConfig& cfg);

// K distinct train examples, uniform without replacement, in draw order.
// `balanced` cycles through classes so label counts differ by at most one
// where the split allows it.
DemoSet sample_demos(const Dataset& ds, std::size_t k, SeededRng& rng,
                     bool balanced = false);

// The full split when it fits under `cap`, else `cap` distinct examples
// drawn uniformly, kept in split order.
std::vector<Example> cap_eval_split(const Dataset& ds, std::size_t cap, SeededRng& rng);

// Unweighted mean of per-class F1 over all n_labels classes. A class with
// no gold and no predicted instances contributes 0.
double macro_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                std::size_t n_labels);

/// Everything a seed needs before prediction starts. Depends only on the
/// dataset, the seed and the sampling options, never on the method, so
/// methods compared under one seed see the same demonstrations.
struct SeedSetup {
  std::uint64_t seed = 0;
  DemoSet demos;          // as sampled, original labels
  DemoSet shown_demos;    // after the label mapping
  LabelMapping mapping;
  std::vector<std::string> displayed_labels;
  std::vector<Example> eval_split;
  std::vector<std::size_t> expected;  // mapped gold per eval example
};

SeedSetup prepare_seed(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed);

struct MethodVector {
  LabelDistribution vector;
  std::optional<IccComponents> components;
  std::size_t dc_sample_length = 0;
};

// The method's calibration vector for one seed; computed once and reused
// for every eval example.
MethodVector method_calibration_vector(const Scorer& scorer, const Dataset& ds,
                                       const RunConfig& cfg, const SeedSetup& setup);

struct SeedResult {
  std::uint64_t seed = 0;
  double macro_f1 = 0.0;
  std::size_t n_eval = 0;
  LabelMapping mapping;
  std::vector<std::string> displayed_labels;
  LabelDistribution calibration_vector;
  std::string calibration_vector_digest;
  std::string demo_digest;
  std::vector<std::size_t> demo_indices;
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> expected;
  std::size_t dc_sample_length = 0;
  std::optional<IccComponents> components;
};

struct EvalReport {
  std::string dataset;
  std::string variant;  // method name, or e.g. "icc[lambda=0.25]" in sweeps
  RunConfig config;
  std::string backend_mode;
  std::vector<SeedResult> per_seed;
  double mean = 0.0;
  double std = 0.0;  // population
  bool failed = false;
  std::optional<std::uint64_t> failed_seed;
  std::optional<ErrorCode> error_code;
  std::string error;
};

std::string digest_of(const LabelDistribution& d);
std::string digest_of(const DemoSet& demos);

// Never throws for per-seed failures: the report comes back with `failed`
// set and the failing seed noted. Dataset/config problems found before the
// first seed are thrown.
EvalReport run_evaluation(const Dataset& ds, const RunConfig& cfg, const Scorer& scorer);

// Builds the configured scorer, using the rendered train split as the n-gram
// corpus when the dataset names none.
EvalReport run_evaluation(const Dataset& ds, const RunConfig& cfg);

// Population mean and standard deviation.
std::pair<double, double> mean_std(std::span<const double> xs);

}  // namespace icc
