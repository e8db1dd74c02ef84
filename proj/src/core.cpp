#include "icc/core.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "icc/error.hpp"
#include "icc/prompting.hpp"

namespace icc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kDataset: return "DatasetError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kTemplate: return "TemplateError";
    case ErrorCode::kIndex: return "IndexError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyBag: return "EmptyBag";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kTooManyLabels: return "TooManyLabels";
    case ErrorCode::kInsufficientTrain: return "InsufficientTrain";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kScoring: return "ScoringError";
    case ErrorCode::kInvariant: return "InvariantViolation";
  }
  return "Error";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kTooManyLabels:
      return 2;
    case ErrorCode::kDataset:
    case ErrorCode::kIo:
    case ErrorCode::kTemplate:
    case ErrorCode::kInsufficientTrain:
    case ErrorCode::kEmptyCorpus:
      return 3;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kScoring:
      return 4;
    case ErrorCode::kIndex:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kEmptyBag:
    case ErrorCode::kInvariant:
      return 5;
  }
  return 5;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    const std::size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

LabelSpace::LabelSpace(std::vector<std::string> labels) {
  if (labels.size() < 2) {
    throw Error(ErrorCode::kDataset, "label space needs at least 2 labels");
  }
  std::set<std::string> seen;
  for (auto& raw : labels) {
    std::string label(trim(raw));
    if (label.empty()) throw Error(ErrorCode::kDataset, "empty label string");
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::kDataset, "duplicate label '" + label + "'");
    }
    labels_.push_back(std::move(label));
  }
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view label) const {
  const auto needle = trim(label);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == needle) return i;
  }
  return std::nullopt;
}

LabelDistribution::LabelDistribution(std::vector<double> scores)
    : scores_(std::move(scores)) {
  for (double s : scores_) {
    if (!std::isfinite(s) || s < 0.0) {
      throw Error(ErrorCode::kInvariant,
                  "label distribution entries must be finite and >= 0");
    }
  }
}

LabelDistribution LabelDistribution::zeros(std::size_t n) {
  return LabelDistribution(std::vector<double>(n, 0.0));
}

LabelDistribution LabelDistribution::ones(std::size_t n) {
  return LabelDistribution(std::vector<double>(n, 1.0));
}

LabelDistribution& LabelDistribution::operator+=(const LabelDistribution& other) {
  if (other.size() != size()) {
    throw Error(ErrorCode::kLengthMismatch, "label distribution sizes differ");
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) scores_[i] += other.scores_[i];
  return *this;
}

LabelDistribution& LabelDistribution::operator*=(double factor) {
  for (double& s : scores_) s *= factor;
  return *this;
}

LabelDistribution& LabelDistribution::operator/=(double divisor) {
  for (double& s : scores_) s /= divisor;
  return *this;
}

LabelDistribution operator+(LabelDistribution a, const LabelDistribution& b) {
  a += b;
  return a;
}

LabelDistribution operator*(double factor, LabelDistribution d) {
  d *= factor;
  return d;
}

LabelDistribution mean(std::span<const LabelDistribution> items) {
  if (items.empty()) {
    throw Error(ErrorCode::kInvariant, "mean of zero distributions");
  }
  const std::size_t n = items.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double first = items.front()[j];
    bool constant = true;
    double sum = 0.0;
    for (const auto& d : items) {
      if (d.size() != n) {
        throw Error(ErrorCode::kLengthMismatch, "label distribution sizes differ");
      }
      constant = constant && d[j] == first;
      sum += d[j];
    }
    // Summing M copies and dividing by M is not exact in floating point;
    // a constant column must reproduce its value bitwise.
    out[j] = constant ? first : sum / static_cast<double>(items.size());
  }
  return LabelDistribution(std::move(out));
}

std::size_t argmax(const LabelDistribution& d) {
  if (d.size() == 0) throw Error(ErrorCode::kInvariant, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[best]) best = i;
  }
  return best;
}

ValidationResult validate_example(const Example& e, const PromptTemplate& t,
                                  const LabelSpace& ls) {
  ValidationResult result;
  for (const auto& name : t.field_names) {
    auto it = e.fields.find(name);
    if (it == e.fields.end()) {
      result.violations.push_back("missing field " + name);
    } else if (trim(it->second).empty()) {
      result.violations.push_back("empty field " + name);
    }
  }
  if (e.gold_label >= ls.size()) {
    result.violations.push_back("label index out of range");
  }
  return result;
}

}  // namespace icc
