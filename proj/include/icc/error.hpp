#pragma once

#include <stdexcept>
#include <string>

namespace icc {

enum class ErrorCode {
  kConfig,
  kDataset,
  kIo,
  kTemplate,
  kIndex,
  kLengthMismatch,
  kEmptyBag,
  kEmptyCorpus,
  kTooManyLabels,
  kInsufficientTrain,
  kBackendUnavailable,
  kScoring,
  kInvariant,
};

const char* to_string(ErrorCode code);

// Process exit status for an error surfaced by the CLI:
// 2 config, 3 dataset, 4 backend, 5 internal invariant violation.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace icc
