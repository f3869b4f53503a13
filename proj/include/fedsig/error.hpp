#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedsig {

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kMissingFile,
  kRaggedRow,
  kNonUtf8Input,
  kParse,
  kSchemaMismatch,
  kEmptyTarget,
  kAllRecordsRemoved,
  kMixedAdr,
  kLengthMismatch,
  kAllTablesFlagged,
  kUnknownDrug,
  kUnknownAdr,
  kShapeMismatch,
  kNonFiniteLoss,
  kSingleClass,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fedsig
