#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace novelty {

enum class ErrorCode {
  kArgument,
  kConfig,
  kValidation,
  kNotFound,
  kAuth,
  kForbidden,
  kConflict,
  kFormat,
  kIo,
  kInternal,
};

/// Machine-readable name, e.g. "validation" or "not_found".
std::string_view to_string(ErrorCode code) noexcept;

/// Single error type shared by every module. `field` names the offending
/// input (flag, record field) when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message, std::string field = {});

}  // namespace novelty
