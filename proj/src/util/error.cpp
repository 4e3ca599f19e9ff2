#include "novelty/util/error.hpp"

namespace novelty {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kArgument: return "argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kAuth: return "auth";
    case ErrorCode::kForbidden: return "forbidden";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

Error::Error(ErrorCode code, const std::string& message, std::string field)
    : std::runtime_error(message), code_(code), field_(std::move(field)) {}

void fail(ErrorCode code, const std::string& message, std::string field) {
  throw Error(code, message, std::move(field));
}

}  // namespace novelty
