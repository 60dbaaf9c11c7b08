#pragma once

#include <stdexcept>
#include <string>

namespace bell {

enum class ErrorCode {
  kParse = 1,
  kInvalidModel = 2,
  kDomain = 3,
  kArgument = 4,
  kInternal = 5,
};

// Every failure raised by the core carries one of the codes above so the
// C boundary can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace bell
