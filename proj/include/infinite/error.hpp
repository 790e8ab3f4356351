#pragma once

#include <stdexcept>
#include <string>

namespace infinite {

// Every failure surfaced by the library carries a stable machine-readable
// code so the CLI and the HTTP service can report {code, message, detail}.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string detail_;
};

}  // namespace infinite
