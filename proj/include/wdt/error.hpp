#pragma once

#include <stdexcept>
#include <string>

namespace wdt {

// Failure categories surfaced by the CLI as machine-parseable one-liners.
enum class ErrorCategory {
    config,
    dimension,
    shape,
    range,
    validation,
    ingestion,
    degenerate_input,
    divergence,
    undefined_metric,
    io,
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}
    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) {
    throw Error(c, msg);
}

}  // namespace wdt
