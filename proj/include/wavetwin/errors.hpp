#pragma once

#include <stdexcept>
#include <string>

namespace wavetwin {

/// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorCategory {
   config  = 2,  // bad configuration / schema violation / artifact mismatch
   io      = 3,  // file system, serialization, format errors
   numeric = 4,  // instability, non-SPD factorization, failed invariant
};

class Error : public std::runtime_error {
public:
   Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}

   ErrorCategory category() const { return category_; }
   int exit_code() const { return static_cast<int>(category_); }

private:
   ErrorCategory category_;
};

struct ConfigError : Error {
   explicit ConfigError(const std::string& msg) : Error(ErrorCategory::config, msg) {}
};

struct IoError : Error {
   explicit IoError(const std::string& msg) : Error(ErrorCategory::io, msg) {}
};

struct NumericError : Error {
   explicit NumericError(const std::string& msg) : Error(ErrorCategory::numeric, msg) {}
};

/// Dimension mismatches are configuration-class errors (caller passed
/// incompatible shapes).
struct DimensionError : Error {
   explicit DimensionError(const std::string& msg) : Error(ErrorCategory::config, msg) {}
};

inline void require(bool cond, ErrorCategory cat, const std::string& msg) {
   if (!cond) { throw Error(cat, msg); }
}

}  // namespace wavetwin
