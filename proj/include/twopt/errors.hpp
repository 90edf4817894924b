#ifndef TWOPT_ERRORS_HPP
#define TWOPT_ERRORS_HPP

#include <functional>
#include <stdexcept>
#include <string>

namespace twopt {

enum class ErrorKind {
  Domain,
  StepMismatch,
  MassExhausted,
  EngineMismatch,
  NoStationaryPoint,
  NonConvexPenalty,
  NoBracket,
  NonConvergence,
  RouteFinished,
  LengthMismatch,
  EmptyAfterCleaning,
  DegenerateComponent,
  EmptyTestSet,
  Parse,
  Validation,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define TWOPT_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what)                         \
        : Error(ErrorKind::Name, what) {}                          \
  };

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};
TWOPT_DEFINE_ERROR(StepMismatch)
TWOPT_DEFINE_ERROR(MassExhausted)
TWOPT_DEFINE_ERROR(EngineMismatch)
TWOPT_DEFINE_ERROR(NoStationaryPoint)
TWOPT_DEFINE_ERROR(NonConvexPenalty)
TWOPT_DEFINE_ERROR(NoBracket)
TWOPT_DEFINE_ERROR(NonConvergence)
TWOPT_DEFINE_ERROR(RouteFinished)
TWOPT_DEFINE_ERROR(LengthMismatch)
TWOPT_DEFINE_ERROR(EmptyAfterCleaning)
TWOPT_DEFINE_ERROR(DegenerateComponent)
TWOPT_DEFINE_ERROR(EmptyTestSet)
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

#undef TWOPT_DEFINE_ERROR

/// Rethrows `e` as its concrete type with `context` prepended to the message.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the sink for non-fatal diagnostics (default: stderr). Not
/// synchronized; install once at startup.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace twopt

#endif  // TWOPT_ERRORS_HPP
