#include "twopt/errors.hpp"

#include <iostream>
#include <utility>

namespace twopt {

namespace {
WarningHandler& handler() {
  static WarningHandler h = [](const std::string& msg) {
    std::cerr << "twopt warning: " << msg << '\n';
  };
  return h;
}
}  // namespace

void set_warning_handler(WarningHandler h) { handler() = std::move(h); }

void warn(const std::string& message) {
  if (handler()) handler()(message);
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::StepMismatch: return "StepMismatch";
    case ErrorKind::MassExhausted: return "MassExhausted";
    case ErrorKind::EngineMismatch: return "EngineMismatch";
    case ErrorKind::NoStationaryPoint: return "NoStationaryPoint";
    case ErrorKind::NonConvexPenalty: return "NonConvexPenalty";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::RouteFinished: return "RouteFinished";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyAfterCleaning: return "EmptyAfterCleaning";
    case ErrorKind::DegenerateComponent: return "DegenerateComponent";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Validation: return "ValidationError";
  }
  return "Error";
}

void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string msg = context + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::Domain: throw DomainError(msg);
    case ErrorKind::StepMismatch: throw StepMismatch(msg);
    case ErrorKind::MassExhausted: throw MassExhausted(msg);
    case ErrorKind::EngineMismatch: throw EngineMismatch(msg);
    case ErrorKind::NoStationaryPoint: throw NoStationaryPoint(msg);
    case ErrorKind::NonConvexPenalty: throw NonConvexPenalty(msg);
    case ErrorKind::NoBracket: throw NoBracket(msg);
    case ErrorKind::NonConvergence: throw NonConvergence(msg);
    case ErrorKind::RouteFinished: throw RouteFinished(msg);
    case ErrorKind::LengthMismatch: throw LengthMismatch(msg);
    case ErrorKind::EmptyAfterCleaning: throw EmptyAfterCleaning(msg);
    case ErrorKind::DegenerateComponent: throw DegenerateComponent(msg);
    case ErrorKind::EmptyTestSet: throw EmptyTestSet(msg);
    case ErrorKind::Parse: throw ParseError(msg);
    case ErrorKind::Validation: throw ValidationError(msg);
  }
  throw Error(e.kind(), msg);
}

}  // namespace twopt
