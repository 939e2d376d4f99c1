#ifndef ANRSP_ERRORS_HPP
#define ANRSP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace anrsp {

/// Failure categories; each maps onto one CLI exit code.
enum class ErrorKind {
  Config,      // exit 2
  Degenerate,  // exit 3
  Numerical,   // exit 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ANRSP_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what)                               \
        : Error(ErrorKind::Kind, std::string(#Name ": ") + what) {}      \
  };

ANRSP_DEFINE_ERROR(ConfigError, Config)
ANRSP_DEFINE_ERROR(BadOrder, Config)
ANRSP_DEFINE_ERROR(GridTooCoarse, Config)
ANRSP_DEFINE_ERROR(IoError, Config)
ANRSP_DEFINE_ERROR(DegenerateObjective, Degenerate)
ANRSP_DEFINE_ERROR(SingularJacobian, Numerical)
ANRSP_DEFINE_ERROR(NoConvergence, Numerical)
ANRSP_DEFINE_ERROR(NonUniqueLeading, Numerical)
ANRSP_DEFINE_ERROR(SingularResolvent, Numerical)
ANRSP_DEFINE_ERROR(NotMeanZero, Numerical)
ANRSP_DEFINE_ERROR(MissingNumerator, Numerical)
ANRSP_DEFINE_ERROR(DetSignFlip, Numerical)
ANRSP_DEFINE_ERROR(NewtonDiverged, Numerical)
ANRSP_DEFINE_ERROR(OptimalityViolated, Numerical)

#undef ANRSP_DEFINE_ERROR

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Degenerate:
      return 3;
    case ErrorKind::Numerical:
      return 4;
  }
  return 1;
}

}  // namespace anrsp

#endif  // ANRSP_ERRORS_HPP
