#pragma once

#include <stdexcept>
#include <string>

namespace dmprior {

/// Failure category. Each maps onto a CLI exit code.
enum class ErrorKind { usage, data, convergence, internal };

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::convergence: return 4;
    case ErrorKind::internal: return 5;
  }
  return 5;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }

/// Raised when a distribution cannot be fit to a sample set. Carries the
/// sample moments that made the fit impossible.
class DegenerateFitError : public Error {
 public:
  DegenerateFitError(const std::string& what, double mean, double variance)
      : Error(ErrorKind::data, what), mean_(mean), variance_(variance) {}
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }

 private:
  double mean_;
  double variance_;
};

}  // namespace dmprior
