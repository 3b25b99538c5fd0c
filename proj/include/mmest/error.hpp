#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace mmest {

enum class ErrorCode {
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kParamOutOfDomain,
  kOverflow,
  kSetOutsideDomain,
  kKMismatch,
  kTooLarge,
  kNonPositiveEntry,
  kEpsilonOutOfRange,
  kEmptyList,
  kDenominatorNotPositive,
  kBadDistribution,
  kTauNotInT,
  kTrivialProblem,
  kBothSidesInfeasible,
  kInvalidArgument,
  kConfig,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised when an iterative solver stops before reaching its tolerance. Carries
// the best iterate so the caller can decide whether it is usable.
class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, Eigen::VectorXd best, double gap)
      : Error(ErrorCode::kIterationLimit, what), best_(std::move(best)), gap_(gap) {}

  const Eigen::VectorXd& best_iterate() const { return best_; }
  double gap() const { return gap_; }

 private:
  Eigen::VectorXd best_;
  double gap_;
};

}  // namespace mmest
