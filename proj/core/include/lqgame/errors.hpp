#pragma once

#include <stdexcept>
#include <string>

namespace lqgame {

/// A caller broke a documented precondition (non-PD weight, uncontrollable
/// pair, wrong dimensions, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical kernel failed to deliver its accuracy contract
/// (eigenvalue iteration did not converge, quadrature did not converge,
/// overflow in the matrix exponential).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lqgame
