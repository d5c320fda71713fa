#pragma once

#include <stdexcept>
#include <string>

namespace acst {

// Parameter at the edge of the feasible set (e.g. skewness with
// delta' Omega^{-1} delta at 1).
class BoundaryError : public std::runtime_error {
 public:
  explicit BoundaryError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed to reach its tolerance; carries the bound it
// did achieve.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace acst
