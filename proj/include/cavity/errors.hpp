#pragma once

#include <stdexcept>
#include <string>

namespace cavity {

// Iterative method failed to reach its tolerance (series cap, step halving,
// contour sample cap).
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Truncated sums or boxes whose discarded tail exceeds the requested bound.
class truncation_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// Formula used outside the detuning regime it was derived for.
class regime_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

} // namespace cavity
