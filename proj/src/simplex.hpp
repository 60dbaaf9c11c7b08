#pragma once

#include <cstddef>
#include <vector>

#include "rational.hpp"

namespace bell::lp {

struct FeasibilityResult {
  bool feasible = false;
  std::vector<Rational> point;  // x >= 0 with A x = b when feasible
  std::size_t pivots = 0;
};

/// Phase-1 simplex over exact rationals with Bland's rule: searches x >= 0
/// solving A x = b. Redundant rows are allowed; no tolerances are involved.
FeasibilityResult find_feasible_point(const std::vector<std::vector<Rational>>& a, const std::vector<Rational>& b);

}  // namespace bell::lp
