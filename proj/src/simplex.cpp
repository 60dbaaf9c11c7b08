#include "simplex.hpp"

#include <optional>

#include "error.hpp"

namespace bell::lp {

FeasibilityResult find_feasible_point(const std::vector<std::vector<Rational>>& a, const std::vector<Rational>& b) {
  const std::size_t rows = a.size();
  if (b.size() != rows) fail(ErrorCode::kArgument, "constraint matrix and right-hand side disagree in length");
  const std::size_t vars = rows == 0 ? 0 : a.front().size();
  for (const auto& row : a) {
    if (row.size() != vars) fail(ErrorCode::kArgument, "ragged constraint matrix");
  }

  // Columns: [0, vars) original, [vars, vars + rows) artificial.
  const std::size_t cols = vars + rows;
  std::vector<std::vector<Rational>> tableau(rows, std::vector<Rational>(cols));
  std::vector<Rational> rhs(rows);
  std::vector<std::size_t> basis(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const bool flip = b[i].sign() < 0;
    for (std::size_t j = 0; j < vars; ++j) tableau[i][j] = flip ? -a[i][j] : a[i][j];
    tableau[i][vars + i] = Rational(1);
    rhs[i] = flip ? -b[i] : b[i];
    basis[i] = vars + i;
  }

  // Reduced costs of "minimize the sum of artificials".
  std::vector<Rational> reduced(cols);
  for (std::size_t j = 0; j < vars; ++j) {
    for (std::size_t i = 0; i < rows; ++i) reduced[j] -= tableau[i][j];
  }

  FeasibilityResult result;
  for (;;) {
    std::optional<std::size_t> entering;
    for (std::size_t j = 0; j < cols; ++j) {
      if (reduced[j].sign() < 0) {
        entering = j;
        break;
      }
    }
    if (!entering) break;

    std::optional<std::size_t> leaving;
    Rational best_ratio;
    for (std::size_t i = 0; i < rows; ++i) {
      const Rational& coef = tableau[i][*entering];
      if (coef.sign() <= 0) continue;
      Rational ratio = rhs[i] / coef;
      if (!leaving || ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[*leaving])) {
        leaving = i;
        best_ratio = std::move(ratio);
      }
    }
    // The phase-1 objective is bounded below by zero, so a ratio always exists.
    if (!leaving) fail(ErrorCode::kInternal, "phase-1 simplex found an unbounded direction");

    const std::size_t r = *leaving;
    const Rational pivot = tableau[r][*entering];
    for (auto& v : tableau[r]) v /= pivot;
    rhs[r] /= pivot;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const Rational factor = tableau[i][*entering];
      if (factor.is_zero()) continue;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!tableau[r][j].is_zero()) tableau[i][j] -= factor * tableau[r][j];
      }
      rhs[i] -= factor * rhs[r];
    }
    const Rational factor = reduced[*entering];
    for (std::size_t j = 0; j < cols; ++j) {
      if (!tableau[r][j].is_zero()) reduced[j] -= factor * tableau[r][j];
    }
    basis[r] = *entering;
    ++result.pivots;
  }

  Rational residual;
  for (std::size_t i = 0; i < rows; ++i) {
    if (basis[i] >= vars) residual += rhs[i];
  }
  result.feasible = residual.is_zero();
  if (result.feasible) {
    result.point.assign(vars, Rational());
    for (std::size_t i = 0; i < rows; ++i) {
      if (basis[i] < vars) result.point[basis[i]] = rhs[i];
    }
  }
  return result;
}

}  // namespace bell::lp
