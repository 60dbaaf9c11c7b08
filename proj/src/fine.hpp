#pragma once

#include <array>
#include <optional>

#include "chsh.hpp"
#include "flatten.hpp"
#include "model.hpp"

namespace bell {

/// Joint pmf of (A_x, A_x', B_y, B_y') over {+1, -1}^4.
///
/// Index bit 3 is A_x, bit 2 A_x', bit 1 B_y, bit 0 B_y'; a set bit means -1.
struct JointDistribution16 {
  std::array<Rational, 16> mass{};

  static constexpr int index(int ax, int axp, int by, int byp) {
    return (ax < 0 ? 8 : 0) | (axp < 0 ? 4 : 0) | (by < 0 ? 2 : 0) | (byp < 0 ? 1 : 0);
  }
  /// Outcome (+1 or -1) of coordinate `coord` (0 = A_x ... 3 = B_y') at `index`.
  static constexpr int outcome(int index, int coord) { return (index >> (3 - coord)) & 1 ? -1 : +1; }

  bool valid() const;
  friend bool operator==(const JointDistribution16&, const JointDistribution16&) = default;
};

/// Context marginal over (x, y) in {+1, -1}^2, indexed [x == -1][y == -1].
using PairPmf = std::array<std::array<Rational, 2>, 2>;

struct MarginalComparison {
  Side side = Side::kAlice;
  int setting = 0;
  // P(+1), P(-1) of this side's outcome under each of the other side's settings.
  std::array<std::array<Rational, 2>, 2> marginal;
  Rational difference;
};

struct NoSignallingReport {
  std::array<MarginalComparison, 4> comparisons;  // alice x, alice x', bob y, bob y'
  Rational max_deviation;
  bool holds = false;  // max_deviation <= tolerance
};

struct FineResult {
  bool feasible = false;
  std::optional<JointDistribution16> joint;
  std::optional<int> certificate;  // CHSH combination index exceeding 2 when infeasible
  ChshReport chsh;
  std::size_t pivots = 0;
};

/// Rejects ternary behaviors.
NoSignallingReport check_no_signalling(const BehaviorTable& behavior, const Rational& tolerance = Rational());

/// Exact feasibility of a joint reproducing all four context pmfs. Signalling
/// behaviors are rejected. An infeasible verdict is certified by a violated CHSH
/// combination; an infeasible behavior satisfying CHSH raises kInternal.
FineResult find_joint(const BehaviorTable& behavior);

PairPmf marginalize_context(const JointDistribution16& joint, Context context);
PairPmf context_pmf(const BehaviorTable& behavior, Context context);

/// Exact no-signalling and all eight CHSH inequalities.
bool fine_criterion(const BehaviorTable& behavior);

/// Push-forward of the tuple measure through (A_x, A_x', B_y, B_y'). Needs +-1 outcomes.
JointDistribution16 coupling_joint(const FlatModel& model);

}  // namespace bell
