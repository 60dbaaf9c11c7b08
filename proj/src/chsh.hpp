#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "model.hpp"

namespace bell {

/// The eight one-sided CHSH combinations. Value k = 2 * t + (negated ? 1 : 0)
/// is sign * (E_xy + E_xy' + E_x'y + E_x'y' - 2 * E_t), where t is the context
/// index carrying the odd sign.
struct ChshReport {
  std::array<Rational, 8> values;
  Rational max_abs;
  bool satisfied = false;

  static constexpr int odd_term(int k) { return k / 2; }
  static constexpr int overall_sign(int k) { return k % 2 == 0 ? +1 : -1; }
  /// Index of the combination whose largest |value| is attained first.
  int worst() const;
};

/// Human-readable form such as "E(x,y) - E(x',y) + E(x,y') + E(x',y')".
std::string describe_combination(int k, const std::array<Label, 2>& alice, const std::array<Label, 2>& bob);

/// Throws kArgument when an entry lies outside [-1, 1].
ChshReport chsh_values(const CorrelationQuad& quad);

struct PostSelectionReport {
  CorrelationQuad raw;
  std::array<std::optional<Rational>, 4> conditional;  // absent when the coincidence rate is 0
  std::array<Rational, 4> coincidence;
  std::array<std::array<Rational, 2>, 2> single_rate;  // [side][setting]
  ChshReport raw_chsh;
  std::optional<ChshReport> conditional_chsh;  // present when all four conditional values exist

  bool conditional_defined() const { return conditional_chsh.has_value(); }
};

/// E(XY | X != 0, Y != 0) per context, with coincidence and singles rates.
/// Singles rates are the average over the other side's two settings, which is
/// exact for no-signalling behaviors.
PostSelectionReport postselected_correlations(const BehaviorTable& behavior);

/// Replaces each 0 outcome with a fair coin: every instrument atom of an affected
/// setting splits into halves realizing +1 and -1 where the table read 0.
/// The result has +-1 outcomes and the same exact expectations.
ContextualModel zero_to_coin(const ContextualModel& model);

struct SampleBound {
  double log_bound = 0.0;  // natural log of the bound, finite even when the bound underflows
  double bound = 1.0;
};

/// min(1, exp(-n * max(0, |S| - 2)^2 / 32)): Hoeffding-style bound on the chance that a
/// local process with equal context allocation yields |S_hat| >= |observed| over n trials.
SampleBound finite_sample_bound(std::int64_t trials, double observed);

}  // namespace bell
