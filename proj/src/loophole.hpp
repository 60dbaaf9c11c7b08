#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "chsh.hpp"
#include "model.hpp"

namespace bell {

/// Analyzer angles in radians: alice = (theta_x, theta_x'), bob = (theta_y, theta_y').
struct AngleSet {
  std::array<double, 2> alice{};
  std::array<double, 2> bob{};

  /// (0, pi/2, pi/4, 3 pi/4): the angles maximizing the singlet CHSH value.
  static AngleSet chsh_optimal();
};

/// P(x, y | a, b) = (1 + x y E_ab) / 4 with E_ab = -cos(theta_a - theta_b).
/// E_ab is evaluated in double precision and then carried exactly, so the table
/// is exactly normalized and no-signalling with unbiased singles.
BehaviorTable quantum_singlet_behavior(const AngleSet& angles);

struct DetectionRates {
  std::array<std::array<Rational, 2>, 2> rate;  // [side][setting], probability of a non-zero outcome
  /// Comparison of each rate with 2/3: -1 below, 0 equal, +1 above.
  std::array<std::array<int, 2>, 2> versus_two_thirds{};

  bool all_below_two_thirds() const;
};

DetectionRates detection_rates(const ContextualModel& model);

struct SearchConfig {
  int source_atoms = 8;
  int instrument_atoms = 2;
  std::int64_t budget = 200000;  // total local moves across all restarts
  int restarts = 20;
  std::uint64_t seed = 1;
  Rational min_coincidence{3, 10};   // per context
  Rational max_detection{2, 3};      // per side and setting
  unsigned threads = 1;
};

/// Masses live on a grid with this denominator.
inline constexpr int kSearchGrid = 64;

struct SearchResult {
  ContextualModel model;
  PostSelectionReport report;
  DetectionRates rates;
  ChshReport coin_flip_chsh;  // raw quad after zero_to_coin
  bool constraints_met = false;
  bool violating = false;  // constraints met and post-selected maxAbs > 2
  double best_score = 0.0;
  int winning_restart = -1;
  std::vector<double> best_trace;  // best feasible score after every move, restarts in order
};

/// Seeded random restarts with greedy local moves over ternary models
/// (shared-lambda source, `instrument_atoms` per setting), maximizing the
/// post-selected max |CHSH| subject to the coincidence and detection limits.
/// The winner is re-verified in exact arithmetic.
SearchResult search_postselection_violation(const SearchConfig& config);

}  // namespace bell
