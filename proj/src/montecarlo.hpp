#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chsh.hpp"
#include "flatten.hpp"
#include "model.hpp"

namespace bell {

/// Causal model of one trial: settings (A, B) drawn from their own streams,
/// hidden Lambda = (source atom, u1, u2, w1, w2) from independent streams,
/// X = f(A, Lambda) and Y = g(B, Lambda) in {-1, +1}.
///
/// u1 and u2 pick a cell of each side's quantile refinement (the instrument
/// variables); w1 and w2 realize fractional outcomes o as +1 with probability
/// (1 + o) / 2.
struct DagModel {
  struct SideTables {
    QuantileRefinement cells;
    std::vector<double> cell_upper;  // right end of each cell, as double
    // [setting][source atom][cell]
    std::array<std::vector<std::vector<Rational>>, 2> outcome;
    std::array<std::vector<std::vector<double>>, 2> plus_threshold;
  };

  std::array<Label, 2> alice_settings;
  std::array<Label, 2> bob_settings;
  std::array<Rational, 4> setting_bias;  // per context, canonical order
  std::vector<Rational> source_mass;
  std::vector<double> source_upper;
  SideTables alice;
  SideTables bob;
};

struct HiddenDraw {
  std::size_t source = 0;
  std::size_t alice_cell = 0;
  std::size_t bob_cell = 0;
  double alice_aux = 0.0;
  double bob_aux = 0.0;
};

struct TrialRecord {
  std::uint8_t a = 0;  // setting index, 0 or 1
  std::uint8_t b = 0;
  std::int8_t x = 0;  // outcome, -1 or +1
  std::int8_t y = 0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct SimulationOptions {
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  bool confound = false;       // Alice's setting reuses the source draw's uniform
  unsigned threads = 1;
  std::uint64_t bob_setting_salt = 0;  // perturbs Bob's setting stream only
  bool record_hidden = false;
};

struct Spreadsheet {
  std::vector<TrialRecord> records;
  std::vector<std::uint32_t> hidden_trace;  // source atom per trial when recorded
};

struct ContextEstimate {
  std::optional<double> estimate;  // absent when no trial fell in the context
  double standard_error = 0.0;
  std::uint64_t count = 0;
};

struct CouplingStats {
  std::uint64_t samples = 0;
  std::array<std::uint64_t, 16> counts{};  // JointDistribution16 indexing
  std::uint64_t out_of_range = 0;          // samples whose CHSH combination is not +-2
  double min_running_mean = 0.0;
  double max_running_mean = 0.0;

  double correlation(Context context) const;
};

struct AssociationTest {
  std::string name;
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  std::uint64_t n = 0;
};

struct IndependenceReport {
  std::vector<AssociationTest> tests;
};

inline std::array<Rational, 4> uniform_setting_bias() {
  return {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)};
}

/// Zero outcomes pass through zero_to_coin first.
DagModel from_contextual(const ContextualModel& model, const std::array<Rational, 4>& setting_bias = uniform_setting_bias());

CorrelationQuad dag_exact_quad(const DagModel& dag);

HiddenDraw draw_hidden(const DagModel& dag, std::uint64_t seed, std::uint64_t trial);
int alice_outcome(const DagModel& dag, int setting, const HiddenDraw& hidden);
int bob_outcome(const DagModel& dag, int setting, const HiddenDraw& hidden);

/// Deterministic in (dag, trials, seed, confound, salt); the thread count does not
/// change the output.
Spreadsheet simulate_spreadsheet(const DagModel& dag, const SimulationOptions& options);

std::array<ContextEstimate, 4> estimate_correlations(const std::vector<TrialRecord>& records);

CouplingStats sample_coupling(const DagModel& dag, std::int64_t samples, std::uint64_t seed, unsigned threads = 1);

/// Chi-squared association between setting and outcome columns across sides,
/// lagged within a side, and (given a hidden trace) between settings and Lambda.
IndependenceReport independence_diagnostic(const std::vector<TrialRecord>& records,
                                           const std::vector<std::uint32_t>* hidden_trace = nullptr);

}  // namespace bell
