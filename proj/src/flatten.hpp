#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "model.hpp"

namespace bell {

struct FlatAtom {
  std::vector<std::size_t> coords;  // index into FlatModel::coordinate_labels[k]
  Rational mass;
  std::array<Rational, 2> alice;  // outcome per Alice setting
  std::array<Rational, 2> bob;

  friend bool operator==(const FlatAtom&, const FlatAtom&) = default;
};

/// Single setting-independent hidden-variable space with two outcome
/// functions of (setting, tuple), tabulated per atom.
struct FlatModel {
  std::array<Label, 2> alice_settings{"x", "x'"};
  std::array<Label, 2> bob_settings{"y", "y'"};
  std::vector<std::string> coordinate_names;
  std::vector<std::vector<Label>> coordinate_labels;
  std::vector<FlatAtom> atoms;

  friend bool operator==(const FlatModel&, const FlatModel&) = default;
};

/// Source pmf plus instrument-averaged outcome functions of one source coordinate.
struct AveragedModel {
  SourcePmf source;
  std::array<Label, 2> alice_settings{"x", "x'"};
  std::array<Label, 2> bob_settings{"y", "y'"};
  std::vector<Label> alice_rows;  // lambda1 labels
  std::vector<Label> bob_rows;    // lambda2 labels
  std::array<std::vector<Rational>, 2> alice_bar;
  std::array<std::vector<Rational>, 2> bob_bar;

  friend bool operator==(const AveragedModel&, const AveragedModel&) = default;
};

enum class Refinement {
  kCommonBreakpoints,  // merge the cumulative breakpoints of both settings
  kUniformGrid,        // equal cells of width 1/L, L the lcm of breakpoint denominators
};

/// Partition of [0, 1) into cells, each mapped to one instrument atom per setting
/// by the inverse CDF with half-open intervals [lo, hi).
struct QuantileRefinement {
  std::vector<Rational> breakpoints;  // 0 = b0 < b1 < ... < bn = 1
  std::vector<Rational> lengths;      // n cells
  std::array<std::vector<std::size_t>, 2> atom_of_cell;
};

QuantileRefinement quantile_refinement(const Pmf& first, const Pmf& second, Refinement method);

FlatModel product_flatten(const ContextualModel& model);
FlatModel uniform_reduce(const ContextualModel& model, Refinement method = Refinement::kCommonBreakpoints);
AveragedModel bell_average(const ContextualModel& model);

ValidationReport validate_flat(const FlatModel& model);
ValidationReport validate_averaged(const AveragedModel& model);

Rational flat_expectation(const FlatModel& model, Context context);
CorrelationQuad flat_quad(const FlatModel& model);
Rational averaged_expectation(const AveragedModel& model, Context context);
CorrelationQuad averaged_quad(const AveragedModel& model);

}  // namespace bell
