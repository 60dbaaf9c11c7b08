#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "rational.hpp"

namespace bell {

using Label = std::string;

enum class Side { kAlice = 0, kBob = 1 };

/// Joint setting choice. Index 0 is the unprimed setting (x or y), 1 the primed one.
struct Context {
  int alice = 0;
  int bob = 0;

  constexpr int index() const { return 2 * alice + bob; }
  friend constexpr bool operator==(Context, Context) = default;
};

/// Contexts in canonical order: xy, xy', x'y, x'y'.
inline constexpr std::array<Context, 4> kContexts = {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

struct Atom {
  Label label;
  Rational mass;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Pmf {
  std::vector<Atom> atoms;

  Rational total() const;
  friend bool operator==(const Pmf&, const Pmf&) = default;
};

struct SourceAtom {
  Label first;
  Label second;
  Rational mass;

  friend bool operator==(const SourceAtom&, const SourceAtom&) = default;
};

/// Joint pmf of the source pair (lambda1, lambda2).
struct SourcePmf {
  std::vector<SourceAtom> atoms;

  Rational total() const;
  /// Distinct first (or second) coordinate labels, in order of first appearance.
  std::vector<Label> coordinate_labels(Side side) const;
  friend bool operator==(const SourcePmf&, const SourcePmf&) = default;
};

/// Outcome function of one setting, tabulated over
/// (source coordinate label) x (instrument label), row-major.
struct OutcomeTable {
  std::vector<Label> rows;
  std::vector<Label> cols;
  std::vector<Rational> values;
  bool ternary = false;

  const Rational& at(std::size_t row, std::size_t col) const { return values[row * cols.size() + col]; }
  Rational& at(std::size_t row, std::size_t col) { return values[row * cols.size() + col]; }
  friend bool operator==(const OutcomeTable&, const OutcomeTable&) = default;
};

struct SettingSpec {
  Label name;
  Pmf instrument;
  OutcomeTable outcomes;

  friend bool operator==(const SettingSpec&, const SettingSpec&) = default;
};

/// Source pmf, per-setting instrument pmfs and per-setting outcome tables;
/// two settings per side.
struct ContextualModel {
  SourcePmf source;
  std::array<SettingSpec, 2> alice;
  std::array<SettingSpec, 2> bob;

  const std::array<SettingSpec, 2>& side(Side s) const { return s == Side::kAlice ? alice : bob; }
  std::array<SettingSpec, 2>& side(Side s) { return s == Side::kAlice ? alice : bob; }
  friend bool operator==(const ContextualModel&, const ContextualModel&) = default;
};

struct CorrelationQuad {
  std::array<Rational, 4> e;  // indexed by Context::index()

  const Rational& operator[](Context c) const { return e[c.index()]; }
  Rational& operator[](Context c) { return e[c.index()]; }
  friend bool operator==(const CorrelationQuad&, const CorrelationQuad&) = default;
};

/// Outcome symbols in table order.
inline constexpr std::array<int, 3> kOutcomeValues = {+1, 0, -1};

/// The four observable distributions P(x, y | a, b). Rows and columns follow
/// kOutcomeValues; binary tables carry zeros in the 0 row and column.
struct BehaviorTable {
  using Cell = std::array<std::array<Rational, 3>, 3>;

  std::array<Label, 2> alice_settings{"x", "x'"};
  std::array<Label, 2> bob_settings{"y", "y'"};
  bool ternary = false;
  std::array<Cell, 4> p{};

  const Cell& operator[](Context c) const { return p[c.index()]; }
  Cell& operator[](Context c) { return p[c.index()]; }
  friend bool operator==(const BehaviorTable&, const BehaviorTable&) = default;
};

/// Hidden-variable model whose pair distribution may depend on both settings.
struct NonlocalPairModel {
  std::array<Label, 2> alice_settings{"x", "x'"};
  std::array<Label, 2> bob_settings{"y", "y'"};
  std::array<SourcePmf, 4> joint;  // per context, over (lambda_i, lambda_j)
  std::array<std::map<Label, Rational>, 2> alice_outcome;
  std::array<std::map<Label, Rational>, 2> bob_outcome;
};

struct ValidationIssue {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
};

struct FactorizationReport {
  std::array<bool, 4> factorizable{};
  std::array<Rational, 4> max_deviation{};

  bool all_factorizable() const;
};

ValidationReport validate_model(const ContextualModel& model);
ValidationReport validate_behavior(const BehaviorTable& behavior);

/// Throws kInvalidModel with the first issue when the model is malformed.
void require_valid(const ContextualModel& model);

/// Sum over (lambda1, lambda2, lambda_a, lambda_b) of A_a * B_b * p_a * p_b * p.
Rational exact_expectation(const ContextualModel& model, Context context);
CorrelationQuad exact_quad(const ContextualModel& model);

/// Expectation of one side's outcome alone at one setting.
Rational exact_single_expectation(const ContextualModel& model, Side side, int setting);

/// Die-and-coins model: lambda uniform on 1..6, A(a, lambda) = a^lambda,
/// B(b, lambda) = b^(lambda + 1), settings a, b in {+1, -1}.
ContextualModel counterexample_model();

/// True when every table entry is -1, 0 or +1.
bool has_point_outcomes(const ContextualModel& model);
bool has_zero_outcomes(const ContextualModel& model);

BehaviorTable behavior_from_model(const ContextualModel& model);
CorrelationQuad quad_from_behavior(const BehaviorTable& behavior);

/// Whether each context's pair pmf equals the product of its own marginals,
/// up to `tolerance` per cell (exact when zero).
FactorizationReport is_setting_factorizable(const NonlocalPairModel& model, const Rational& tolerance);
Rational nonlocal_expectation(const NonlocalPairModel& model, Context context);

/// Per-atom outcome lookup aligned to source atoms and instrument atoms,
/// shared by every module that enumerates a ContextualModel.
struct AlignedSetting {
  std::vector<Rational> instrument_mass;
  // outcome[source atom][instrument atom]
  std::vector<std::vector<Rational>> outcome;
};

struct AlignedModel {
  std::vector<Rational> source_mass;
  std::array<AlignedSetting, 2> alice;
  std::array<AlignedSetting, 2> bob;
};

/// Throws kDomain when a table lookup fails.
AlignedModel align(const ContextualModel& model);

}  // namespace bell
