#include "model.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <utility>

#include "error.hpp"

namespace bell {

namespace {

const Rational kOne{1};
const Rational kMinusOne{-1};

std::string side_name(Side side) { return side == Side::kAlice ? "alice" : "bob"; }

std::string setting_path(Side side, const SettingSpec& spec) { return side_name(side) + "[" + spec.name + "]"; }

void check_masses(const std::vector<Rational>& masses, const std::string& path, ValidationReport& report) {
  Rational total;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (masses[i].sign() < 0) {
      report.issues.push_back({path + "[" + std::to_string(i) + "]", "negative mass " + masses[i].str()});
    }
    total += masses[i];
  }
  if (masses.empty()) {
    report.issues.push_back({path, "empty pmf"});
  } else if (total != kOne) {
    report.issues.push_back({path, "masses sum to " + total.str() + " (deficit " + (kOne - total).str() + ")"});
  }
}

template <class Range>
std::unordered_map<Label, std::size_t> index_of(const Range& labels) {
  std::unordered_map<Label, std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.emplace(labels[i], i);
  return out;
}

bool same_label_set(const std::vector<Label>& a, const std::vector<Label>& b) {
  return std::set<Label>(a.begin(), a.end()) == std::set<Label>(b.begin(), b.end());
}

void validate_setting(Side side, const SettingSpec& spec, const std::vector<Label>& source_labels,
                      ValidationReport& report) {
  const std::string base = setting_path(side, spec);

  std::vector<Rational> masses;
  std::vector<Label> inst_labels;
  for (const auto& atom : spec.instrument.atoms) {
    masses.push_back(atom.mass);
    inst_labels.push_back(atom.label);
  }
  check_masses(masses, base + ".instrument", report);
  if (std::set<Label>(inst_labels.begin(), inst_labels.end()).size() != inst_labels.size()) {
    report.issues.push_back({base + ".instrument", "duplicate instrument labels"});
  }

  const auto& table = spec.outcomes;
  if (std::set<Label>(table.rows.begin(), table.rows.end()).size() != table.rows.size()) {
    report.issues.push_back({base + ".outcomes.rows", "duplicate row labels"});
  }
  if (std::set<Label>(table.cols.begin(), table.cols.end()).size() != table.cols.size()) {
    report.issues.push_back({base + ".outcomes.cols", "duplicate column labels"});
  }
  if (!same_label_set(table.rows, source_labels)) {
    report.issues.push_back({base + ".outcomes.rows", "rows do not match the source coordinate labels"});
  }
  if (!same_label_set(table.cols, inst_labels)) {
    report.issues.push_back({base + ".outcomes.cols", "columns do not match the instrument labels"});
  }
  if (table.values.size() != table.rows.size() * table.cols.size()) {
    report.issues.push_back({base + ".outcomes", "expected " + std::to_string(table.rows.size() * table.cols.size()) +
                                                     " entries, found " + std::to_string(table.values.size())});
    return;
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.cols.size(); ++c) {
      const Rational& v = table.at(r, c);
      const std::string cell = base + ".outcomes[" + table.rows[r] + "," + table.cols[c] + "]";
      if (v < kMinusOne || v > kOne) {
        report.issues.push_back({cell, "outcome " + v.str() + " outside [-1, 1]"});
      } else if (table.ternary && !(v == kOne || v == kMinusOne || v.is_zero())) {
        report.issues.push_back({cell, "outcome " + v.str() + " not in {-1, 0, 1} for a ternary table"});
      }
    }
  }
}

}  // namespace

Rational Pmf::total() const {
  Rational sum;
  for (const auto& a : atoms) sum += a.mass;
  return sum;
}

Rational SourcePmf::total() const {
  Rational sum;
  for (const auto& a : atoms) sum += a.mass;
  return sum;
}

std::vector<Label> SourcePmf::coordinate_labels(Side side) const {
  std::vector<Label> out;
  std::set<Label> seen;
  for (const auto& a : atoms) {
    const Label& l = side == Side::kAlice ? a.first : a.second;
    if (seen.insert(l).second) out.push_back(l);
  }
  return out;
}

bool FactorizationReport::all_factorizable() const {
  return std::all_of(factorizable.begin(), factorizable.end(), [](bool b) { return b; });
}

ValidationReport validate_model(const ContextualModel& model) {
  ValidationReport report;

  std::vector<Rational> masses;
  std::set<std::pair<Label, Label>> pairs;
  for (const auto& atom : model.source.atoms) {
    masses.push_back(atom.mass);
    if (!pairs.emplace(atom.first, atom.second).second) {
      report.issues.push_back({"source", "duplicate source pair (" + atom.first + ", " + atom.second + ")"});
    }
  }
  check_masses(masses, "source", report);

  for (Side side : {Side::kAlice, Side::kBob}) {
    const auto& settings = model.side(side);
    if (settings[0].name == settings[1].name) {
      report.issues.push_back({side_name(side), "setting names must differ"});
    }
    const auto labels = model.source.coordinate_labels(side);
    for (const auto& spec : settings) validate_setting(side, spec, labels, report);
  }
  return report;
}

ValidationReport validate_behavior(const BehaviorTable& behavior) {
  ValidationReport report;
  for (Context ctx : kContexts) {
    const std::string path = "contexts[" + behavior.alice_settings[ctx.alice] + "," + behavior.bob_settings[ctx.bob] + "]";
    Rational total;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const Rational& v = behavior[ctx][i][j];
        if (v.sign() < 0) report.issues.push_back({path, "negative probability " + v.str()});
        if (!behavior.ternary && (i == 1 || j == 1) && !v.is_zero()) {
          report.issues.push_back({path, "zero outcome carries mass in a binary table"});
        }
        total += v;
      }
    }
    if (total != kOne) {
      report.issues.push_back({path, "probabilities sum to " + total.str() + " (deficit " + (kOne - total).str() + ")"});
    }
  }
  return report;
}

void require_valid(const ContextualModel& model) {
  const auto report = validate_model(model);
  if (!report.ok()) {
    fail(ErrorCode::kInvalidModel, report.issues.front().path + ": " + report.issues.front().message);
  }
}

AlignedModel align(const ContextualModel& model) {
  AlignedModel out;
  for (const auto& atom : model.source.atoms) out.source_mass.push_back(atom.mass);

  for (Side side : {Side::kAlice, Side::kBob}) {
    for (int s = 0; s < 2; ++s) {
      const SettingSpec& spec = model.side(side)[s];
      AlignedSetting& aligned = side == Side::kAlice ? out.alice[s] : out.bob[s];
      const auto rows = index_of(spec.outcomes.rows);
      const auto cols = index_of(spec.outcomes.cols);
      if (spec.outcomes.values.size() != spec.outcomes.rows.size() * spec.outcomes.cols.size()) {
        fail(ErrorCode::kDomain, setting_path(side, spec) + ": outcome table has the wrong number of entries");
      }

      std::vector<std::size_t> col_of_atom;
      for (const auto& atom : spec.instrument.atoms) {
        auto it = cols.find(atom.label);
        if (it == cols.end()) {
          fail(ErrorCode::kDomain, setting_path(side, spec) + ": no outcome column for instrument label " + atom.label);
        }
        col_of_atom.push_back(it->second);
        aligned.instrument_mass.push_back(atom.mass);
      }
      for (const auto& src : model.source.atoms) {
        const Label& key = side == Side::kAlice ? src.first : src.second;
        auto it = rows.find(key);
        if (it == rows.end()) {
          fail(ErrorCode::kDomain, setting_path(side, spec) + ": no outcome row for source label " + key);
        }
        std::vector<Rational> row;
        row.reserve(col_of_atom.size());
        for (std::size_t c : col_of_atom) row.push_back(spec.outcomes.at(it->second, c));
        aligned.outcome.push_back(std::move(row));
      }
    }
  }
  return out;
}

Rational exact_expectation(const ContextualModel& model, Context context) {
  const AlignedModel m = align(model);
  const AlignedSetting& a = m.alice[context.alice];
  const AlignedSetting& b = m.bob[context.bob];

  Rational sum;
  for (std::size_t s = 0; s < m.source_mass.size(); ++s) {
    for (std::size_t i = 0; i < a.instrument_mass.size(); ++i) {
      if (a.outcome[s][i].is_zero()) continue;
      for (std::size_t j = 0; j < b.instrument_mass.size(); ++j) {
        sum += a.outcome[s][i] * b.outcome[s][j] * a.instrument_mass[i] * b.instrument_mass[j] * m.source_mass[s];
      }
    }
  }
  return sum;
}

CorrelationQuad exact_quad(const ContextualModel& model) {
  CorrelationQuad quad;
  for (Context ctx : kContexts) quad[ctx] = exact_expectation(model, ctx);
  return quad;
}

Rational exact_single_expectation(const ContextualModel& model, Side side, int setting) {
  const AlignedModel m = align(model);
  const AlignedSetting& a = side == Side::kAlice ? m.alice[setting] : m.bob[setting];
  Rational sum;
  for (std::size_t s = 0; s < m.source_mass.size(); ++s) {
    for (std::size_t i = 0; i < a.instrument_mass.size(); ++i) {
      sum += a.outcome[s][i] * a.instrument_mass[i] * m.source_mass[s];
    }
  }
  return sum;
}

ContextualModel counterexample_model() {
  ContextualModel model;
  std::vector<Label> lambdas;
  for (int lambda = 1; lambda <= 6; ++lambda) {
    const Label l = std::to_string(lambda);
    lambdas.push_back(l);
    model.source.atoms.push_back({l, l, Rational(1, 6)});
  }

  const std::array<int, 2> settings = {+1, -1};
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (int s = 0; s < 2; ++s) {
      SettingSpec& spec = model.side(side)[s];
      spec.name = settings[s] > 0 ? "+1" : "-1";
      spec.instrument.atoms = {{"*", Rational(1)}};
      spec.outcomes.rows = lambdas;
      spec.outcomes.cols = {"*"};
      for (int lambda = 1; lambda <= 6; ++lambda) {
        const int power = side == Side::kAlice ? lambda : lambda + 1;
        const bool flips = settings[s] < 0 && power % 2 == 1;
        spec.outcomes.values.emplace_back(flips ? -1 : 1);
      }
    }
  }
  return model;
}

bool has_point_outcomes(const ContextualModel& model) {
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (const auto& spec : model.side(side)) {
      for (const auto& v : spec.outcomes.values) {
        if (!(v == kOne || v == kMinusOne || v.is_zero())) return false;
      }
    }
  }
  return true;
}

bool has_zero_outcomes(const ContextualModel& model) {
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (const auto& spec : model.side(side)) {
      for (const auto& v : spec.outcomes.values) {
        if (v.is_zero()) return true;
      }
    }
  }
  return false;
}

BehaviorTable behavior_from_model(const ContextualModel& model) {
  require_valid(model);
  if (!has_point_outcomes(model)) {
    fail(ErrorCode::kArgument, "behavior requires point outcomes in {-1, 0, 1}; fractional tables are expectations");
  }
  const AlignedModel m = align(model);

  BehaviorTable behavior;
  for (int s = 0; s < 2; ++s) {
    behavior.alice_settings[s] = model.alice[s].name;
    behavior.bob_settings[s] = model.bob[s].name;
  }
  behavior.ternary = has_zero_outcomes(model);
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (const auto& spec : model.side(side)) behavior.ternary = behavior.ternary || spec.outcomes.ternary;
  }

  // Row/column index in kOutcomeValues: +1 -> 0, 0 -> 1, -1 -> 2.
  auto slot = [](const Rational& v) { return 1 - v.sign(); };
  for (Context ctx : kContexts) {
    const AlignedSetting& a = m.alice[ctx.alice];
    const AlignedSetting& b = m.bob[ctx.bob];
    auto& cell = behavior[ctx];
    for (std::size_t s = 0; s < m.source_mass.size(); ++s) {
      for (std::size_t i = 0; i < a.instrument_mass.size(); ++i) {
        const Rational left = m.source_mass[s] * a.instrument_mass[i];
        for (std::size_t j = 0; j < b.instrument_mass.size(); ++j) {
          cell[slot(a.outcome[s][i])][slot(b.outcome[s][j])] += left * b.instrument_mass[j];
        }
      }
    }
  }
  return behavior;
}

CorrelationQuad quad_from_behavior(const BehaviorTable& behavior) {
  CorrelationQuad quad;
  for (Context ctx : kContexts) {
    Rational sum;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int product = kOutcomeValues[i] * kOutcomeValues[j];
        if (product != 0) sum += Rational(product) * behavior[ctx][i][j];
      }
    }
    quad[ctx] = sum;
  }
  return quad;
}

FactorizationReport is_setting_factorizable(const NonlocalPairModel& model, const Rational& tolerance) {
  FactorizationReport report;
  for (Context ctx : kContexts) {
    const SourcePmf& pmf = model.joint[ctx.index()];
    std::map<Label, Rational> left;
    std::map<Label, Rational> right;
    std::map<std::pair<Label, Label>, Rational> joint;
    for (const auto& atom : pmf.atoms) {
      left[atom.first] += atom.mass;
      right[atom.second] += atom.mass;
      joint[{atom.first, atom.second}] += atom.mass;
    }
    Rational worst;
    for (const auto& [u, pu] : left) {
      for (const auto& [v, pv] : right) {
        auto it = joint.find({u, v});
        const Rational actual = it == joint.end() ? Rational() : it->second;
        worst = max(worst, (actual - pu * pv).abs());
      }
    }
    report.max_deviation[ctx.index()] = worst;
    report.factorizable[ctx.index()] = worst <= tolerance;
  }
  return report;
}

Rational nonlocal_expectation(const NonlocalPairModel& model, Context context) {
  const auto& a = model.alice_outcome[context.alice];
  const auto& b = model.bob_outcome[context.bob];
  Rational sum;
  for (const auto& atom : model.joint[context.index()].atoms) {
    auto ia = a.find(atom.first);
    auto ib = b.find(atom.second);
    if (ia == a.end() || ib == b.end()) {
      fail(ErrorCode::kDomain, "nonlocal model has no outcome for (" + atom.first + ", " + atom.second + ")");
    }
    sum += ia->second * ib->second * atom.mass;
  }
  return sum;
}

}  // namespace bell
