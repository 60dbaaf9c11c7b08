#include "chsh.hpp"

#include <cmath>
#include <vector>

#include "error.hpp"

namespace bell {

int ChshReport::worst() const {
  for (int k = 0; k < 8; ++k) {
    if (values[k].abs() == max_abs) return k;
  }
  return 0;
}

std::string describe_combination(int k, const std::array<Label, 2>& alice, const std::array<Label, 2>& bob) {
  const int odd = ChshReport::odd_term(k);
  const int sign = ChshReport::overall_sign(k);
  std::string out;
  for (Context ctx : kContexts) {
    const int term_sign = (ctx.index() == odd ? -1 : 1) * sign;
    if (out.empty()) {
      out += term_sign < 0 ? "-" : "";
    } else {
      out += term_sign < 0 ? " - " : " + ";
    }
    out += "E(" + alice[ctx.alice] + "," + bob[ctx.bob] + ")";
  }
  return out;
}

ChshReport chsh_values(const CorrelationQuad& quad) {
  Rational total;
  for (const auto& e : quad.e) {
    if (e < Rational(-1) || e > Rational(1)) fail(ErrorCode::kArgument, "correlation " + e.str() + " outside [-1, 1]");
    total += e;
  }

  ChshReport report;
  for (int k = 0; k < 8; ++k) {
    Rational value = total - Rational(2) * quad.e[ChshReport::odd_term(k)];
    if (ChshReport::overall_sign(k) < 0) value = -value;
    report.max_abs = max(report.max_abs, value.abs());
    report.values[k] = std::move(value);
  }
  report.satisfied = report.max_abs <= Rational(2);
  return report;
}

PostSelectionReport postselected_correlations(const BehaviorTable& behavior) {
  const auto issues = validate_behavior(behavior);
  if (!issues.ok()) fail(ErrorCode::kInvalidModel, issues.issues.front().path + ": " + issues.issues.front().message);

  PostSelectionReport report;
  report.raw = quad_from_behavior(behavior);
  report.raw_chsh = chsh_values(report.raw);

  CorrelationQuad conditional;
  bool all_defined = true;
  for (Context ctx : kContexts) {
    const auto& cell = behavior[ctx];
    Rational detected;
    Rational weighted;
    // Outcome slots 0 and 2 are +1 and -1.
    for (int i : {0, 2}) {
      for (int j : {0, 2}) {
        detected += cell[i][j];
        weighted += Rational(kOutcomeValues[i] * kOutcomeValues[j]) * cell[i][j];
      }
    }
    report.coincidence[ctx.index()] = detected;
    if (detected.is_zero()) {
      all_defined = false;
    } else {
      conditional[ctx] = weighted / detected;
      report.conditional[ctx.index()] = conditional[ctx];
    }
  }
  if (all_defined) report.conditional_chsh = chsh_values(conditional);

  for (int s = 0; s < 2; ++s) {
    Rational alice;
    Rational bob;
    for (int other = 0; other < 2; ++other) {
      const auto& a_cell = behavior[Context{s, other}];
      const auto& b_cell = behavior[Context{other, s}];
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (i != 1) alice += a_cell[i][j];
          if (j != 1) bob += b_cell[i][j];
        }
      }
    }
    report.single_rate[0][s] = alice / Rational(2);
    report.single_rate[1][s] = bob / Rational(2);
  }
  return report;
}

ContextualModel zero_to_coin(const ContextualModel& model) {
  require_valid(model);
  if (!has_point_outcomes(model)) fail(ErrorCode::kArgument, "zero_to_coin needs outcomes in {-1, 0, 1}");

  ContextualModel out = model;
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (auto& spec : out.side(side)) {
      spec.outcomes.ternary = false;
      bool has_zero = false;
      for (const auto& v : spec.outcomes.values) has_zero = has_zero || v.is_zero();
      if (!has_zero) continue;

      Pmf instrument;
      for (const auto& atom : spec.instrument.atoms) {
        instrument.atoms.push_back({atom.label + "/heads", atom.mass / Rational(2)});
        instrument.atoms.push_back({atom.label + "/tails", atom.mass / Rational(2)});
      }
      OutcomeTable table;
      table.rows = spec.outcomes.rows;
      for (const auto& col : spec.outcomes.cols) {
        table.cols.push_back(col + "/heads");
        table.cols.push_back(col + "/tails");
      }
      for (std::size_t r = 0; r < spec.outcomes.rows.size(); ++r) {
        for (std::size_t c = 0; c < spec.outcomes.cols.size(); ++c) {
          const Rational& v = spec.outcomes.at(r, c);
          table.values.push_back(v.is_zero() ? Rational(1) : v);
          table.values.push_back(v.is_zero() ? Rational(-1) : v);
        }
      }
      spec.instrument = std::move(instrument);
      spec.outcomes = std::move(table);
    }
  }
  return out;
}

SampleBound finite_sample_bound(std::int64_t trials, double observed) {
  if (trials < 1) fail(ErrorCode::kArgument, "finite_sample_bound needs at least one trial");
  if (!std::isfinite(observed) || observed < -4.0 || observed > 4.0) {
    fail(ErrorCode::kArgument, "observed CHSH value must lie in [-4, 4]");
  }
  const double excess = std::max(0.0, std::fabs(observed) - 2.0);
  SampleBound out;
  out.log_bound = -static_cast<double>(trials) * excess * excess / 32.0;
  out.bound = std::min(1.0, std::exp(out.log_bound));
  return out;
}

}  // namespace bell
