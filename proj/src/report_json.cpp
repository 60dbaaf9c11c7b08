#include "report_json.hpp"

#include <cstdio>

namespace bell {

namespace {

Json rational_or_null(const std::optional<Rational>& v) { return v ? Json(v->str()) : Json(nullptr); }

const char* side_name(int side) { return side == 0 ? "alice" : "bob"; }

}  // namespace

std::string decimal(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Json quad_json(const CorrelationQuad& quad, const std::array<Label, 2>& alice, const std::array<Label, 2>& bob) {
  Json out = Json::array();
  for (Context ctx : kContexts) {
    out.push_back({{"alice", alice[ctx.alice]}, {"bob", bob[ctx.bob]}, {"value", quad[ctx].str()}});
  }
  return out;
}

Json chsh_json(const ChshReport& report, const std::array<Label, 2>& alice, const std::array<Label, 2>& bob) {
  Json values = Json::array();
  for (int k = 0; k < 8; ++k) {
    values.push_back({{"index", k},
                      {"combination", describe_combination(k, alice, bob)},
                      {"value", report.values[k].str()},
                      {"satisfied", report.values[k] <= Rational(2)}});
  }
  return {{"values", std::move(values)},
          {"maxAbs", report.max_abs.str()},
          {"maxAbsDecimal", decimal(report.max_abs.to_double())},
          {"worst", report.worst()},
          {"satisfied", report.satisfied}};
}

Json postselection_json(const PostSelectionReport& report, const std::array<Label, 2>& alice,
                        const std::array<Label, 2>& bob) {
  Json contexts = Json::array();
  for (Context ctx : kContexts) {
    contexts.push_back({{"alice", alice[ctx.alice]},
                        {"bob", bob[ctx.bob]},
                        {"raw", report.raw[ctx].str()},
                        {"conditional", rational_or_null(report.conditional[ctx.index()])},
                        {"coincidence", report.coincidence[ctx.index()].str()}});
  }
  Json singles = Json::array();
  for (int side = 0; side < 2; ++side) {
    for (int s = 0; s < 2; ++s) {
      singles.push_back({{"side", side_name(side)},
                         {"setting", (side == 0 ? alice : bob)[s]},
                         {"rate", report.single_rate[side][s].str()}});
    }
  }
  return {{"contexts", std::move(contexts)},
          {"singles", std::move(singles)},
          {"rawChsh", chsh_json(report.raw_chsh, alice, bob)},
          {"conditionalChsh", report.conditional_chsh ? chsh_json(*report.conditional_chsh, alice, bob) : Json(nullptr)}};
}

Json sample_bound_json(std::int64_t trials, const SampleBound& bound) {
  return {{"trials", trials}, {"logBound", decimal(bound.log_bound)}, {"bound", decimal(bound.bound)}};
}

Json joint_json(const JointDistribution16& joint) {
  Json out = Json::array();
  for (int i = 0; i < 16; ++i) {
    Json outcome = Json::array();
    for (int c = 0; c < 4; ++c) outcome.push_back(JointDistribution16::outcome(i, c));
    out.push_back({{"outcome", std::move(outcome)}, {"mass", joint.mass[i].str()}});
  }
  return out;
}

Json no_signalling_json(const NoSignallingReport& report, const BehaviorTable& behavior) {
  Json comparisons = Json::array();
  for (const auto& c : report.comparisons) {
    const int side = c.side == Side::kAlice ? 0 : 1;
    const auto& other = side == 0 ? behavior.bob_settings : behavior.alice_settings;
    Json marginals = Json::array();
    for (int o = 0; o < 2; ++o) {
      marginals.push_back({{"otherSetting", other[o]}, {"plus", c.marginal[o][0].str()}, {"minus", c.marginal[o][1].str()}});
    }
    comparisons.push_back({{"side", side_name(side)},
                           {"setting", (side == 0 ? behavior.alice_settings : behavior.bob_settings)[c.setting]},
                           {"marginals", std::move(marginals)},
                           {"difference", c.difference.str()}});
  }
  return {{"comparisons", std::move(comparisons)}, {"maxDeviation", report.max_deviation.str()}, {"holds", report.holds}};
}

Json fine_json(const FineResult& result, const BehaviorTable& behavior) {
  const auto& a = behavior.alice_settings;
  const auto& b = behavior.bob_settings;
  Json out;
  out["feasible"] = result.feasible;
  out["coordinates"] = {"A_" + a[0], "A_" + a[1], "B_" + b[0], "B_" + b[1]};
  out["joint"] = result.joint ? joint_json(*result.joint) : Json(nullptr);
  if (result.certificate) {
    out["certificate"] = {{"index", *result.certificate},
                          {"combination", describe_combination(*result.certificate, a, b)},
                          {"value", result.chsh.values[*result.certificate].str()}};
  } else {
    out["certificate"] = nullptr;
  }
  out["chsh"] = chsh_json(result.chsh, a, b);
  out["pivots"] = result.pivots;
  return out;
}

Json rates_json(const DetectionRates& rates, const ContextualModel& model) {
  Json out = Json::array();
  for (int side = 0; side < 2; ++side) {
    for (int s = 0; s < 2; ++s) {
      const int cmp = rates.versus_two_thirds[side][s];
      out.push_back({{"side", side_name(side)},
                     {"setting", model.side(side == 0 ? Side::kAlice : Side::kBob)[s].name},
                     {"rate", rates.rate[side][s].str()},
                     {"rateDecimal", decimal(rates.rate[side][s].to_double())},
                     {"versusTwoThirds", cmp < 0 ? "below" : (cmp == 0 ? "equal" : "above")}});
    }
  }
  return out;
}

Json estimates_json(const std::array<ContextEstimate, 4>& estimates, const CorrelationQuad& exact, const DagModel& dag) {
  Json out = Json::array();
  for (Context ctx : kContexts) {
    const auto& e = estimates[ctx.index()];
    out.push_back({{"alice", dag.alice_settings[ctx.alice]},
                   {"bob", dag.bob_settings[ctx.bob]},
                   {"count", e.count},
                   {"estimate", e.estimate ? Json(decimal(*e.estimate)) : Json(nullptr)},
                   {"standardError", decimal(e.standard_error)},
                   {"exact", exact[ctx].str()}});
  }
  return out;
}

Json independence_json(const IndependenceReport& report) {
  Json out = Json::array();
  for (const auto& t : report.tests) {
    out.push_back({{"name", t.name},
                   {"statistic", decimal(t.statistic)},
                   {"degreesOfFreedom", t.degrees_of_freedom},
                   {"pValue", decimal(t.p_value)},
                   {"n", t.n}});
  }
  return out;
}

Json search_json(const SearchResult& result, const SearchConfig& config) {
  const auto names = [&](Side side) {
    return std::array<Label, 2>{result.model.side(side)[0].name, result.model.side(side)[1].name};
  };
  const auto alice = names(Side::kAlice);
  const auto bob = names(Side::kBob);
  Json cfg = {{"seed", config.seed},
              {"budget", config.budget},
              {"restarts", config.restarts},
              {"sourceAtoms", config.source_atoms},
              {"instrumentAtoms", config.instrument_atoms},
              {"minCoincidence", config.min_coincidence.str()},
              {"maxDetection", config.max_detection.str()},
              {"grid", kSearchGrid}};
  return {{"config", std::move(cfg)},
          {"constraintsMet", result.constraints_met},
          {"violating", result.violating},
          {"bestScore", decimal(result.best_score)},
          {"winningRestart", result.winning_restart},
          {"postSelection", postselection_json(result.report, alice, bob)},
          {"detectionRates", rates_json(result.rates, result.model)},
          {"coinFlipChsh", chsh_json(result.coin_flip_chsh, alice, bob)}};
}

std::string spreadsheet_csv(const Spreadsheet& sheet) {
  std::string out = "trial,a,b,x,y\n";
  out.reserve(out.size() + sheet.records.size() * 20);
  char line[64];
  for (std::size_t t = 0; t < sheet.records.size(); ++t) {
    const auto& r = sheet.records[t];
    const int n = std::snprintf(line, sizeof line, "%zu,%d,%d,%d,%d\n", t + 1, r.a + 1, r.b + 1, int{r.x}, int{r.y});
    out.append(line, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace bell
