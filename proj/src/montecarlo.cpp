#include "montecarlo.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace bell {

namespace {

enum Stream : std::uint64_t {
  kAliceSetting = 1,
  kBobSetting = 2,
  kSource = 3,
  kAliceInstrument = 4,
  kBobInstrument = 5,
};

std::vector<double> upper_ends(const std::vector<Rational>& masses) {
  std::vector<double> out;
  Rational running;
  for (const auto& m : masses) {
    running += m;
    out.push_back(running.to_double());
  }
  if (!out.empty()) out.back() = 1.0;
  return out;
}

std::size_t pick(const std::vector<double>& upper, double u) {
  auto it = std::upper_bound(upper.begin(), upper.end(), u);
  if (it == upper.end()) return upper.size() - 1;
  return static_cast<std::size_t>(it - upper.begin());
}

DagModel::SideTables side_tables(const ContextualModel& model, const AlignedModel& aligned, Side side) {
  DagModel::SideTables out;
  const auto& specs = model.side(side);
  out.cells = quantile_refinement(specs[0].instrument, specs[1].instrument, Refinement::kCommonBreakpoints);
  out.cell_upper = upper_ends(out.cells.lengths);
  for (int s = 0; s < 2; ++s) {
    const AlignedSetting& a = side == Side::kAlice ? aligned.alice[s] : aligned.bob[s];
    for (std::size_t src = 0; src < aligned.source_mass.size(); ++src) {
      std::vector<Rational> row;
      std::vector<double> thresholds;
      for (std::size_t cell = 0; cell < out.cells.lengths.size(); ++cell) {
        const Rational& o = a.outcome[src][out.cells.atom_of_cell[s][cell]];
        row.push_back(o);
        thresholds.push_back(((o + Rational(1)) / Rational(2)).to_double());
      }
      out.outcome[s].push_back(std::move(row));
      out.plus_threshold[s].push_back(std::move(thresholds));
    }
  }
  return out;
}

template <class Fn>
void parallel_ranges(std::int64_t total, unsigned threads, Fn&& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || total < 2 * static_cast<std::int64_t>(threads)) {
    fn(std::int64_t{0}, total, 0u);
    return;
  }
  std::vector<std::thread> workers;
  const std::int64_t chunk = (total + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::int64_t lo = std::min<std::int64_t>(total, w * chunk);
    const std::int64_t hi = std::min<std::int64_t>(total, lo + chunk);
    workers.emplace_back([&fn, lo, hi, w] { fn(lo, hi, w); });
  }
  for (auto& t : workers) t.join();
}

AssociationTest chi_squared(std::string name, const std::vector<std::vector<std::uint64_t>>& table) {
  AssociationTest test;
  test.name = std::move(name);
  std::vector<double> row_sum(table.size(), 0.0);
  std::vector<double> col_sum(table.empty() ? 0 : table.front().size(), 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      row_sum[i] += static_cast<double>(table[i][j]);
      col_sum[j] += static_cast<double>(table[i][j]);
      n += static_cast<double>(table[i][j]);
    }
  }
  test.n = static_cast<std::uint64_t>(n);
  const auto nonzero = [](const std::vector<double>& v) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
  };
  test.degrees_of_freedom = std::max(0, (nonzero(row_sum) - 1) * (nonzero(col_sum) - 1));
  if (test.degrees_of_freedom == 0) return test;

  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      const double expected = row_sum[i] * col_sum[j] / n;
      if (expected <= 0.0) continue;
      const double diff = static_cast<double>(table[i][j]) - expected;
      test.statistic += diff * diff / expected;
    }
  }
  test.p_value = boost::math::gamma_q(test.degrees_of_freedom / 2.0, test.statistic / 2.0);
  return test;
}

}  // namespace

double CouplingStats::correlation(Context context) const {
  if (samples == 0) return 0.0;
  double sum = 0.0;
  for (int idx = 0; idx < 16; ++idx) {
    const int x = (idx >> (3 - context.alice)) & 1 ? -1 : 1;
    const int y = (idx >> (1 - context.bob)) & 1 ? -1 : 1;
    sum += static_cast<double>(x * y) * static_cast<double>(counts[idx]);
  }
  return sum / static_cast<double>(samples);
}

DagModel from_contextual(const ContextualModel& input, const std::array<Rational, 4>& setting_bias) {
  Rational total;
  for (const auto& p : setting_bias) {
    if (p.sign() < 0) fail(ErrorCode::kArgument, "negative setting probability " + p.str());
    total += p;
  }
  if (total != Rational(1)) fail(ErrorCode::kArgument, "setting probabilities sum to " + total.str());

  require_valid(input);
  const ContextualModel model = has_point_outcomes(input) && has_zero_outcomes(input) ? zero_to_coin(input) : input;
  const AlignedModel aligned = align(model);

  DagModel dag;
  for (int s = 0; s < 2; ++s) {
    dag.alice_settings[s] = model.alice[s].name;
    dag.bob_settings[s] = model.bob[s].name;
  }
  dag.setting_bias = setting_bias;
  dag.source_mass = aligned.source_mass;
  dag.source_upper = upper_ends(dag.source_mass);
  dag.alice = side_tables(model, aligned, Side::kAlice);
  dag.bob = side_tables(model, aligned, Side::kBob);
  return dag;
}

CorrelationQuad dag_exact_quad(const DagModel& dag) {
  CorrelationQuad quad;
  for (Context ctx : kContexts) {
    Rational sum;
    for (std::size_t s = 0; s < dag.source_mass.size(); ++s) {
      for (std::size_t c1 = 0; c1 < dag.alice.cells.lengths.size(); ++c1) {
        const Rational& a = dag.alice.outcome[ctx.alice][s][c1];
        if (a.is_zero()) continue;
        const Rational left = dag.source_mass[s] * dag.alice.cells.lengths[c1] * a;
        for (std::size_t c2 = 0; c2 < dag.bob.cells.lengths.size(); ++c2) {
          sum += left * dag.bob.cells.lengths[c2] * dag.bob.outcome[ctx.bob][s][c2];
        }
      }
    }
    quad[ctx] = sum;
  }
  return quad;
}

HiddenDraw draw_hidden(const DagModel& dag, std::uint64_t seed, std::uint64_t trial) {
  const CounterRng source(seed, kSource);
  const CounterRng alice(seed, kAliceInstrument);
  const CounterRng bob(seed, kBobInstrument);
  HiddenDraw h;
  h.source = pick(dag.source_upper, source.uniform(trial));
  h.alice_cell = pick(dag.alice.cell_upper, alice.uniform(2 * trial));
  h.alice_aux = alice.uniform(2 * trial + 1);
  h.bob_cell = pick(dag.bob.cell_upper, bob.uniform(2 * trial));
  h.bob_aux = bob.uniform(2 * trial + 1);
  return h;
}

int alice_outcome(const DagModel& dag, int setting, const HiddenDraw& hidden) {
  return hidden.alice_aux < dag.alice.plus_threshold[setting][hidden.source][hidden.alice_cell] ? +1 : -1;
}

int bob_outcome(const DagModel& dag, int setting, const HiddenDraw& hidden) {
  return hidden.bob_aux < dag.bob.plus_threshold[setting][hidden.source][hidden.bob_cell] ? +1 : -1;
}

Spreadsheet simulate_spreadsheet(const DagModel& dag, const SimulationOptions& options) {
  if (options.trials < 1) fail(ErrorCode::kArgument, "simulation needs at least one trial");

  const double alice_first = (dag.setting_bias[0] + dag.setting_bias[1]).to_double();
  std::array<double, 2> bob_first_given_alice{};
  for (int a = 0; a < 2; ++a) {
    const Rational row = dag.setting_bias[2 * a] + dag.setting_bias[2 * a + 1];
    bob_first_given_alice[a] = row.is_zero() ? 0.0 : (dag.setting_bias[2 * a] / row).to_double();
  }

  const CounterRng alice_setting(options.seed, kAliceSetting);
  const CounterRng bob_setting(options.seed ^ CounterRng::mix(options.bob_setting_salt), kBobSetting);
  const CounterRng source_stream(options.seed, kSource);

  Spreadsheet sheet;
  sheet.records.resize(static_cast<std::size_t>(options.trials));
  if (options.record_hidden) sheet.hidden_trace.resize(static_cast<std::size_t>(options.trials));

  parallel_ranges(options.trials, options.threads, [&](std::int64_t lo, std::int64_t hi, unsigned) {
    for (std::int64_t t = lo; t < hi; ++t) {
      const auto trial = static_cast<std::uint64_t>(t);
      const double sa = options.confound ? source_stream.uniform(trial) : alice_setting.uniform(trial);
      const int a = sa < alice_first ? 0 : 1;
      const int b = bob_setting.uniform(trial) < bob_first_given_alice[a] ? 0 : 1;
      const HiddenDraw hidden = draw_hidden(dag, options.seed, trial);

      TrialRecord& rec = sheet.records[static_cast<std::size_t>(t)];
      rec.a = static_cast<std::uint8_t>(a);
      rec.b = static_cast<std::uint8_t>(b);
      rec.x = static_cast<std::int8_t>(alice_outcome(dag, a, hidden));
      rec.y = static_cast<std::int8_t>(bob_outcome(dag, b, hidden));
      if (options.record_hidden) sheet.hidden_trace[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(hidden.source);
    }
  });
  return sheet;
}

std::array<ContextEstimate, 4> estimate_correlations(const std::vector<TrialRecord>& records) {
  std::array<std::int64_t, 4> sum{};
  std::array<std::uint64_t, 4> count{};
  for (const auto& r : records) {
    const int ctx = Context{r.a, r.b}.index();
    sum[ctx] += r.x * r.y;
    ++count[ctx];
  }
  std::array<ContextEstimate, 4> out;
  for (int c = 0; c < 4; ++c) {
    out[c].count = count[c];
    if (count[c] == 0) continue;
    const double n = static_cast<double>(count[c]);
    const double mean = static_cast<double>(sum[c]) / n;
    out[c].estimate = mean;
    // Products are +-1, so the sample variance is n / (n - 1) * (1 - mean^2).
    const double variance = count[c] > 1 ? std::max(0.0, (1.0 - mean * mean) * n / (n - 1.0)) : 0.0;
    out[c].standard_error = std::sqrt(variance / n);
  }
  return out;
}

CouplingStats sample_coupling(const DagModel& dag, std::int64_t samples, std::uint64_t seed, unsigned threads) {
  if (samples < 1) fail(ErrorCode::kArgument, "coupling needs at least one sample");
  std::vector<std::int8_t> combination(static_cast<std::size_t>(samples));
  std::vector<std::array<std::uint64_t, 16>> partial(std::max(1u, threads));
  std::vector<std::uint64_t> off(std::max(1u, threads), 0);

  parallel_ranges(samples, threads, [&](std::int64_t lo, std::int64_t hi, unsigned w) {
    for (std::int64_t t = lo; t < hi; ++t) {
      const HiddenDraw h = draw_hidden(dag, seed, static_cast<std::uint64_t>(t));
      const int x1 = alice_outcome(dag, 0, h);
      const int x2 = alice_outcome(dag, 1, h);
      const int y1 = bob_outcome(dag, 0, h);
      const int y2 = bob_outcome(dag, 1, h);
      const int value = x1 * y1 - x2 * y1 - x1 * y2 - x2 * y2;
      combination[static_cast<std::size_t>(t)] = static_cast<std::int8_t>(value);
      if (value != 2 && value != -2) ++off[w];
      ++partial[w][static_cast<std::size_t>((x1 < 0 ? 8 : 0) | (x2 < 0 ? 4 : 0) | (y1 < 0 ? 2 : 0) | (y2 < 0 ? 1 : 0))];
    }
  });

  CouplingStats stats;
  stats.samples = static_cast<std::uint64_t>(samples);
  for (std::size_t w = 0; w < partial.size(); ++w) {
    for (int idx = 0; idx < 16; ++idx) stats.counts[idx] += partial[w][idx];
    stats.out_of_range += off[w];
  }
  std::int64_t running = 0;
  stats.min_running_mean = stats.max_running_mean = combination.front();
  for (std::size_t t = 0; t < combination.size(); ++t) {
    running += combination[t];
    const double mean = static_cast<double>(running) / static_cast<double>(t + 1);
    stats.min_running_mean = std::min(stats.min_running_mean, mean);
    stats.max_running_mean = std::max(stats.max_running_mean, mean);
  }
  return stats;
}

IndependenceReport independence_diagnostic(const std::vector<TrialRecord>& records,
                                           const std::vector<std::uint32_t>* hidden_trace) {
  IndependenceReport report;
  if (records.empty()) return report;

  using Table = std::vector<std::vector<std::uint64_t>>;
  Table a_vs_y(2, std::vector<std::uint64_t>(2, 0));
  Table b_vs_x(2, std::vector<std::uint64_t>(2, 0));
  Table a_vs_prev_x(2, std::vector<std::uint64_t>(2, 0));
  Table b_vs_prev_y(2, std::vector<std::uint64_t>(2, 0));
  for (std::size_t t = 0; t < records.size(); ++t) {
    const auto& r = records[t];
    ++a_vs_y[r.a][r.y < 0];
    ++b_vs_x[r.b][r.x < 0];
    if (t > 0) {
      ++a_vs_prev_x[r.a][records[t - 1].x < 0];
      ++b_vs_prev_y[r.b][records[t - 1].y < 0];
    }
  }
  report.tests.push_back(chi_squared("alice_setting_vs_bob_outcome", a_vs_y));
  report.tests.push_back(chi_squared("bob_setting_vs_alice_outcome", b_vs_x));
  report.tests.push_back(chi_squared("alice_setting_vs_previous_alice_outcome", a_vs_prev_x));
  report.tests.push_back(chi_squared("bob_setting_vs_previous_bob_outcome", b_vs_prev_y));

  if (hidden_trace != nullptr && hidden_trace->size() == records.size()) {
    const std::uint32_t atoms = *std::max_element(hidden_trace->begin(), hidden_trace->end()) + 1;
    Table a_vs_hidden(2, std::vector<std::uint64_t>(atoms, 0));
    for (std::size_t t = 0; t < records.size(); ++t) ++a_vs_hidden[records[t].a][(*hidden_trace)[t]];
    report.tests.push_back(chi_squared("alice_setting_vs_hidden_source", a_vs_hidden));
  }
  return report;
}

}  // namespace bell
