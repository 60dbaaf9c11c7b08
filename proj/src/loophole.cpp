#include "loophole.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace bell {

namespace {

// Search-space point: integer weights on the kSearchGrid grid and ternary tables.
struct Candidate {
  std::vector<int> source;                          // n weights summing to the grid
  std::array<std::array<std::vector<int>, 2>, 2> instrument;  // [side][setting] k weights
  std::array<std::array<std::vector<int>, 2>, 2> table;       // [side][setting] n * k values in {-1, 0, 1}

  std::vector<int> encoding() const {
    std::vector<int> out = source;
    for (const auto& side : instrument) {
      for (const auto& w : side) out.insert(out.end(), w.begin(), w.end());
    }
    for (const auto& side : table) {
      for (const auto& t : side) out.insert(out.end(), t.begin(), t.end());
    }
    return out;
  }
};

struct Evaluation {
  bool feasible = false;
  double score = 0.0;      // post-selected max |CHSH| (0 when undefined)
  double objective = 0.0;  // score minus constraint penalty
  double mean_coincidence = 0.0;
};

class Evaluator {
 public:
  Evaluator(const SearchConfig& config, int n, int k)
      : n_(n), k_(k), min_c_(config.min_coincidence.to_double()), max_d_(config.max_detection.to_double()) {}

  Evaluation operator()(const Candidate& c) const {
    constexpr double g = kSearchGrid;
    std::array<double, 4> detected{};
    std::array<double, 4> weighted{};
    std::array<std::array<double, 2>, 2> rate{};
    for (int s = 0; s < n_; ++s) {
      const double ps = c.source[s] / g;
      if (ps == 0.0) continue;
      // Per setting: probability of each detected outcome at this source atom.
      std::array<std::array<double, 2>, 2> plus{};
      std::array<std::array<double, 2>, 2> minus{};
      for (int side = 0; side < 2; ++side) {
        for (int setting = 0; setting < 2; ++setting) {
          for (int i = 0; i < k_; ++i) {
            const double pi = c.instrument[side][setting][i] / g;
            const int v = c.table[side][setting][s * k_ + i];
            if (v > 0) plus[side][setting] += pi;
            if (v < 0) minus[side][setting] += pi;
          }
          rate[side][setting] += ps * (plus[side][setting] + minus[side][setting]);
        }
      }
      for (Context ctx : kContexts) {
        const double ap = plus[0][ctx.alice], am = minus[0][ctx.alice];
        const double bp = plus[1][ctx.bob], bm = minus[1][ctx.bob];
        detected[ctx.index()] += ps * (ap + am) * (bp + bm);
        weighted[ctx.index()] += ps * ((ap - am) * (bp - bm));
      }
    }

    Evaluation e;
    double violation = 0.0;
    std::array<double, 4> cond{};
    bool defined = true;
    for (int c4 = 0; c4 < 4; ++c4) {
      violation += std::max(0.0, min_c_ - detected[c4]);
      e.mean_coincidence += detected[c4] / 4.0;
      if (detected[c4] > 0.0) {
        cond[c4] = weighted[c4] / detected[c4];
      } else {
        defined = false;
      }
    }
    for (const auto& side : rate) {
      for (double r : side) violation += std::max(0.0, r - max_d_);
    }
    if (defined) {
      const double total = cond[0] + cond[1] + cond[2] + cond[3];
      for (int t = 0; t < 4; ++t) e.score = std::max(e.score, std::fabs(total - 2.0 * cond[t]));
    }
    e.feasible = defined && violation == 0.0;
    e.objective = e.score - 8.0 * violation - (defined ? 0.0 : 1.0);
    return e;
  }

 private:
  int n_;
  int k_;
  double min_c_;
  double max_d_;
};

using Engine = std::mt19937_64;

int below(Engine& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

std::vector<int> random_weights(Engine& rng, int parts) {
  std::vector<int> w(parts, 0);
  for (int unit = 0; unit < kSearchGrid; ++unit) ++w[below(rng, parts)];
  return w;
}

Candidate random_candidate(Engine& rng, int n, int k) {
  Candidate c;
  c.source = random_weights(rng, n);
  for (int side = 0; side < 2; ++side) {
    for (int setting = 0; setting < 2; ++setting) {
      c.instrument[side][setting] = random_weights(rng, k);
      auto& t = c.table[side][setting];
      t.resize(static_cast<std::size_t>(n * k));
      for (auto& v : t) v = below(rng, 3) - 1;
    }
  }
  return c;
}

void transfer(Engine& rng, std::vector<int>& w) {
  if (w.size() < 2) return;
  const int from = below(rng, static_cast<int>(w.size()));
  int to = below(rng, static_cast<int>(w.size()) - 1);
  if (to >= from) ++to;
  const int amount = std::min(w[from], 1 + below(rng, 4));
  w[from] -= amount;
  w[to] += amount;
}

void mutate(Engine& rng, Candidate& c, int k) {
  const int side = below(rng, 2);
  const int setting = below(rng, 2);
  const int move = below(rng, k > 1 ? 4 : 3);
  if (move <= 1) {
    auto& t = c.table[side][setting];
    auto& v = t[static_cast<std::size_t>(below(rng, static_cast<int>(t.size())))];
    v = ((v + 1 + 1 + below(rng, 2)) % 3) - 1;  // one of the two other values
  } else if (move == 2) {
    transfer(rng, c.source);
  } else {
    transfer(rng, c.instrument[side][setting]);
  }
}

// Higher score wins; ties go to the lower mean coincidence, then the smaller encoding.
bool better(const Evaluation& a, const Candidate& ca, const Evaluation& b, const Candidate& cb) {
  if (a.score != b.score) return a.score > b.score;
  if (a.mean_coincidence != b.mean_coincidence) return a.mean_coincidence < b.mean_coincidence;
  return ca.encoding() < cb.encoding();
}

struct RestartOutcome {
  bool found = false;
  Candidate best;
  Evaluation best_eval;
  Candidate fallback;  // best penalized objective, used when nothing feasible is found
  Evaluation fallback_eval;
  std::vector<double> trace;
};

RestartOutcome run_restart(const SearchConfig& config, int restart, std::int64_t moves) {
  const int n = config.source_atoms;
  const int k = config.instrument_atoms;
  Engine rng(CounterRng(config.seed, 0x5EA4C4).bits(static_cast<std::uint64_t>(restart)));
  const Evaluator evaluate(config, n, k);

  RestartOutcome out;
  Candidate current = random_candidate(rng, n, k);
  Evaluation current_eval = evaluate(current);
  out.fallback = current;
  out.fallback_eval = current_eval;
  if (current_eval.feasible) {
    out.found = true;
    out.best = current;
    out.best_eval = current_eval;
  }
  out.trace.reserve(static_cast<std::size_t>(moves));

  for (std::int64_t step = 0; step < moves; ++step) {
    Candidate next = current;
    mutate(rng, next, k);
    const Evaluation next_eval = evaluate(next);
    if (next_eval.objective >= current_eval.objective) {
      current = std::move(next);
      current_eval = next_eval;
      if (current_eval.feasible && (!out.found || better(current_eval, current, out.best_eval, out.best))) {
        out.found = true;
        out.best = current;
        out.best_eval = current_eval;
      }
      if (current_eval.objective > out.fallback_eval.objective) {
        out.fallback = current;
        out.fallback_eval = current_eval;
      }
    }
    out.trace.push_back(out.found ? out.best_eval.score : 0.0);
  }
  return out;
}

ContextualModel to_model(const Candidate& c, int n, int k) {
  ContextualModel model;
  std::vector<Label> rows;
  for (int s = 0; s < n; ++s) {
    rows.push_back("s" + std::to_string(s));
    model.source.atoms.push_back({rows.back(), rows.back(), Rational(c.source[s], kSearchGrid)});
  }
  const std::array<std::array<Label, 2>, 2> names = {{{"x", "x'"}, {"y", "y'"}}};
  for (int side = 0; side < 2; ++side) {
    for (int setting = 0; setting < 2; ++setting) {
      SettingSpec& spec = model.side(static_cast<Side>(side))[setting];
      spec.name = names[side][setting];
      spec.outcomes.rows = rows;
      spec.outcomes.ternary = true;
      for (int i = 0; i < k; ++i) {
        const Label label = "i" + std::to_string(i);
        spec.instrument.atoms.push_back({label, Rational(c.instrument[side][setting][i], kSearchGrid)});
        spec.outcomes.cols.push_back(label);
      }
      for (int v : c.table[side][setting]) spec.outcomes.values.emplace_back(v);
    }
  }
  return model;
}

}  // namespace

AngleSet AngleSet::chsh_optimal() {
  constexpr double pi = std::numbers::pi;
  return AngleSet{{0.0, pi / 2.0}, {pi / 4.0, 3.0 * pi / 4.0}};
}

BehaviorTable quantum_singlet_behavior(const AngleSet& angles) {
  BehaviorTable behavior;
  for (Context ctx : kContexts) {
    const Rational e = Rational::from_double(-std::cos(angles.alice[ctx.alice] - angles.bob[ctx.bob]));
    for (int i : {0, 2}) {
      for (int j : {0, 2}) {
        const Rational xy(kOutcomeValues[i] * kOutcomeValues[j]);
        behavior[ctx][i][j] = (Rational(1) + xy * e) / Rational(4);
      }
    }
  }
  return behavior;
}

bool DetectionRates::all_below_two_thirds() const {
  for (const auto& side : versus_two_thirds) {
    for (int v : side) {
      if (v >= 0) return false;
    }
  }
  return true;
}

DetectionRates detection_rates(const ContextualModel& model) {
  require_valid(model);
  const AlignedModel m = align(model);
  DetectionRates out;
  const Rational two_thirds(2, 3);
  for (int side = 0; side < 2; ++side) {
    for (int s = 0; s < 2; ++s) {
      const AlignedSetting& a = side == 0 ? m.alice[s] : m.bob[s];
      Rational rate;
      for (std::size_t src = 0; src < m.source_mass.size(); ++src) {
        for (std::size_t i = 0; i < a.instrument_mass.size(); ++i) {
          if (!a.outcome[src][i].is_zero()) rate += m.source_mass[src] * a.instrument_mass[i];
        }
      }
      const auto order = rate <=> two_thirds;
      out.versus_two_thirds[side][s] = order < 0 ? -1 : (order > 0 ? 1 : 0);
      out.rate[side][s] = std::move(rate);
    }
  }
  return out;
}

SearchResult search_postselection_violation(const SearchConfig& config) {
  if (config.source_atoms < 1 || config.instrument_atoms < 1 || config.budget < 1 || config.restarts < 1) {
    fail(ErrorCode::kArgument, "search sizes, budget and restarts must be positive");
  }
  if (config.min_coincidence.sign() <= 0 || config.min_coincidence > Rational(1)) {
    fail(ErrorCode::kArgument, "minimum coincidence rate must lie in (0, 1]");
  }
  if (config.max_detection.sign() <= 0 || config.max_detection > Rational(1)) {
    fail(ErrorCode::kArgument, "maximum detection rate must lie in (0, 1]");
  }

  const std::int64_t per_restart = std::max<std::int64_t>(1, config.budget / config.restarts);
  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.restarts)));
  {
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (int r = static_cast<int>(w); r < config.restarts; r += static_cast<int>(threads)) {
          outcomes[static_cast<std::size_t>(r)] = run_restart(config, r, per_restart);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  SearchResult result;
  const RestartOutcome* winner = nullptr;
  const RestartOutcome* fallback = &outcomes.front();
  double running_best = 0.0;
  for (int r = 0; r < config.restarts; ++r) {
    const RestartOutcome& o = outcomes[static_cast<std::size_t>(r)];
    if (o.found && (winner == nullptr || better(o.best_eval, o.best, winner->best_eval, winner->best))) {
      winner = &o;
      result.winning_restart = r;
    }
    if (o.fallback_eval.objective > fallback->fallback_eval.objective) fallback = &o;
    for (double v : o.trace) {
      running_best = std::max(running_best, v);
      result.best_trace.push_back(running_best);
    }
  }

  const Candidate& chosen = winner != nullptr ? winner->best : fallback->fallback;
  result.best_score = winner != nullptr ? winner->best_eval.score : fallback->fallback_eval.score;
  result.model = to_model(chosen, config.source_atoms, config.instrument_atoms);

  // Exact re-verification of everything reported.
  result.report = postselected_correlations(behavior_from_model(result.model));
  result.rates = detection_rates(result.model);
  result.coin_flip_chsh = chsh_values(exact_quad(zero_to_coin(result.model)));
  if (!result.coin_flip_chsh.satisfied) {
    fail(ErrorCode::kInternal, "local model violates CHSH without post-selection");
  }

  bool met = result.report.conditional_defined();
  for (int c = 0; c < 4; ++c) met = met && result.report.coincidence[c] >= config.min_coincidence;
  for (const auto& side : result.rates.rate) {
    for (const auto& r : side) met = met && r <= config.max_detection;
  }
  result.constraints_met = met;
  result.violating = met && !result.report.conditional_chsh->satisfied;
  return result;
}

}  // namespace bell
