#include "flatten.hpp"

#include <algorithm>
#include <unordered_map>

#include "error.hpp"

namespace bell {

namespace {

std::vector<Rational> cumulative(const Pmf& pmf) {
  std::vector<Rational> out;
  Rational running;
  for (const auto& atom : pmf.atoms) {
    running += atom.mass;
    out.push_back(running);
  }
  return out;
}

std::size_t atom_at(const std::vector<Rational>& cdf, const Rational& point) {
  // First atom whose interval [C_{i-1}, C_i) contains the point.
  auto it = std::upper_bound(cdf.begin(), cdf.end(), point);
  if (it == cdf.end()) fail(ErrorCode::kInternal, "quantile point beyond the cumulative distribution");
  return static_cast<std::size_t>(it - cdf.begin());
}

std::unordered_map<Label, std::size_t> index_map(const std::vector<Label>& labels) {
  std::unordered_map<Label, std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.emplace(labels[i], i);
  return out;
}

std::string cell_label(const Rational& lo, const Rational& hi) { return "[" + lo.str() + "," + hi.str() + ")"; }

void check_unit_sum(const std::vector<Rational>& masses, const std::string& path, ValidationReport& report) {
  Rational total;
  for (const auto& m : masses) {
    if (m.sign() < 0) report.issues.push_back({path, "negative mass " + m.str()});
    total += m;
  }
  if (total != Rational(1)) {
    report.issues.push_back({path, "masses sum to " + total.str() + " (deficit " + (Rational(1) - total).str() + ")"});
  }
}

bool in_unit_range(const Rational& v) { return v >= Rational(-1) && v <= Rational(1); }

void copy_setting_names(const ContextualModel& model, std::array<Label, 2>& alice, std::array<Label, 2>& bob) {
  for (int s = 0; s < 2; ++s) {
    alice[s] = model.alice[s].name;
    bob[s] = model.bob[s].name;
  }
}

}  // namespace

QuantileRefinement quantile_refinement(const Pmf& first, const Pmf& second, Refinement method) {
  const std::array<std::vector<Rational>, 2> cdf = {cumulative(first), cumulative(second)};
  if (cdf[0].empty() || cdf[1].empty() || cdf[0].back() != Rational(1) || cdf[1].back() != Rational(1)) {
    fail(ErrorCode::kInvalidModel, "quantile refinement needs normalized instrument pmfs");
  }

  QuantileRefinement out;
  if (method == Refinement::kCommonBreakpoints) {
    std::vector<Rational> points = {Rational(0)};
    for (const auto& c : cdf) points.insert(points.end(), c.begin(), c.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    out.breakpoints = std::move(points);
  } else {
    mpz_class grid = 1;
    for (const auto& c : cdf) {
      for (const auto& point : c) grid = lcm(grid, point.denominator());
    }
    if (!grid.fits_slong_p() || grid > 1'000'000) {
      fail(ErrorCode::kArgument, "uniform grid would need " + grid.get_str() + " cells");
    }
    const long cells = grid.get_si();
    for (long k = 0; k <= cells; ++k) out.breakpoints.emplace_back(k, cells);
  }

  for (std::size_t k = 0; k + 1 < out.breakpoints.size(); ++k) {
    const Rational& lo = out.breakpoints[k];
    out.lengths.push_back(out.breakpoints[k + 1] - lo);
    out.atom_of_cell[0].push_back(atom_at(cdf[0], lo));
    out.atom_of_cell[1].push_back(atom_at(cdf[1], lo));
  }
  return out;
}

FlatModel product_flatten(const ContextualModel& model) {
  require_valid(model);
  const AlignedModel m = align(model);

  FlatModel flat;
  copy_setting_names(model, flat.alice_settings, flat.bob_settings);
  flat.coordinate_names = {"lambda1", "lambda2"};
  flat.coordinate_labels = {model.source.coordinate_labels(Side::kAlice), model.source.coordinate_labels(Side::kBob)};
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (const auto& spec : model.side(side)) {
      flat.coordinate_names.push_back((side == Side::kAlice ? "alice:" : "bob:") + spec.name);
      std::vector<Label> labels;
      for (const auto& atom : spec.instrument.atoms) labels.push_back(atom.label);
      flat.coordinate_labels.push_back(std::move(labels));
    }
  }
  const auto first_index = index_map(flat.coordinate_labels[0]);
  const auto second_index = index_map(flat.coordinate_labels[1]);

  const auto& ax = m.alice[0];
  const auto& axp = m.alice[1];
  const auto& by = m.bob[0];
  const auto& byp = m.bob[1];
  flat.atoms.reserve(m.source_mass.size() * ax.instrument_mass.size() * axp.instrument_mass.size() *
                     by.instrument_mass.size() * byp.instrument_mass.size());

  for (std::size_t s = 0; s < m.source_mass.size(); ++s) {
    const auto& src = model.source.atoms[s];
    const std::size_t l1 = first_index.at(src.first);
    const std::size_t l2 = second_index.at(src.second);
    for (std::size_t i0 = 0; i0 < ax.instrument_mass.size(); ++i0) {
      for (std::size_t i1 = 0; i1 < axp.instrument_mass.size(); ++i1) {
        const Rational alice_mass = m.source_mass[s] * ax.instrument_mass[i0] * axp.instrument_mass[i1];
        for (std::size_t j0 = 0; j0 < by.instrument_mass.size(); ++j0) {
          const Rational partial = alice_mass * by.instrument_mass[j0];
          for (std::size_t j1 = 0; j1 < byp.instrument_mass.size(); ++j1) {
            flat.atoms.push_back({{l1, l2, i0, i1, j0, j1},
                                  partial * byp.instrument_mass[j1],
                                  {ax.outcome[s][i0], axp.outcome[s][i1]},
                                  {by.outcome[s][j0], byp.outcome[s][j1]}});
          }
        }
      }
    }
  }
  return flat;
}

FlatModel uniform_reduce(const ContextualModel& model, Refinement method) {
  require_valid(model);
  const AlignedModel m = align(model);
  const QuantileRefinement alice = quantile_refinement(model.alice[0].instrument, model.alice[1].instrument, method);
  const QuantileRefinement bob = quantile_refinement(model.bob[0].instrument, model.bob[1].instrument, method);

  FlatModel flat;
  copy_setting_names(model, flat.alice_settings, flat.bob_settings);
  flat.coordinate_names = {"lambda1", "lambda2", "u1", "u2"};
  flat.coordinate_labels = {model.source.coordinate_labels(Side::kAlice), model.source.coordinate_labels(Side::kBob),
                            {}, {}};
  for (std::size_t k = 0; k < alice.lengths.size(); ++k) {
    flat.coordinate_labels[2].push_back(cell_label(alice.breakpoints[k], alice.breakpoints[k + 1]));
  }
  for (std::size_t k = 0; k < bob.lengths.size(); ++k) {
    flat.coordinate_labels[3].push_back(cell_label(bob.breakpoints[k], bob.breakpoints[k + 1]));
  }
  const auto first_index = index_map(flat.coordinate_labels[0]);
  const auto second_index = index_map(flat.coordinate_labels[1]);

  for (std::size_t s = 0; s < m.source_mass.size(); ++s) {
    const auto& src = model.source.atoms[s];
    const std::size_t l1 = first_index.at(src.first);
    const std::size_t l2 = second_index.at(src.second);
    for (std::size_t c1 = 0; c1 < alice.lengths.size(); ++c1) {
      const Rational left = m.source_mass[s] * alice.lengths[c1];
      const std::array<Rational, 2> a = {m.alice[0].outcome[s][alice.atom_of_cell[0][c1]],
                                         m.alice[1].outcome[s][alice.atom_of_cell[1][c1]]};
      for (std::size_t c2 = 0; c2 < bob.lengths.size(); ++c2) {
        flat.atoms.push_back({{l1, l2, c1, c2},
                              left * bob.lengths[c2],
                              a,
                              {m.bob[0].outcome[s][bob.atom_of_cell[0][c2]], m.bob[1].outcome[s][bob.atom_of_cell[1][c2]]}});
      }
    }
  }
  return flat;
}

AveragedModel bell_average(const ContextualModel& model) {
  require_valid(model);
  AveragedModel out;
  out.source = model.source;
  copy_setting_names(model, out.alice_settings, out.bob_settings);
  out.alice_rows = model.source.coordinate_labels(Side::kAlice);
  out.bob_rows = model.source.coordinate_labels(Side::kBob);

  for (Side side : {Side::kAlice, Side::kBob}) {
    const auto& rows = side == Side::kAlice ? out.alice_rows : out.bob_rows;
    auto& bars = side == Side::kAlice ? out.alice_bar : out.bob_bar;
    for (int s = 0; s < 2; ++s) {
      const SettingSpec& spec = model.side(side)[s];
      const auto table_rows = index_map(spec.outcomes.rows);
      const auto table_cols = index_map(spec.outcomes.cols);
      for (const Label& row : rows) {
        Rational mean;
        for (const auto& atom : spec.instrument.atoms) {
          mean += spec.outcomes.at(table_rows.at(row), table_cols.at(atom.label)) * atom.mass;
        }
        bars[s].push_back(std::move(mean));
      }
    }
  }
  return out;
}

ValidationReport validate_flat(const FlatModel& model) {
  ValidationReport report;
  std::vector<Rational> masses;
  for (std::size_t k = 0; k < model.atoms.size(); ++k) {
    const FlatAtom& atom = model.atoms[k];
    masses.push_back(atom.mass);
    const std::string path = "atoms[" + std::to_string(k) + "]";
    if (atom.coords.size() != model.coordinate_names.size()) {
      report.issues.push_back({path, "tuple arity does not match the coordinates"});
    } else {
      for (std::size_t c = 0; c < atom.coords.size(); ++c) {
        if (c >= model.coordinate_labels.size() || atom.coords[c] >= model.coordinate_labels[c].size()) {
          report.issues.push_back({path, "coordinate " + std::to_string(c) + " out of range"});
        }
      }
    }
    for (const auto* side : {&atom.alice, &atom.bob}) {
      for (const auto& v : *side) {
        if (!in_unit_range(v)) report.issues.push_back({path, "outcome " + v.str() + " outside [-1, 1]"});
      }
    }
  }
  check_unit_sum(masses, "atoms", report);
  return report;
}

ValidationReport validate_averaged(const AveragedModel& model) {
  ValidationReport report;
  std::vector<Rational> masses;
  for (const auto& atom : model.source.atoms) masses.push_back(atom.mass);
  check_unit_sum(masses, "source", report);

  const auto alice_rows = index_map(model.alice_rows);
  const auto bob_rows = index_map(model.bob_rows);
  for (const auto& atom : model.source.atoms) {
    if (!alice_rows.count(atom.first) || !bob_rows.count(atom.second)) {
      report.issues.push_back({"source", "pair (" + atom.first + ", " + atom.second + ") has no averaged outcome row"});
    }
  }
  for (int s = 0; s < 2; ++s) {
    if (model.alice_bar[s].size() != model.alice_rows.size() || model.bob_bar[s].size() != model.bob_rows.size()) {
      report.issues.push_back({"averaged", "averaged outcome rows do not match the row labels"});
      continue;
    }
    for (std::size_t r = 0; r < model.alice_rows.size(); ++r) {
      if (!in_unit_range(model.alice_bar[s][r])) {
        report.issues.push_back({"alice[" + model.alice_settings[s] + "][" + model.alice_rows[r] + "]", "|mean| exceeds 1"});
      }
    }
    for (std::size_t r = 0; r < model.bob_rows.size(); ++r) {
      if (!in_unit_range(model.bob_bar[s][r])) {
        report.issues.push_back({"bob[" + model.bob_settings[s] + "][" + model.bob_rows[r] + "]", "|mean| exceeds 1"});
      }
    }
  }
  return report;
}

Rational flat_expectation(const FlatModel& model, Context context) {
  Rational sum;
  for (const auto& atom : model.atoms) {
    const Rational& a = atom.alice[context.alice];
    if (a.is_zero()) continue;
    sum += a * atom.bob[context.bob] * atom.mass;
  }
  return sum;
}

CorrelationQuad flat_quad(const FlatModel& model) {
  CorrelationQuad quad;
  for (Context ctx : kContexts) quad[ctx] = flat_expectation(model, ctx);
  return quad;
}

Rational averaged_expectation(const AveragedModel& model, Context context) {
  const auto alice_rows = index_map(model.alice_rows);
  const auto bob_rows = index_map(model.bob_rows);
  Rational sum;
  for (const auto& atom : model.source.atoms) {
    auto ia = alice_rows.find(atom.first);
    auto ib = bob_rows.find(atom.second);
    if (ia == alice_rows.end() || ib == bob_rows.end()) {
      fail(ErrorCode::kDomain, "averaged model has no row for (" + atom.first + ", " + atom.second + ")");
    }
    sum += model.alice_bar[context.alice][ia->second] * model.bob_bar[context.bob][ib->second] * atom.mass;
  }
  return sum;
}

CorrelationQuad averaged_quad(const AveragedModel& model) {
  CorrelationQuad quad;
  for (Context ctx : kContexts) quad[ctx] = averaged_expectation(model, ctx);
  return quad;
}

}  // namespace bell
