#include "bell/bell.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "error.hpp"
#include "flatten.hpp"
#include "model_io.hpp"
#include "report_json.hpp"

struct bell_document {
  bell::Document rep;
  bell::Json meta;  // "meta" object carried through print, null when absent
  std::string name;  // source name for messages, empty for derived documents
};

namespace {

thread_local std::string last_error;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bell_status status_of(bell::ErrorCode code) {
  switch (code) {
    case bell::ErrorCode::kParse: return BELL_ERR_PARSE;
    case bell::ErrorCode::kInvalidModel: return BELL_ERR_INVALID_MODEL;
    case bell::ErrorCode::kDomain: return BELL_ERR_DOMAIN;
    case bell::ErrorCode::kArgument: return BELL_ERR_ARGUMENT;
    case bell::ErrorCode::kInternal: return BELL_ERR_INTERNAL;
  }
  return BELL_ERR_INTERNAL;
}

template <class F>
bell_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return BELL_OK;
  } catch (const bell::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const IoError& e) {
    last_error = e.what();
    return BELL_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return BELL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BELL_ERR_INTERNAL;
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(const bell::Json& json, char** out) { *out = duplicate(bell::pretty(json)); }

void require_out(const void* p) {
  if (p == nullptr) bell::fail(bell::ErrorCode::kArgument, "null output pointer");
}

const bell_document& deref(const bell_document* doc) {
  if (doc == nullptr) bell::fail(bell::ErrorCode::kArgument, "null document");
  return *doc;
}

struct Names {
  std::array<bell::Label, 2> alice;
  std::array<bell::Label, 2> bob;
};

Names names_of(const bell::Document& doc) {
  return std::visit(
      [](const auto& d) -> Names {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, bell::ContextualModel>) {
          return {{d.alice[0].name, d.alice[1].name}, {d.bob[0].name, d.bob[1].name}};
        } else {
          return {d.alice_settings, d.bob_settings};
        }
      },
      doc);
}

bell::CorrelationQuad quad_of(const bell::Document& doc) {
  return std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, bell::ContextualModel>) {
          return bell::exact_quad(d);
        } else if constexpr (std::is_same_v<T, bell::FlatModel>) {
          return bell::flat_quad(d);
        } else if constexpr (std::is_same_v<T, bell::AveragedModel>) {
          return bell::averaged_quad(d);
        } else {
          return bell::quad_from_behavior(d);
        }
      },
      doc);
}

const bell::ContextualModel& contextual(const bell_document& doc, const char* what) {
  if (const auto* m = std::get_if<bell::ContextualModel>(&doc.rep)) return *m;
  bell::fail(bell::ErrorCode::kArgument, std::string(what) + " needs a contextual model, got a " +
                                             bell::document_kind(doc.rep) + " document");
}

bell::Rational parse_rational(const char* text, const char* what) {
  if (text == nullptr) bell::fail(bell::ErrorCode::kArgument, std::string("missing ") + what);
  auto r = bell::Rational::parse(text);
  if (!r) bell::fail(bell::ErrorCode::kParse, std::string("malformed ") + what + " '" + text + "'");
  return *r;
}

/// Behavior for the Fine analysis: behavior documents as given, contextual models
/// with point outcomes through zero_to_coin.
bell::BehaviorTable fine_behavior(const bell_document& doc) {
  if (const auto* b = std::get_if<bell::BehaviorTable>(&doc.rep)) return *b;
  if (const auto* m = std::get_if<bell::ContextualModel>(&doc.rep)) {
    if (!bell::has_point_outcomes(*m)) {
      bell::fail(bell::ErrorCode::kArgument, "fine needs outcomes in {-1, 0, +1}; fractional outcomes have no behavior table");
    }
    return bell::behavior_from_model(bell::has_zero_outcomes(*m) ? bell::zero_to_coin(*m) : *m);
  }
  bell::fail(bell::ErrorCode::kArgument, std::string("fine needs a behavior table or contextual model, got a ") +
                                             bell::document_kind(doc.rep) + " document");
}

bell::Json fine_report(const bell::BehaviorTable& behavior) {
  const auto ns = bell::check_no_signalling(behavior);
  if (!ns.holds) {
    bell::fail(bell::ErrorCode::kInvalidModel,
               "behavior is signalling (max marginal deviation " + ns.max_deviation.str() + "); no joint can exist");
  }
  const auto result = bell::find_joint(behavior);
  bell::Json out;
  out["noSignalling"] = bell::no_signalling_json(ns, behavior);
  out["fineCriterion"] = bell::fine_criterion(behavior);
  out.update(bell::fine_json(result, behavior));
  return out;
}

std::optional<bell::PostSelectionReport> postselection_of(const bell::Document& doc) {
  if (const auto* b = std::get_if<bell::BehaviorTable>(&doc)) {
    if (b->ternary) return bell::postselected_correlations(*b);
  }
  if (const auto* m = std::get_if<bell::ContextualModel>(&doc)) {
    if (bell::has_point_outcomes(*m) && bell::has_zero_outcomes(*m)) {
      return bell::postselected_correlations(bell::behavior_from_model(*m));
    }
  }
  return std::nullopt;
}

bell::Json chsh_report(const bell::CorrelationQuad& quad, const Names& names, std::int64_t trials) {
  const auto report = bell::chsh_values(quad);
  bell::Json out;
  out["quad"] = bell::quad_json(quad, names.alice, names.bob);
  out["chsh"] = bell::chsh_json(report, names.alice, names.bob);
  if (trials > 0) {
    out["finiteSample"] = bell::sample_bound_json(trials, bell::finite_sample_bound(trials, report.max_abs.to_double()));
  }
  return out;
}

}  // namespace

extern "C" {

const char* bell_last_error(void) { return last_error.c_str(); }

const char* bell_version(void) { return "1.0.0"; }

void bell_string_free(char* s) { std::free(s); }

bell_status bell_document_parse(const char* text, const char* source_name, int validate, bell_document** out) {
  return guarded([&] {
    require_out(out);
    *out = nullptr;
    if (text == nullptr) bell::fail(bell::ErrorCode::kArgument, "null text");
    const std::string name = source_name != nullptr ? source_name : "<input>";
    auto doc = std::make_unique<bell_document>();
    doc->name = name;
    doc->rep = bell::parse_document(text, name, validate != 0 ? bell::ParseMode::kValidate : bell::ParseMode::kStructural);
    const auto json = bell::Json::parse(text);
    if (auto it = json.find("meta"); it != json.end()) doc->meta = *it;
    *out = doc.release();
  });
}

bell_status bell_document_load(const char* path, int validate, bell_document** out) {
  std::string text;
  const bell_status read = guarded([&] {
    require_out(out);
    *out = nullptr;
    if (path == nullptr) bell::fail(bell::ErrorCode::kArgument, "null path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string(path) + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  });
  if (read != BELL_OK) return read;
  return bell_document_parse(text.c_str(), path, validate, out);
}

void bell_document_free(bell_document* doc) { delete doc; }

const char* bell_document_kind(const bell_document* doc) {
  return doc == nullptr ? "" : bell::document_kind(doc->rep);
}

bell_status bell_document_print(const bell_document* doc, char** out) {
  return guarded([&] {
    require_out(out);
    auto json = bell::to_json(deref(doc).rep);
    if (!doc->meta.is_null()) json["meta"] = doc->meta;
    emit(json, out);
  });
}

int bell_document_equal(const bell_document* a, const bell_document* b) {
  if (a == nullptr || b == nullptr) return 0;
  return a->rep == b->rep ? 1 : 0;
}

bell_status bell_validate(const bell_document* doc, char** json_out) {
  return guarded([&] {
    require_out(json_out);
    const auto& d = deref(doc);
    const bell::ValidationReport report = std::visit(
        [](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, bell::ContextualModel>) {
            return bell::validate_model(m);
          } else if constexpr (std::is_same_v<T, bell::FlatModel>) {
            return bell::validate_flat(m);
          } else if constexpr (std::is_same_v<T, bell::AveragedModel>) {
            return bell::validate_averaged(m);
          } else {
            return bell::validate_behavior(m);
          }
        },
        d.rep);
    bell::Json issues = bell::Json::array();
    for (const auto& issue : report.issues) issues.push_back({{"path", issue.path}, {"message", issue.message}});
    bell::Json out = {{"kind", bell::document_kind(d.rep)}, {"valid", report.ok()}, {"issues", issues}};
    if (report.ok()) {
      if (const auto* m = std::get_if<bell::ContextualModel>(&d.rep)) {
        out["sourceAtoms"] = m->source.atoms.size();
        out["pointOutcomes"] = bell::has_point_outcomes(*m);
        out["zeroOutcomes"] = bell::has_zero_outcomes(*m);
      }
    }
    emit(out, json_out);
    if (!report.ok()) {
      std::string message = (d.name.empty() ? "" : d.name + ": ") + "invalid " + std::string(bell::document_kind(d.rep)) + " document";
      for (const auto& issue : report.issues) message += "\n  " + issue.path + ": " + issue.message;
      bell::fail(bell::ErrorCode::kInvalidModel, message);
    }
  });
}

bell_status bell_exact(const bell_document* doc, char** json_out) {
  return guarded([&] {
    require_out(json_out);
    const auto& d = deref(doc);
    const Names names = names_of(d.rep);
    bell::Json out = {{"kind", bell::document_kind(d.rep)}};
    out.update(chsh_report(quad_of(d.rep), names, 0));
    if (const auto* m = std::get_if<bell::ContextualModel>(&d.rep)) {
      bell::Json singles = bell::Json::array();
      for (bell::Side side : {bell::Side::kAlice, bell::Side::kBob}) {
        for (int s = 0; s < 2; ++s) {
          singles.push_back({{"side", side == bell::Side::kAlice ? "alice" : "bob"},
                             {"setting", m->side(side)[s].name},
                             {"mean", bell::exact_single_expectation(*m, side, s).str()}});
        }
      }
      out["singles"] = std::move(singles);
    }
    emit(out, json_out);
  });
}

bell_status bell_flatten(const bell_document* doc, bell_flatten_method method, bell_refinement refinement,
                         bell_document** out) {
  return guarded([&] {
    require_out(out);
    *out = nullptr;
    const auto& model = contextual(deref(doc), "flatten");
    bell::require_valid(model);
    const auto refine = refinement == BELL_REFINE_UNIFORM_GRID ? bell::Refinement::kUniformGrid
                                                                : bell::Refinement::kCommonBreakpoints;
    auto result = std::make_unique<bell_document>();
    switch (method) {
      case BELL_FLATTEN_PRODUCT: result->rep = bell::product_flatten(model); break;
      case BELL_FLATTEN_UNIFORM: result->rep = bell::uniform_reduce(model, refine); break;
      case BELL_FLATTEN_AVERAGE: result->rep = bell::bell_average(model); break;
      default: bell::fail(bell::ErrorCode::kArgument, "unknown flatten method");
    }
    *out = result.release();
  });
}

bell_status bell_chsh_quad(const char* const values[4], int64_t trials, char** json_out) {
  return guarded([&] {
    require_out(json_out);
    if (values == nullptr) bell::fail(bell::ErrorCode::kArgument, "null quad");
    bell::CorrelationQuad quad;
    for (int i = 0; i < 4; ++i) quad.e[i] = parse_rational(values[i], "correlation");
    emit(chsh_report(quad, {{"x", "x'"}, {"y", "y'"}}, trials), json_out);
  });
}

bell_status bell_chsh_document(const bell_document* doc, int64_t trials, char** json_out) {
  return guarded([&] {
    require_out(json_out);
    const auto& d = deref(doc);
    const Names names = names_of(d.rep);
    bell::Json out = {{"kind", bell::document_kind(d.rep)}};
    out.update(chsh_report(quad_of(d.rep), names, trials));
    const auto post = postselection_of(d.rep);
    out["postSelection"] = post ? bell::postselection_json(*post, names.alice, names.bob) : bell::Json(nullptr);
    emit(out, json_out);
  });
}

bell_status bell_fine(const bell_document* doc, char** json_out) {
  return guarded([&] {
    require_out(json_out);
    const auto behavior = fine_behavior(deref(doc));
    bell::Json out = {{"kind", bell::document_kind(doc->rep)}};
    out.update(fine_report(behavior));
    emit(out, json_out);
  });
}

void bell_simulate_defaults(bell_simulate_options* options) {
  if (options == nullptr) return;
  *options = bell_simulate_options{};
  options->threads = 1;
}

bell_status bell_simulate(const bell_document* doc, const bell_simulate_options* options, bell_format format,
                          char** out) {
  return guarded([&] {
    require_out(out);
    if (options == nullptr) bell::fail(bell::ErrorCode::kArgument, "null options");
    const auto& model = contextual(deref(doc), "simulate");
    bell::require_valid(model);
    auto bias = bell::uniform_setting_bias();
    for (int i = 0; i < 4; ++i) {
      if (options->bias[i] != nullptr) bias[i] = parse_rational(options->bias[i], "setting bias");
    }
    const auto dag = bell::from_contextual(model, bias);

    bell::SimulationOptions sim;
    sim.trials = options->trials;
    sim.seed = options->seed;
    sim.confound = options->confound != 0;
    sim.threads = options->threads == 0 ? 1 : options->threads;
    sim.record_hidden = format == BELL_FORMAT_JSON;
    const auto sheet = bell::simulate_spreadsheet(dag, sim);
    if (format == BELL_FORMAT_CSV) {
      *out = duplicate(bell::spreadsheet_csv(sheet));
      return;
    }

    const auto estimates = bell::estimate_correlations(sheet.records);
    bell::Json json;
    json["trials"] = options->trials;
    json["seed"] = options->seed;
    json["confound"] = sim.confound;
    bell::Json bias_json = bell::Json::array();
    for (const auto& b : bias) bias_json.push_back(b.str());
    json["bias"] = std::move(bias_json);
    json["estimates"] = bell::estimates_json(estimates, bell::dag_exact_quad(dag), dag);

    bool complete = true;
    for (const auto& e : estimates) complete = complete && e.estimate.has_value();
    if (complete) {
      bell::Json values = bell::Json::array();
      double max_abs = 0.0;
      double sum = 0.0;
      for (const auto& e : estimates) sum += *e.estimate;
      for (int k = 0; k < 8; ++k) {
        const double v = bell::ChshReport::overall_sign(k) * (sum - 2.0 * *estimates[bell::ChshReport::odd_term(k)].estimate);
        values.push_back(bell::decimal(v));
        max_abs = std::max(max_abs, std::abs(v));
      }
      json["chshEstimate"] = {{"values", std::move(values)}, {"maxAbs", bell::decimal(max_abs)}};
      json["finiteSample"] = bell::sample_bound_json(options->trials, bell::finite_sample_bound(options->trials, max_abs));
    } else {
      json["chshEstimate"] = nullptr;
      json["finiteSample"] = nullptr;
    }
    json["independence"] = bell::independence_json(bell::independence_diagnostic(sheet.records, &sheet.hidden_trace));
    emit(json, out);
  });
}

void bell_search_defaults(bell_search_options* options) {
  if (options == nullptr) return;
  const bell::SearchConfig d;
  options->source_atoms = d.source_atoms;
  options->instrument_atoms = d.instrument_atoms;
  options->budget = d.budget;
  options->restarts = d.restarts;
  options->seed = d.seed;
  options->min_coincidence = nullptr;
  options->max_detection = nullptr;
  options->threads = 1;
}

bell_status bell_search(const bell_search_options* options, char** json_out, bell_document** winner_out) {
  return guarded([&] {
    require_out(json_out);
    if (winner_out != nullptr) *winner_out = nullptr;
    if (options == nullptr) bell::fail(bell::ErrorCode::kArgument, "null options");
    bell::SearchConfig config;
    config.source_atoms = options->source_atoms;
    config.instrument_atoms = options->instrument_atoms;
    config.budget = options->budget;
    config.restarts = options->restarts;
    config.seed = options->seed;
    config.threads = options->threads == 0 ? 1 : options->threads;
    if (options->min_coincidence != nullptr) config.min_coincidence = parse_rational(options->min_coincidence, "minimum coincidence rate");
    if (options->max_detection != nullptr) config.max_detection = parse_rational(options->max_detection, "maximum detection rate");

    const auto result = bell::search_postselection_violation(config);
    auto json = bell::search_json(result, config);
    auto model_json = bell::to_json(result.model);
    model_json["meta"] = {{"search", json["config"]}};
    json["model"] = model_json;
    if (winner_out != nullptr) {
      auto doc = std::make_unique<bell_document>();
      doc->rep = result.model;
      doc->meta = model_json["meta"];
      *winner_out = doc.release();
    }
    emit(json, json_out);
  });
}

bell_status bell_demo_counterexample(char** json_out) {
  return guarded([&] {
    require_out(json_out);
    const auto model = bell::counterexample_model();
    const Names names = names_of(model);
    const auto quad = bell::exact_quad(model);
    const auto report = bell::chsh_values(quad);
    // E(x,y) - E(x',y) + E(x,y') + E(x',y'): odd sign on context x'y.
    const int k = 2 * bell::Context{1, 0}.index();
    const auto behavior = bell::behavior_from_model(model);

    bell::Json out;
    out["model"] = bell::to_json(model);
    out["quad"] = bell::quad_json(quad, names.alice, names.bob);
    out["combination"] = {{"index", k},
                          {"combination", bell::describe_combination(k, names.alice, names.bob)},
                          {"value", report.values[k].str()}};
    out["chsh"] = bell::chsh_json(report, names.alice, names.bob);
    out["flattenedQuadsAgree"] = bell::flat_quad(bell::product_flatten(model)) == quad &&
                                 bell::flat_quad(bell::uniform_reduce(model)) == quad &&
                                 bell::averaged_quad(bell::bell_average(model)) == quad;
    out["fine"] = fine_report(behavior);
    emit(out, json_out);
  });
}

bell_status bell_demo_quantum(const double* angles, char** json_out) {
  return guarded([&] {
    require_out(json_out);
    bell::AngleSet set = bell::AngleSet::chsh_optimal();
    if (angles != nullptr) {
      for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(angles[i])) bell::fail(bell::ErrorCode::kArgument, "angles must be finite");
      }
      set.alice = {angles[0], angles[1]};
      set.bob = {angles[2], angles[3]};
    }
    const auto behavior = bell::quantum_singlet_behavior(set);
    const auto quad = bell::quad_from_behavior(behavior);
    const auto report = bell::chsh_values(quad);

    bell::Json out;
    out["angles"] = {bell::decimal(set.alice[0]), bell::decimal(set.alice[1]), bell::decimal(set.bob[0]),
                     bell::decimal(set.bob[1])};
    out["behavior"] = bell::to_json(behavior);
    out["quad"] = bell::quad_json(quad, behavior.alice_settings, behavior.bob_settings);
    out["chsh"] = bell::chsh_json(report, behavior.alice_settings, behavior.bob_settings);
    out["tsirelson"] = bell::decimal(2.0 * std::sqrt(2.0));
    out["fine"] = fine_report(behavior);
    emit(out, json_out);
  });
}

}  // extern "C"
