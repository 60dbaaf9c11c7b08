// bell: command-line front end over the libbell C API.

#include <bell/bell.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiFailure {
  bell_status status;
  std::string message;
};

struct StringDeleter {
  void operator()(char* s) const { bell_string_free(s); }
};
struct DocumentDeleter {
  void operator()(bell_document* d) const { bell_document_free(d); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;
using OwnedDocument = std::unique_ptr<bell_document, DocumentDeleter>;

void check(bell_status status) {
  if (status != BELL_OK) throw ApiFailure{status, bell_last_error()};
}

std::string take(char* s) { return OwnedString(s).get(); }

OwnedDocument load(const std::string& path) {
  bell_document* doc = nullptr;
  check(bell_document_load(path.c_str(), 1, &doc));
  return OwnedDocument(doc);
}

void render_text(const Json& value, const std::string& path, std::ostream& out) {
  if (value.is_object()) {
    for (const auto& [k, v] : value.items()) render_text(v, path.empty() ? k : path + "." + k, out);
  } else if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) render_text(value[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    out << path << " = " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
  }
}

std::string csv_field(const Json& v) {
  if (v.is_null()) return "";
  return v.is_string() ? v.get<std::string>() : v.dump();
}

/// CSV view of a quad-bearing report: one line per context.
std::string quad_csv(const Json& report) {
  std::string out = "alice,bob,value\n";
  for (const auto& row : report.at("quad")) {
    out += csv_field(row.at("alice")) + "," + csv_field(row.at("bob")) + "," + csv_field(row.at("value")) + "\n";
  }
  return out;
}

struct Output {
  std::string format = "json";
  std::string path;

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text << std::flush;
      return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ApiFailure{BELL_ERR_IO, path + ": cannot open for writing"};
    file << text;
    if (!file) throw ApiFailure{BELL_ERR_IO, path + ": write failed"};
  }

  /// Emits a JSON report in the selected format. csv_view is null when the
  /// report has no tabular form.
  void report(const std::string& json_text, std::string (*csv_view)(const Json&) = nullptr) const {
    if (format == "json") {
      write(json_text);
      return;
    }
    const Json json = Json::parse(json_text);
    if (format == "csv") {
      if (csv_view == nullptr) throw UsageError("--format csv is not available for this subcommand");
      write(csv_view(json));
      return;
    }
    std::ostringstream text;
    render_text(json, "", text);
    write(text.str());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and simulated analysis of contextual hidden-variable models and CHSH inequalities", "bell"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(bell_version()));

  Output output;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--format", output.format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("--out", output.path, "Write the artifact to this file instead of standard output");
  app.add_option("--threads", threads, "Worker threads for simulate and search")
      ->envname("BELL_THREADS")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", seed, "Random seed (simulate and search only)");

  std::string model_path;

  auto* validate = app.add_subcommand("validate", "Check a model or behavior file and report every issue");
  validate->add_option("file", model_path, "Model file")->required();

  auto* exact = app.add_subcommand("exact", "Exact correlation quad and CHSH values of a model file");
  exact->add_option("file", model_path, "Model file")->required();

  std::string method = "product";
  std::string grid = "common";
  auto* flatten = app.add_subcommand("flatten", "Rewrite a contextual model as a single hidden-variable model");
  flatten->add_option("file", model_path, "Contextual model file")->required();
  flatten->add_option("--method", method, "product, uniform or average")
      ->check(CLI::IsMember({"product", "uniform", "average"}));
  flatten->add_option("--grid", grid, "Refinement for --method uniform: common or uniform")
      ->check(CLI::IsMember({"common", "uniform"}));

  std::vector<std::string> quad;
  std::int64_t chsh_trials = 0;
  auto* chsh = app.add_subcommand("chsh", "All eight CHSH values of a quad or model file");
  auto* chsh_file = chsh->add_option("file", model_path, "Model file");
  auto* chsh_quad = chsh->add_option("--quad", quad, "E(x,y) E(x,y') E(x',y) E(x',y') as fractions or decimals")
                        ->expected(4);
  chsh_quad->excludes(chsh_file);
  chsh->add_option("--trials", chsh_trials, "Report the finite-sample bound for this many trials")
      ->check(CLI::PositiveNumber);

  auto* fine = app.add_subcommand("fine", "Joint-distribution feasibility of a behavior table");
  fine->add_option("file", model_path, "Behavior table or contextual model file")->required();

  bell_simulate_options sim;
  bell_simulate_defaults(&sim);
  std::string bias;
  bool confound = false;
  auto* simulate = app.add_subcommand("simulate", "Seeded Monte Carlo trials of a contextual model");
  simulate->add_option("--model", model_path, "Contextual model file")->required();
  simulate->add_option("--trials", sim.trials, "Number of trials")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--bias", bias, "Context probabilities p(x,y),p(x,y'),p(x',y),p(x',y')");
  simulate->add_flag("--confound", confound, "Correlate Alice's setting with the source draw");

  bell_search_options search_options;
  bell_search_defaults(&search_options);
  std::string min_rate;
  std::string max_rate;
  std::string model_out;
  auto* search = app.add_subcommand("search", "Search for post-selected CHSH violations under detection limits");
  search->add_option("--budget", search_options.budget, "Total local moves")->check(CLI::PositiveNumber);
  search->add_option("--restarts", search_options.restarts, "Random restarts")->check(CLI::PositiveNumber);
  search->add_option("--source-atoms", search_options.source_atoms, "Source atoms")->check(CLI::Range(1, 64));
  search->add_option("--instrument-atoms", search_options.instrument_atoms, "Instrument atoms per setting")
      ->check(CLI::Range(1, 16));
  search->add_option("--min-rate", min_rate, "Minimum coincidence rate per context");
  search->add_option("--max-rate", max_rate, "Maximum detection rate per side and setting");
  search->add_option("--model-out", model_out, "Write the winning model file here");

  auto* demo_counterexample = app.add_subcommand("demo-counterexample", "Die-and-coins model with its exact quad");

  std::vector<double> angles;
  auto* demo_quantum = app.add_subcommand("demo-quantum", "Singlet behavior at given analyzer angles");
  demo_quantum->add_option("--angles", angles, "theta_x theta_x' theta_y theta_y' in radians")->expected(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const bool randomized = simulate->parsed() || search->parsed();
    if (randomized && !seed) throw UsageError("--seed is required for this subcommand");
    if (!randomized && seed) throw UsageError("--seed is only accepted by simulate and search");
    if (output.format == "csv" && !(simulate->parsed() || exact->parsed() || chsh->parsed())) {
      throw UsageError("--format csv is only available for simulate, exact and chsh");
    }

    if (validate->parsed()) {
      bell_document* doc = nullptr;
      check(bell_document_load(model_path.c_str(), 0, &doc));
      const OwnedDocument owned(doc);
      char* json = nullptr;
      const bell_status status = bell_validate(doc, &json);
      const std::string text = json != nullptr ? take(json) : std::string();
      check(status);
      output.report(text);
    } else if (exact->parsed()) {
      const auto doc = load(model_path);
      char* json = nullptr;
      check(bell_exact(doc.get(), &json));
      output.report(take(json), quad_csv);
    } else if (flatten->parsed()) {
      const auto doc = load(model_path);
      const auto m = method == "product" ? BELL_FLATTEN_PRODUCT
                     : method == "uniform" ? BELL_FLATTEN_UNIFORM
                                           : BELL_FLATTEN_AVERAGE;
      bell_document* flat = nullptr;
      check(bell_flatten(doc.get(), m, grid == "uniform" ? BELL_REFINE_UNIFORM_GRID : BELL_REFINE_COMMON_BREAKPOINTS,
                         &flat));
      const OwnedDocument owned(flat);
      char* text = nullptr;
      check(bell_document_print(flat, &text));
      output.report(take(text));
    } else if (chsh->parsed()) {
      char* json = nullptr;
      if (!quad.empty()) {
        const char* values[4] = {quad[0].c_str(), quad[1].c_str(), quad[2].c_str(), quad[3].c_str()};
        check(bell_chsh_quad(values, chsh_trials, &json));
      } else if (!model_path.empty()) {
        const auto doc = load(model_path);
        check(bell_chsh_document(doc.get(), chsh_trials, &json));
      } else {
        throw UsageError("chsh needs a model file or --quad");
      }
      output.report(take(json), quad_csv);
    } else if (fine->parsed()) {
      const auto doc = load(model_path);
      char* json = nullptr;
      check(bell_fine(doc.get(), &json));
      output.report(take(json));
    } else if (simulate->parsed()) {
      std::vector<std::string> parts;
      if (!bias.empty()) {
        std::stringstream in(bias);
        for (std::string part; std::getline(in, part, ',');) parts.push_back(part);
        if (parts.size() != 4) throw UsageError("--bias needs four comma-separated probabilities");
        for (int i = 0; i < 4; ++i) sim.bias[i] = parts[i].c_str();
      }
      sim.seed = *seed;
      sim.confound = confound ? 1 : 0;
      sim.threads = threads;
      const auto doc = load(model_path);
      char* out = nullptr;
      check(bell_simulate(doc.get(), &sim, output.format == "csv" ? BELL_FORMAT_CSV : BELL_FORMAT_JSON, &out));
      const std::string text = take(out);
      if (output.format == "csv") {
        output.write(text);
      } else {
        output.report(text);
      }
    } else if (search->parsed()) {
      search_options.seed = *seed;
      search_options.threads = threads;
      if (!min_rate.empty()) search_options.min_coincidence = min_rate.c_str();
      if (!max_rate.empty()) search_options.max_detection = max_rate.c_str();
      char* json = nullptr;
      bell_document* winner = nullptr;
      check(bell_search(&search_options, &json, model_out.empty() ? nullptr : &winner));
      const OwnedDocument owned(winner);
      const std::string report = take(json);
      if (!model_out.empty()) {
        char* text = nullptr;
        check(bell_document_print(winner, &text));
        Output{"json", model_out}.write(take(text));
      }
      output.report(report);
    } else if (demo_counterexample->parsed()) {
      char* json = nullptr;
      check(bell_demo_counterexample(&json));
      output.report(take(json));
    } else if (demo_quantum->parsed()) {
      char* json = nullptr;
      check(bell_demo_quantum(angles.empty() ? nullptr : angles.data(), &json));
      output.report(take(json));
    }
  } catch (const UsageError& e) {
    std::cerr << "bell: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ApiFailure& e) {
    std::cerr << "bell: " << e.message << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "bell: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
