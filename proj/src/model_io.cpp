#include "model_io.hpp"

#include <algorithm>
#include <initializer_list>
#include <set>
#include <unordered_map>

#include "error.hpp"

namespace bell {

namespace {

// Byte offset of every JSON value in document order, keys excluded. The text
// has already been accepted by the JSON parser, so the scan can be lenient.
std::vector<std::size_t> value_offsets(std::string_view text) {
  std::vector<std::size_t> out;
  std::vector<char> stack;
  bool expecting_key = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    switch (c) {
      case ' ': case '\t': case '\r': case '\n': case ':':
        break;
      case ',':
        expecting_key = !stack.empty() && stack.back() == '{';
        break;
      case '{':
      case '[':
        out.push_back(i);
        stack.push_back(c);
        expecting_key = c == '{';
        break;
      case '}':
      case ']':
        if (!stack.empty()) stack.pop_back();
        expecting_key = false;
        break;
      case '"': {
        if (!expecting_key) out.push_back(i);
        expecting_key = false;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
          if (text[i] == '\\') ++i;
        }
        break;
      }
      default:
        out.push_back(i);
        while (i + 1 < text.size() && std::string_view(",]} \t\r\n").find(text[i + 1]) == std::string_view::npos) ++i;
    }
  }
  return out;
}

void preorder(const Json& v, std::vector<const Json*>& out) {
  out.push_back(&v);
  if (v.is_structured()) {
    for (const auto& child : v) preorder(child, out);
  }
}

class Reader {
 public:
  Reader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  /// Locates every node of `doc`; without this, lines come from token search only.
  void index(const Json& doc) {
    std::vector<const Json*> nodes;
    preorder(doc, nodes);
    const auto offsets = value_offsets(text_);
    // Duplicate keys collapse in the DOM, and then the two walks disagree.
    if (offsets.size() != nodes.size()) return;
    for (std::size_t i = 0; i < nodes.size(); ++i) offset_.emplace(nodes[i], offsets[i]);
  }

  [[noreturn]] void error(ErrorCode code, const std::string& path, const std::string& message,
                          const std::string& token, const Json* at = nullptr) const {
    std::string where = source_;
    int line = 0;
    if (at != nullptr) {
      if (auto it = offset_.find(at); it != offset_.end()) line = line_at(it->second);
    }
    if (line == 0) line = line_of(token);
    if (line > 0) where += ":" + std::to_string(line);
    std::string what = where + ": " + path + ": " + message;
    if (!token.empty()) what += " (token '" + token + "')";
    fail(code, what);
  }

  /// Records where the value known to validation as `path` sits in the text.
  void note(const std::string& path, const Json& node, std::string token = "") const {
    if (token.empty()) token = node.is_structured() ? last_segment(path) : token_of(node);
    notes_.emplace(path, Note{&node, std::move(token)});
  }

  /// Reports a validation issue at the closest noted ancestor of its path.
  [[noreturn]] void invalid(const std::string& path, const std::string& message) const {
    std::string key = path;
    for (;;) {
      if (auto it = notes_.find(key); it != notes_.end()) {
        error(ErrorCode::kInvalidModel, path, message, it->second.token, it->second.node);
      }
      const auto cut = key.find_last_of(".[");
      if (cut == std::string::npos || cut == 0) break;
      key.erase(cut);
    }
    error(ErrorCode::kInvalidModel, path, message, "");
  }

  int line_at(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
  }

  const Json& member(const Json& obj, const char* key, const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end()) error(ErrorCode::kParse, path, std::string("missing key '") + key + "'", "", &obj);
    return *it;
  }

  void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) error(ErrorCode::kParse, path, "expected an object", token_of(obj), &obj);
    for (const auto& [key, value] : obj.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
      if (!known) error(ErrorCode::kParse, path, "unknown key", key, &value);
    }
  }

  const Json& array(const Json& v, const std::string& path, std::size_t expected = 0) const {
    if (!v.is_array()) error(ErrorCode::kParse, path, "expected an array", token_of(v), &v);
    if (expected != 0 && v.size() != expected) {
      error(ErrorCode::kParse, path, "expected " + std::to_string(expected) + " elements", token_of(v), &v);
    }
    return v;
  }

  Rational rational(const Json& v, const std::string& path) const {
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (auto r = Rational::parse(s)) return *r;
      error(ErrorCode::kParse, path, "malformed number", s, &v);
    }
    if (v.is_number()) error(ErrorCode::kParse, path, "write non-integer numbers as strings for exact parsing", v.dump(), &v);
    error(ErrorCode::kParse, path, "expected a fraction or decimal string", token_of(v), &v);
  }

  Label label(const Json& v, const std::string& path) const {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return v.dump();
    error(ErrorCode::kParse, path, "expected a label string", token_of(v), &v);
  }

  bool boolean(const Json& v, const std::string& path) const {
    if (!v.is_boolean()) error(ErrorCode::kParse, path, "expected true or false", token_of(v), &v);
    return v.get<bool>();
  }

  std::vector<Label> labels(const Json& v, const std::string& path) const {
    std::vector<Label> out;
    for (std::size_t i = 0; i < array(v, path).size(); ++i) out.push_back(label(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  int line_of(const std::string& token) const {
    if (token.empty()) return 0;
    auto pos = text_.find("\"" + token + "\"");
    if (pos == std::string_view::npos) pos = text_.find(token);
    return pos == std::string_view::npos ? 0 : line_at(pos);
  }

 private:
  struct Note {
    const Json* node;
    std::string token;
  };

  static std::string token_of(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    std::string s = v.dump();
    return s.size() > 40 ? s.substr(0, 40) : s;
  }

  static std::string last_segment(const std::string& path) {
    const auto cut = path.find_last_of('.');
    std::string tail = cut == std::string::npos ? path : path.substr(cut + 1);
    return tail.substr(0, tail.find('['));
  }

  std::string_view text_;
  std::string source_;
  std::unordered_map<const Json*, std::size_t> offset_;
  mutable std::unordered_map<std::string, Note> notes_;
};

SourcePmf read_source(const Reader& in, const Json& v, const std::string& path) {
  SourcePmf pmf;
  const Json& atoms = in.array(v, path);
  in.note(path, atoms);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const Json& atom = in.array(atoms[i], p, 3);
    in.note(p, atom[2]);
    pmf.atoms.push_back({in.label(atom[0], p), in.label(atom[1], p), in.rational(atom[2], p)});
  }
  return pmf;
}

Json source_json(const SourcePmf& pmf) {
  Json out = Json::array();
  for (const auto& a : pmf.atoms) out.push_back({a.first, a.second, a.mass.str()});
  return out;
}

SettingSpec read_setting(const Reader& in, const Json& v, const std::string& path) {
  in.only_keys(v, path, {"setting", "instrument", "ternary", "rows", "outcomes"});
  SettingSpec spec;
  spec.name = in.label(in.member(v, "setting", path), path + ".setting");
  const std::string base = path + "[" + spec.name + "]";
  in.note(base, v, spec.name);

  const Json& inst = in.array(in.member(v, "instrument", base), base + ".instrument");
  in.note(base + ".instrument", inst);
  in.note(base + ".outcomes.cols", inst, "instrument");
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const std::string p = base + ".instrument[" + std::to_string(i) + "]";
    const Json& atom = in.array(inst[i], p, 2);
    in.note(p, atom[1]);
    spec.instrument.atoms.push_back({in.label(atom[0], p), in.rational(atom[1], p)});
    spec.outcomes.cols.push_back(spec.instrument.atoms.back().label);
  }
  if (auto it = v.find("ternary"); it != v.end()) spec.outcomes.ternary = in.boolean(*it, base + ".ternary");
  const Json& rows = in.member(v, "rows", base);
  spec.outcomes.rows = in.labels(rows, base + ".rows");
  in.note(base + ".outcomes.rows", rows, "rows");

  const Json& table = in.array(in.member(v, "outcomes", base), base + ".outcomes", spec.outcomes.rows.size());
  in.note(base + ".outcomes", table);
  for (std::size_t r = 0; r < table.size(); ++r) {
    const std::string p = base + ".outcomes[" + spec.outcomes.rows[r] + "]";
    const Json& row = in.array(table[r], p, spec.outcomes.cols.size());
    if (row.empty() && !spec.outcomes.cols.empty()) in.error(ErrorCode::kParse, p, "empty outcome row", "", &row);
    for (std::size_t c = 0; c < row.size(); ++c) {
      in.note(base + ".outcomes[" + spec.outcomes.rows[r] + "," + spec.outcomes.cols[c] + "]", row[c]);
      spec.outcomes.values.push_back(in.rational(row[c], p));
    }
  }
  return spec;
}

Json setting_json(const SettingSpec& spec) {
  Json inst = Json::array();
  for (const auto& a : spec.instrument.atoms) inst.push_back({a.label, a.mass.str()});
  // Columns follow the instrument order.
  std::unordered_map<Label, std::size_t> col;
  for (std::size_t c = 0; c < spec.outcomes.cols.size(); ++c) col.emplace(spec.outcomes.cols[c], c);
  Json rows = Json::array();
  for (std::size_t r = 0; r < spec.outcomes.rows.size(); ++r) {
    Json row = Json::array();
    for (const auto& a : spec.instrument.atoms) {
      auto it = col.find(a.label);
      row.push_back(it == col.end() ? std::string("?") : spec.outcomes.at(r, it->second).str());
    }
    rows.push_back(std::move(row));
  }
  Json out;
  out["setting"] = spec.name;
  out["instrument"] = std::move(inst);
  out["ternary"] = spec.outcomes.ternary;
  out["rows"] = spec.outcomes.rows;
  out["outcomes"] = std::move(rows);
  return out;
}

ContextualModel read_contextual(const Reader& in, const Json& doc) {
  in.only_keys(doc, "model", {"kind", "source", "alice", "bob", "meta"});
  ContextualModel model;
  model.source = read_source(in, in.member(doc, "source", "model"), "source");
  for (const char* side : {"alice", "bob"}) {
    const Json& settings = in.array(in.member(doc, side, "model"), side, 2);
    in.note(side, settings);
    auto& target = std::string(side) == "alice" ? model.alice : model.bob;
    for (int s = 0; s < 2; ++s) target[s] = read_setting(in, settings[s], side);
  }
  return model;
}

std::array<Label, 2> read_setting_names(const Reader& in, const Json& v, const std::string& path) {
  const Json& arr = in.array(v, path, 2);
  return {in.label(arr[0], path), in.label(arr[1], path)};
}

BehaviorTable read_behavior(const Reader& in, const Json& doc) {
  in.only_keys(doc, "behavior", {"kind", "ternary", "alice", "bob", "contexts", "meta"});
  BehaviorTable b;
  if (auto it = doc.find("ternary"); it != doc.end()) b.ternary = in.boolean(*it, "ternary");
  b.alice_settings = read_setting_names(in, in.member(doc, "alice", "behavior"), "alice");
  b.bob_settings = read_setting_names(in, in.member(doc, "bob", "behavior"), "bob");

  const Json& contexts = in.array(in.member(doc, "contexts", "behavior"), "contexts", 4);
  std::set<int> seen;
  const std::vector<int> slots = b.ternary ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 2};
  for (std::size_t k = 0; k < 4; ++k) {
    const std::string path = "contexts[" + std::to_string(k) + "]";
    in.only_keys(contexts[k], path, {"alice", "bob", "p"});
    const Label a = in.label(in.member(contexts[k], "alice", path), path + ".alice");
    const Label bb = in.label(in.member(contexts[k], "bob", path), path + ".bob");
    const auto ia = std::find(b.alice_settings.begin(), b.alice_settings.end(), a);
    const auto ib = std::find(b.bob_settings.begin(), b.bob_settings.end(), bb);
    if (ia == b.alice_settings.end()) in.error(ErrorCode::kParse, path, "unknown Alice setting", a, &contexts[k]);
    if (ib == b.bob_settings.end()) in.error(ErrorCode::kParse, path, "unknown Bob setting", bb, &contexts[k]);
    const Context ctx{static_cast<int>(ia - b.alice_settings.begin()), static_cast<int>(ib - b.bob_settings.begin())};
    if (!seen.insert(ctx.index()).second) in.error(ErrorCode::kParse, path, "context listed twice", a + "," + bb, &contexts[k]);
    in.note("contexts[" + a + "," + bb + "]", contexts[k], a + "," + bb);

    const Json& p = in.array(in.member(contexts[k], "p", path), path + ".p", slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const Json& row = in.array(p[i], path + ".p", slots.size());
      for (std::size_t j = 0; j < slots.size(); ++j) b[ctx][slots[i]][slots[j]] = in.rational(row[j], path + ".p");
    }
  }
  return b;
}

FlatModel read_flat(const Reader& in, const Json& doc) {
  in.only_keys(doc, "flat", {"kind", "alice", "bob", "coordinates", "atoms", "meta"});
  FlatModel flat;
  flat.alice_settings = read_setting_names(in, in.member(doc, "alice", "flat"), "alice");
  flat.bob_settings = read_setting_names(in, in.member(doc, "bob", "flat"), "bob");

  const Json& coords = in.array(in.member(doc, "coordinates", "flat"), "coordinates");
  std::vector<std::unordered_map<Label, std::size_t>> index;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const std::string path = "coordinates[" + std::to_string(c) + "]";
    in.only_keys(coords[c], path, {"name", "labels"});
    flat.coordinate_names.push_back(in.label(in.member(coords[c], "name", path), path + ".name"));
    flat.coordinate_labels.push_back(in.labels(in.member(coords[c], "labels", path), path + ".labels"));
    auto& map = index.emplace_back();
    for (std::size_t i = 0; i < flat.coordinate_labels.back().size(); ++i) map.emplace(flat.coordinate_labels.back()[i], i);
  }

  const Json& atoms = in.array(in.member(doc, "atoms", "flat"), "atoms");
  in.note("atoms", atoms);
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const std::string path = "atoms[" + std::to_string(k) + "]";
    in.note(path, atoms[k], "atoms");
    in.only_keys(atoms[k], path, {"tuple", "mass", "alice", "bob"});
    FlatAtom atom;
    const auto tuple = in.labels(in.member(atoms[k], "tuple", path), path + ".tuple");
    if (tuple.size() != coords.size()) {
      in.error(ErrorCode::kParse, path, "tuple arity does not match the coordinates", "", &atoms[k]);
    }
    for (std::size_t c = 0; c < tuple.size(); ++c) {
      auto it = index[c].find(tuple[c]);
      if (it == index[c].end()) in.error(ErrorCode::kParse, path, "unknown coordinate label", tuple[c], &atoms[k]);
      atom.coords.push_back(it->second);
    }
    atom.mass = in.rational(in.member(atoms[k], "mass", path), path + ".mass");
    const Json& a = in.array(in.member(atoms[k], "alice", path), path + ".alice", 2);
    const Json& b = in.array(in.member(atoms[k], "bob", path), path + ".bob", 2);
    for (int s = 0; s < 2; ++s) {
      atom.alice[s] = in.rational(a[s], path + ".alice");
      atom.bob[s] = in.rational(b[s], path + ".bob");
    }
    flat.atoms.push_back(std::move(atom));
  }
  return flat;
}

AveragedModel read_averaged(const Reader& in, const Json& doc) {
  in.only_keys(doc, "averaged", {"kind", "source", "alice", "bob", "meta"});
  AveragedModel m;
  m.source = read_source(in, in.member(doc, "source", "averaged"), "source");
  for (const char* side : {"alice", "bob"}) {
    const bool alice = std::string(side) == "alice";
    const Json& settings = in.array(in.member(doc, side, "averaged"), side, 2);
    in.note("averaged", doc, "kind");
    auto& names = alice ? m.alice_settings : m.bob_settings;
    auto& rows = alice ? m.alice_rows : m.bob_rows;
    auto& bars = alice ? m.alice_bar : m.bob_bar;
    for (int s = 0; s < 2; ++s) {
      const std::string path = std::string(side) + "[" + std::to_string(s) + "]";
      in.only_keys(settings[s], path, {"setting", "rows", "mean"});
      names[s] = in.label(in.member(settings[s], "setting", path), path + ".setting");
      const auto r = in.labels(in.member(settings[s], "rows", path), path + ".rows");
      if (s == 0) {
        rows = r;
      } else if (r != rows) {
        in.error(ErrorCode::kParse, path + ".rows", "both settings must list the same rows", "", &settings[s]);
      }
      const Json& mean = in.array(in.member(settings[s], "mean", path), path + ".mean", rows.size());
      if (rows.empty()) in.error(ErrorCode::kParse, path + ".rows", "no rows", "", &settings[s]);
      for (std::size_t r = 0; r < mean.size(); ++r) {
        in.note(std::string(side) + "[" + names[s] + "][" + rows[r] + "]", mean[r]);
        bars[s].push_back(in.rational(mean[r], path + ".mean"));
      }
    }
  }
  return m;
}

template <class Report>
void enforce(const Reader& in, const Report& report) {
  if (!report.ok()) {
    const auto& issue = report.issues.front();
    in.invalid(issue.path, issue.message);
  }
}

}  // namespace

Document parse_document(std::string_view text, const std::string& source_name, ParseMode mode) {
  Reader in(text, source_name);
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
    const std::string token = at < text.size() ? std::string(1, text[at]) : std::string("<end of input>");
    fail(ErrorCode::kParse, source_name + ":" + std::to_string(in.line_at(at)) + ": malformed JSON near token '" + token + "'");
  }
  if (!doc.is_object()) fail(ErrorCode::kParse, source_name + ":1: top level must be an object");
  in.index(doc);

  std::string kind = "contextual";
  if (auto it = doc.find("kind"); it != doc.end()) kind = in.label(*it, "kind");

  if (kind == "contextual") {
    ContextualModel m = read_contextual(in, doc);
    if (mode == ParseMode::kValidate) enforce(in, validate_model(m));
    return m;
  }
  if (kind == "behavior") {
    BehaviorTable b = read_behavior(in, doc);
    if (mode == ParseMode::kValidate) enforce(in, validate_behavior(b));
    return b;
  }
  if (kind == "flat") {
    FlatModel f = read_flat(in, doc);
    if (mode == ParseMode::kValidate) enforce(in, validate_flat(f));
    return f;
  }
  if (kind == "averaged") {
    AveragedModel a = read_averaged(in, doc);
    if (mode == ParseMode::kValidate) enforce(in, validate_averaged(a));
    return a;
  }
  in.error(ErrorCode::kParse, "kind", "unknown document kind", kind, &doc["kind"]);
}

Json to_json(const ContextualModel& model) {
  Json out;
  out["kind"] = "contextual";
  out["source"] = source_json(model.source);
  for (Side side : {Side::kAlice, Side::kBob}) {
    Json settings = Json::array();
    for (const auto& spec : model.side(side)) settings.push_back(setting_json(spec));
    out[side == Side::kAlice ? "alice" : "bob"] = std::move(settings);
  }
  return out;
}

Json to_json(const FlatModel& model) {
  Json out;
  out["kind"] = "flat";
  out["alice"] = model.alice_settings;
  out["bob"] = model.bob_settings;
  Json coords = Json::array();
  for (std::size_t c = 0; c < model.coordinate_names.size(); ++c) {
    coords.push_back({{"name", model.coordinate_names[c]}, {"labels", model.coordinate_labels[c]}});
  }
  out["coordinates"] = std::move(coords);
  Json atoms = Json::array();
  for (const auto& atom : model.atoms) {
    Json tuple = Json::array();
    for (std::size_t c = 0; c < atom.coords.size(); ++c) tuple.push_back(model.coordinate_labels[c][atom.coords[c]]);
    atoms.push_back({{"tuple", std::move(tuple)},
                     {"mass", atom.mass.str()},
                     {"alice", {atom.alice[0].str(), atom.alice[1].str()}},
                     {"bob", {atom.bob[0].str(), atom.bob[1].str()}}});
  }
  out["atoms"] = std::move(atoms);
  return out;
}

Json to_json(const AveragedModel& model) {
  Json out;
  out["kind"] = "averaged";
  out["source"] = source_json(model.source);
  for (Side side : {Side::kAlice, Side::kBob}) {
    const bool alice = side == Side::kAlice;
    Json settings = Json::array();
    for (int s = 0; s < 2; ++s) {
      Json mean = Json::array();
      for (const auto& v : (alice ? model.alice_bar : model.bob_bar)[s]) mean.push_back(v.str());
      settings.push_back({{"setting", (alice ? model.alice_settings : model.bob_settings)[s]},
                          {"rows", alice ? model.alice_rows : model.bob_rows},
                          {"mean", std::move(mean)}});
    }
    out[alice ? "alice" : "bob"] = std::move(settings);
  }
  return out;
}

Json to_json(const BehaviorTable& behavior) {
  Json out;
  out["kind"] = "behavior";
  out["ternary"] = behavior.ternary;
  out["alice"] = behavior.alice_settings;
  out["bob"] = behavior.bob_settings;
  const std::vector<int> slots = behavior.ternary ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 2};
  Json contexts = Json::array();
  for (Context ctx : kContexts) {
    Json p = Json::array();
    for (int i : slots) {
      Json row = Json::array();
      for (int j : slots) row.push_back(behavior[ctx][i][j].str());
      p.push_back(std::move(row));
    }
    contexts.push_back({{"alice", behavior.alice_settings[ctx.alice]}, {"bob", behavior.bob_settings[ctx.bob]}, {"p", std::move(p)}});
  }
  out["contexts"] = std::move(contexts);
  return out;
}

Json to_json(const Document& document) {
  return std::visit([](const auto& d) { return to_json(d); }, document);
}

namespace {

void pretty_into(const Json& value, int depth, std::string& out) {
  const auto scalar = [](const Json& v) { return !v.is_structured(); };
  const std::string pad(2 * static_cast<std::size_t>(depth + 1), ' ');
  if (value.is_array() && !value.empty()) {
    if (std::all_of(value.begin(), value.end(), scalar)) {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) out += (i ? ", " : "") + value[i].dump();
      out += ']';
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < value.size(); ++i) {
      out += pad;
      pretty_into(value[i], depth + 1, out);
      out += i + 1 < value.size() ? ",\n" : "\n";
    }
    out += pad.substr(2) + ']';
  } else if (value.is_object() && !value.empty()) {
    out += "{\n";
    std::size_t i = 0;
    for (const auto& [key, v] : value.items()) {
      out += pad + Json(key).dump() + ": ";
      pretty_into(v, depth + 1, out);
      out += ++i < value.size() ? ",\n" : "\n";
    }
    out += pad.substr(2) + '}';
  } else {
    out += value.dump();
  }
}

}  // namespace

std::string pretty(const Json& value) {
  std::string out;
  pretty_into(value, 0, out);
  return out + "\n";
}

std::string print_document(const Document& document) { return pretty(to_json(document)); }

const char* document_kind(const Document& document) {
  switch (document.index()) {
    case 0: return "contextual";
    case 1: return "flat";
    case 2: return "averaged";
    default: return "behavior";
  }
}

}  // namespace bell
