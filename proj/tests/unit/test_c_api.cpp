#include <gtest/gtest.h>

#include <bell/bell.h>

#include <json.hpp>
#include <memory>
#include <string>

namespace {

using Json = nlohmann::ordered_json;

struct DocFree {
  void operator()(bell_document* d) const { bell_document_free(d); }
};
using Doc = std::unique_ptr<bell_document, DocFree>;

std::string take(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  bell_string_free(s);
  return out;
}

Doc load(const std::string& name) {
  bell_document* d = nullptr;
  const auto st = bell_document_load((std::string(BELL_DATA_DIR) + "/" + name).c_str(), 1, &d);
  EXPECT_EQ(st, BELL_OK) << bell_last_error();
  return Doc(d);
}

Doc parse(const std::string& text, bell_status expected = BELL_OK) {
  bell_document* d = nullptr;
  EXPECT_EQ(bell_document_parse(text.c_str(), "inline.json", 1, &d), expected) << bell_last_error();
  return Doc(d);
}

TEST(CApi, Version) { EXPECT_STREQ(bell_version(), "1.0.0"); }

TEST(CApi, CounterexampleExact) {
  const auto doc = load("counterexample.json");
  EXPECT_STREQ(bell_document_kind(doc.get()), "contextual");
  char* out = nullptr;
  ASSERT_EQ(bell_exact(doc.get(), &out), BELL_OK);
  const auto j = Json::parse(take(out));
  EXPECT_EQ(j["quad"][0]["value"], "1");
  EXPECT_EQ(j["quad"][3]["value"], "-1");
  EXPECT_EQ(j["chsh"]["values"][4]["value"], "0");
  EXPECT_EQ(j["chsh"]["maxAbs"], "2");
  EXPECT_TRUE(j["chsh"]["satisfied"].get<bool>());
}

TEST(CApi, FlattenPreservesQuad) {
  const auto doc = load("counterexample.json");
  char* exact = nullptr;
  ASSERT_EQ(bell_exact(doc.get(), &exact), BELL_OK);
  const auto reference = Json::parse(take(exact))["quad"];
  for (auto method : {BELL_FLATTEN_PRODUCT, BELL_FLATTEN_UNIFORM, BELL_FLATTEN_AVERAGE}) {
    for (auto refinement : {BELL_REFINE_COMMON_BREAKPOINTS, BELL_REFINE_UNIFORM_GRID}) {
      bell_document* flat = nullptr;
      ASSERT_EQ(bell_flatten(doc.get(), method, refinement, &flat), BELL_OK) << bell_last_error();
      Doc owned(flat);
      char* printed = nullptr;
      ASSERT_EQ(bell_document_print(flat, &printed), BELL_OK);
      // Printed documents parse back to the same document.
      const auto again = parse(take(printed));
      EXPECT_TRUE(bell_document_equal(flat, again.get()));
      char* q = nullptr;
      ASSERT_EQ(bell_exact(again.get(), &q), BELL_OK);
      EXPECT_EQ(Json::parse(take(q))["quad"], reference);
    }
  }
}

TEST(CApi, StatusCodes) {
  parse("{ not json", BELL_ERR_PARSE);
  EXPECT_NE(std::string(bell_last_error()).find("inline.json:1"), std::string::npos) << bell_last_error();
  parse(R"({"kind": "contextual", "source": [["a", "b", "99/100"]], "alice": [], "bob": []})", BELL_ERR_PARSE);
  parse(R"({"kind": "contextual", "source": [["a", "b", "99/100"]],
  "alice": [{"setting": "x", "instrument": [["i", 1]], "rows": ["a"], "outcomes": [[1]]},
            {"setting": "x'", "instrument": [["i", 1]], "rows": ["a"], "outcomes": [[1]]}],
  "bob": [{"setting": "y", "instrument": [["i", 1]], "rows": ["b"], "outcomes": [[1]]},
          {"setting": "y'", "instrument": [["i", 1]], "rows": ["b"], "outcomes": [[1]]}]})",
        BELL_ERR_INVALID_MODEL);
  EXPECT_NE(std::string(bell_last_error()).find("deficit 1/100"), std::string::npos) << bell_last_error();

  bell_document* d = nullptr;
  EXPECT_EQ(bell_document_load("/nonexistent/model.json", 1, &d), BELL_ERR_IO);
  EXPECT_EQ(d, nullptr);

  const char* bad[4] = {"1", "0", "3/2", "0"};
  char* out = nullptr;
  EXPECT_EQ(bell_chsh_quad(bad, 0, &out), BELL_ERR_ARGUMENT);
  EXPECT_EQ(out, nullptr);
  const char* malformed[4] = {"1", "zero", "0", "0"};
  EXPECT_EQ(bell_chsh_quad(malformed, 0, &out), BELL_ERR_PARSE);
  EXPECT_EQ(bell_exact(nullptr, &out), BELL_ERR_ARGUMENT);
}

TEST(CApi, ChshQuadWithTrials) {
  const char* values[4] = {"0.7", "0.7", "0.7", "-0.7"};
  char* out = nullptr;
  ASSERT_EQ(bell_chsh_quad(values, 1000, &out), BELL_OK);
  const auto j = Json::parse(take(out));
  EXPECT_EQ(j["chsh"]["maxAbs"], "14/5");
  EXPECT_FALSE(j["chsh"]["satisfied"].get<bool>());
  EXPECT_EQ(j["finiteSample"]["trials"], 1000);
}

TEST(CApi, FineOnQuantumIsInfeasible) {
  char* out = nullptr;
  ASSERT_EQ(bell_demo_quantum(nullptr, &out), BELL_OK);
  const auto j = Json::parse(take(out));
  EXPECT_FALSE(j["fine"]["feasible"].get<bool>());
  EXPECT_TRUE(j["fine"]["joint"].is_null());
  const auto doc = load("quantum_singlet.json");
  ASSERT_EQ(bell_fine(doc.get(), &out), BELL_OK) << bell_last_error();
  EXPECT_FALSE(Json::parse(take(out))["feasible"].get<bool>());
}

TEST(CApi, SimulateIsDeterministic) {
  const auto doc = load("counterexample.json");
  bell_simulate_options o;
  bell_simulate_defaults(&o);
  o.trials = 2000;
  o.seed = 5;
  char* a = nullptr;
  char* b = nullptr;
  ASSERT_EQ(bell_simulate(doc.get(), &o, BELL_FORMAT_CSV, &a), BELL_OK) << bell_last_error();
  o.threads = 4;
  ASSERT_EQ(bell_simulate(doc.get(), &o, BELL_FORMAT_CSV, &b), BELL_OK);
  const auto csv = take(a);
  EXPECT_EQ(csv, take(b));
  EXPECT_EQ(csv.rfind("trial,a,b,x,y\n", 0), 0u);
  o.trials = 0;
  EXPECT_EQ(bell_simulate(doc.get(), &o, BELL_FORMAT_JSON, &a), BELL_ERR_ARGUMENT);
}

TEST(CApi, SearchReturnsWinner) {
  bell_search_options o;
  bell_search_defaults(&o);
  o.budget = 20000;
  o.restarts = 4;
  char* out = nullptr;
  bell_document* winner = nullptr;
  ASSERT_EQ(bell_search(&o, &out, &winner), BELL_OK) << bell_last_error();
  Doc owned(winner);
  const auto j = Json::parse(take(out));
  EXPECT_TRUE(j.contains("postSelection"));
  EXPECT_STREQ(bell_document_kind(winner), "contextual");
  o.min_coincidence = "2";
  EXPECT_EQ(bell_search(&o, &out, nullptr), BELL_ERR_ARGUMENT);
}

}  // namespace
