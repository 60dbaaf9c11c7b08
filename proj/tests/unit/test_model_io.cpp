#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "error.hpp"
#include "model_io.hpp"
#include "random_models.hpp"

namespace bell {
namespace {

using testing::ModelGen;
using testing::OutcomeMode;

const char* kSmall = R"({
  "kind": "contextual",
  "source": [["p", "q", "1/2"], ["r", "s", "1/2"]],
  "alice": [
    {"setting": "x", "instrument": [["i", 1]], "rows": ["p", "r"], "outcomes": [[1], [-1]]},
    {"setting": "x'", "instrument": [["i", 1]], "rows": ["p", "r"], "outcomes": [["1/2"], [1]]}
  ],
  "bob": [
    {"setting": "y", "instrument": [["j", "1/3"], ["k", "2/3"]], "rows": ["q", "s"], "outcomes": [[1, -1], [1, 1]]},
    {"setting": "y'", "instrument": [["j", 1]], "rows": ["q", "s"], "outcomes": [["-0.25"], [1]]}
  ]
}
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

Error parse_error(const std::string& text, ParseMode mode = ParseMode::kValidate) {
  try {
    parse_document(text, "model.json", mode);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "document parsed";
  return Error(ErrorCode::kInternal, "");
}

TEST(Parse, SmallDocument) {
  const auto doc = parse_document(kSmall, "model.json");
  ASSERT_EQ(doc.index(), 0u);
  const auto& m = std::get<ContextualModel>(doc);
  EXPECT_EQ(m.alice[1].outcomes.at(0, 0), Rational(1, 2));
  EXPECT_EQ(m.bob[1].outcomes.at(0, 0), Rational(-1, 4));
  EXPECT_EQ(m.bob[0].instrument.atoms[1].mass, Rational(2, 3));
  // E(x y) = 1/2 (1/3 - 2/3) + 1/2 (-1) = -2/3.
  EXPECT_EQ(exact_quad(m).e[0], Rational(-2, 3));
  EXPECT_STREQ(document_kind(doc), "contextual");
}

TEST(Parse, MassDeficitNamesFileLineAndToken) {
  const auto text = replace(kSmall, R"(["r", "s", "1/2"])", R"(["r", "s", "49/100"])");
  const auto e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kInvalidModel);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("model.json:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("1/100"), std::string::npos) << msg;
  EXPECT_NE(msg.find("source"), std::string::npos) << msg;
  // Structural parsing accepts the same text.
  EXPECT_NO_THROW(parse_document(text, "model.json", ParseMode::kStructural));
}

TEST(Parse, OutcomeOutOfRange) {
  const auto e = parse_error(replace(kSmall, R"([["1/2"], [1]])", R"([["3/2"], [1]])"));
  EXPECT_EQ(e.code(), ErrorCode::kInvalidModel);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("model.json:6:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("3/2"), std::string::npos) << msg;
}

TEST(Parse, UnknownKeyIsAParseError) {
  const auto e = parse_error(replace(kSmall, R"("setting": "y'",)", R"("setting": "y'", "colour": 1,)"));
  EXPECT_EQ(e.code(), ErrorCode::kParse);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("model.json:10:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("colour"), std::string::npos) << msg;
}

TEST(Parse, JsonFloatsAreRejected) {
  const auto e = parse_error(replace(kSmall, R"(["-0.25"])", "[-0.25]"));
  EXPECT_EQ(e.code(), ErrorCode::kParse);
  EXPECT_NE(std::string(e.what()).find("strings"), std::string::npos) << e.what();
}

TEST(Parse, SyntaxErrorReportsLine) {
  const auto e = parse_error(replace(kSmall, R"("bob": [)", R"("bob": [[)"));
  EXPECT_EQ(e.code(), ErrorCode::kParse);
  EXPECT_EQ(std::string(e.what()).rfind("model.json:", 0), 0u) << e.what();
}

TEST(Parse, MissingRowIsAParseOrModelError) {
  const auto e = parse_error(replace(kSmall, R"("rows": ["p", "r"], "outcomes": [[1], [-1]])", R"("rows": ["p"], "outcomes": [[1]])"));
  EXPECT_TRUE(e.code() == ErrorCode::kParse || e.code() == ErrorCode::kInvalidModel);
  EXPECT_NE(std::string(e.what()).find("model.json:"), std::string::npos);
}

TEST(Parse, BadFractionToken) {
  const auto e = parse_error(replace(kSmall, R"("2/3")", R"("2/0")"));
  EXPECT_NE(std::string(e.what()).find("2/0"), std::string::npos) << e.what();
}

TEST(Parse, UnknownKind) {
  const auto e = parse_error(replace(kSmall, R"("contextual")", R"("quantum")"));
  EXPECT_EQ(e.code(), ErrorCode::kParse);
  EXPECT_NE(std::string(e.what()).find("quantum"), std::string::npos) << e.what();
}

TEST(Parse, CommittedCounterexampleFile) {
  std::ifstream in(std::string(BELL_DATA_DIR) + "/counterexample.json");
  std::stringstream text;
  text << in.rdbuf();
  const auto doc = parse_document(text.str(), "counterexample.json");
  EXPECT_EQ(std::get<ContextualModel>(doc), counterexample_model());
  EXPECT_EQ(print_document(doc), text.str());
}

TEST(RoundTrip, RandomContextualModels) {
  ModelGen gen(71);
  for (int i = 0; i < 200; ++i) {
    const Document doc = gen.model(static_cast<OutcomeMode>(i % 4));
    const auto text = print_document(doc);
    const auto back = parse_document(text, "gen.json");
    EXPECT_EQ(back, doc) << text;
    EXPECT_EQ(print_document(back), text);
    EXPECT_EQ(text.back(), '\n');
  }
}

TEST(RoundTrip, DerivedDocuments) {
  ModelGen gen(72);
  for (int i = 0; i < 100; ++i) {
    const auto m = gen.model(static_cast<OutcomeMode>(i % 4));
    std::vector<Document> docs = {product_flatten(m), uniform_reduce(m), bell_average(m)};
    if (has_point_outcomes(m)) docs.emplace_back(behavior_from_model(m));
    for (const Document& doc : docs) {
      const auto text = print_document(doc);
      const auto back = parse_document(text, "gen.json");
      EXPECT_EQ(back.index(), doc.index());
      EXPECT_EQ(back, doc) << document_kind(doc);
    }
  }
}

TEST(RoundTrip, NoSignallingBehaviors) {
  ModelGen gen(73);
  for (int i = 0; i < 100; ++i) {
    const Document doc = gen.no_signalling_behavior();
    EXPECT_EQ(parse_document(print_document(doc), "b.json"), doc);
  }
}

TEST(Parse, BehaviorDeficitPointsAtTheContext) {
  ModelGen gen(74);
  auto b = gen.no_signalling_behavior();
  b.p[3][0][0] -= Rational(1, 100);
  const auto text = print_document(Document(b));
  const auto e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kInvalidModel);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("deficit 1/100"), std::string::npos) << msg;
  // The reported line opens the x'y' context object.
  const auto colon = msg.find(':', msg.find(':') + 1);
  const int line = std::stoi(msg.substr(msg.find(':') + 1, colon - msg.find(':') - 1));
  std::vector<std::string> lines;
  std::istringstream stream(text);
  for (std::string l; std::getline(stream, l);) lines.push_back(l);
  ASSERT_LT(static_cast<std::size_t>(line + 1), lines.size());
  EXPECT_NE(lines[line - 1].find('{'), std::string::npos) << msg;
  EXPECT_NE(lines[line].find("\"alice\": \"x'\""), std::string::npos) << msg;
  EXPECT_NE(lines[line + 1].find("\"bob\": \"y'\""), std::string::npos) << msg;
}

TEST(Pretty, ScalarArraysStayOnOneLine) {
  const Json j = Json::parse(R"({"a": [1, 2, "x"], "b": {"c": [[1, 2], [3]]}, "d": []})");
  EXPECT_EQ(pretty(j), "{\n  \"a\": [1, 2, \"x\"],\n  \"b\": {\n    \"c\": [\n      [1, 2],\n      [3]\n    ]\n  },\n  \"d\": []\n}\n");
}

}  // namespace
}  // namespace bell
