#pragma once

#include <json.hpp>
#include <string>
#include <string_view>
#include <variant>

#include "flatten.hpp"
#include "model.hpp"

namespace bell {

using Json = nlohmann::ordered_json;

/// Anything a model file can hold, discriminated by its "kind" key.
using Document = std::variant<ContextualModel, FlatModel, AveragedModel, BehaviorTable>;

enum class ParseMode {
  kValidate,    // reject documents that fail their invariants (normalization, ranges)
  kStructural,  // only reject malformed documents; invariants are left to the caller
};

/// Errors are kParse for malformed input and kInvalidModel for invariant
/// violations, both prefixed "<source>:<line>:" and naming the offending token.
Document parse_document(std::string_view text, const std::string& source_name, ParseMode mode = ParseMode::kValidate);

Json to_json(const ContextualModel& model);
Json to_json(const FlatModel& model);
Json to_json(const AveragedModel& model);
Json to_json(const BehaviorTable& behavior);
Json to_json(const Document& document);

/// Two-space indented JSON with arrays of scalars kept on one line, plus a trailing newline.
std::string pretty(const Json& value);

/// Canonical text of a document, in the pretty() layout.
std::string print_document(const Document& document);

const char* document_kind(const Document& document);

}  // namespace bell
