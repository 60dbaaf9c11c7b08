#pragma once

#include <optional>
#include <string>

#include "chsh.hpp"
#include "fine.hpp"
#include "loophole.hpp"
#include "model_io.hpp"
#include "montecarlo.hpp"

namespace bell {

/// 17 significant digits, enough to round-trip a double.
std::string decimal(double value);

Json quad_json(const CorrelationQuad& quad, const std::array<Label, 2>& alice, const std::array<Label, 2>& bob);
Json chsh_json(const ChshReport& report, const std::array<Label, 2>& alice, const std::array<Label, 2>& bob);
Json postselection_json(const PostSelectionReport& report, const std::array<Label, 2>& alice,
                        const std::array<Label, 2>& bob);
Json sample_bound_json(std::int64_t trials, const SampleBound& bound);
Json joint_json(const JointDistribution16& joint);
Json no_signalling_json(const NoSignallingReport& report, const BehaviorTable& behavior);
Json fine_json(const FineResult& result, const BehaviorTable& behavior);
Json rates_json(const DetectionRates& rates, const ContextualModel& model);
Json estimates_json(const std::array<ContextEstimate, 4>& estimates, const CorrelationQuad& exact, const DagModel& dag);
Json independence_json(const IndependenceReport& report);
Json search_json(const SearchResult& result, const SearchConfig& config);

/// One line per trial: trial,a,b,x,y with setting indices 1 and 2.
std::string spreadsheet_csv(const Spreadsheet& sheet);

}  // namespace bell
