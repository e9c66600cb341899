#pragma once

#include "predport/eval_metrics.hpp"
#include "predport/frontier.hpp"
#include "predport/ga_solver.hpp"
#include "predport/objective.hpp"
#include "predport/predictor.hpp"
#include "predport/risk_model.hpp"
#include "predport/taguchi.hpp"

#include <json.hpp>

#include <string>

namespace predport {

using json = nlohmann::json;

inline constexpr int predictor_format_version = 1;

json to_json(const TrainedPredictor& p);
TrainedPredictor predictor_from_json(const json& j);

json to_json(const RiskModel& m);
RiskModel risk_model_from_json(const json& j);

json to_json(const MetricReport& r);
json to_json(const KsResult& r);

json to_json(const GAConfig& c);
GAConfig ga_config_from_json(const json& j);

json portfolio_json(const Portfolio& p, const RiskModel& model, const ObjectiveParams& params, double cost);
json to_json(const GAResult& r, const RiskModel& model);
json to_json(const TuneResult& r, const FactorGrid& grid);
json to_json(const SweepResult& r, const RiskModel& model, const SweepConfig& config, const GAConfig& ga);

const char* to_string(SkewMode m) noexcept;
SkewMode parse_skew_mode(const std::string& text);
const char* to_string(MuMode m) noexcept;
MuMode parse_mu_mode(const std::string& text);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
void write_json_file(const std::string& path, const json& j);

} // namespace predport
