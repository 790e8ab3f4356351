#pragma once

// JSON encodings of the public result and configuration types.

#include <json.hpp>

#include "infinite/indices.hpp"
#include "infinite/llm_client.hpp"
#include "infinite/lstm.hpp"
#include "infinite/metrics.hpp"
#include "infinite/report.hpp"

namespace infinite {

nlohmann::json to_json(const metrics::MetricReport& r);
metrics::MetricReport metric_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const indices::InIReport& r);
indices::InIReport ini_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const indices::SessionStats& s);

nlohmann::json to_json(const report::FrameworkResult& r);
report::FrameworkResult framework_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const llm::TimedResponse& r);

}  // namespace infinite
