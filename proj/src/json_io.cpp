#include "infinite/json_io.hpp"

#include <cmath>
#include <limits>

#include "infinite/error.hpp"

namespace infinite {

using json = nlohmann::json;

namespace {

// JSON has no infinity; raw MAPE may legitimately be infinite.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    if (j == "Infinity") return std::numeric_limits<double>::infinity();
    if (j == "-Infinity") return -std::numeric_limits<double>::infinity();
    throw Error("malformed_json", "expected a number", j.get<std::string>());
  }
  return j.get<double>();
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json to_json(const metrics::MetricReport& r) {
  return {{"mse", r.mse},
          {"mae", r.mae},
          {"mb", r.mb},
          {"mape_pct", number(r.mape_pct)},
          {"mape_masked_pct", optional_number(r.mape_masked_pct)},
          {"mfe_pct", optional_number(r.mfe_pct)},
          {"mfb_pct", optional_number(r.mfb_pct)},
          {"r2", optional_number(r.r2)},
          {"pearson_r", optional_number(r.pearson_r)},
          {"n", r.n},
          {"n_masked", r.n_masked},
          {"n_fractional_excluded", r.n_fractional_excluded}};
}

metrics::MetricReport metric_report_from_json(const json& j) {
  try {
    metrics::MetricReport r;
    r.mse = j.at("mse").get<double>();
    r.mae = j.at("mae").get<double>();
    r.mb = j.at("mb").get<double>();
    r.mape_pct = number_from(j.at("mape_pct"));
    r.mape_masked_pct = optional_from(j, "mape_masked_pct");
    r.mfe_pct = optional_from(j, "mfe_pct");
    r.mfb_pct = optional_from(j, "mfb_pct");
    r.r2 = optional_from(j, "r2");
    r.pearson_r = optional_from(j, "pearson_r");
    r.n = j.at("n").get<std::size_t>();
    r.n_masked = j.at("n_masked").get<std::size_t>();
    r.n_fractional_excluded = j.at("n_fractional_excluded").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error("malformed_json", "malformed metric report", e.what());
  }
}

json to_json(const indices::InIReport& r) {
  return {{"e_sbr", r.e_sbr}, {"e_art", r.e_art}, {"e", r.e},         {"c", r.c},
          {"a", r.a},         {"ini", r.ini},     {"artpq_s", r.artpq_s}, {"mape_av_pct", r.mape_av_pct}};
}

indices::InIReport ini_report_from_json(const json& j) {
  try {
    indices::InIReport r;
    r.e_sbr = j.at("e_sbr").get<double>();
    r.e_art = j.at("e_art").get<double>();
    r.e = j.at("e").get<double>();
    r.c = j.at("c").get<double>();
    r.a = j.at("a").get<double>();
    r.ini = j.at("ini").get<double>();
    r.artpq_s = j.at("artpq_s").get<double>();
    r.mape_av_pct = j.at("mape_av_pct").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error("malformed_json", "malformed InI report", e.what());
  }
}

json to_json(const indices::SessionStats& s) {
  return {{"attempts_q", s.attempts_q},
          {"total_queries_n", s.total_queries_n},
          {"sb_count", s.sb_count},
          {"response_times_s", s.response_times_s},
          {"sb_times_s", s.sb_times_s}};
}

json to_json(const report::FrameworkResult& r) {
  json metrics = json::object();
  json order = json::array();
  for (const auto& v : r.metrics) {
    metrics[v.variable] = to_json(v.report);
    order.push_back(v.variable);
  }
  return {{"framework_label", r.framework_label},
          {"session_id", r.session_id},
          {"variables", order},
          {"metrics", metrics},
          {"ini", to_json(r.ini)}};
}

report::FrameworkResult framework_result_from_json(const json& j) {
  try {
    report::FrameworkResult r;
    r.framework_label = j.at("framework_label").get<std::string>();
    r.session_id = j.value("session_id", std::string{});
    for (const auto& name : j.at("variables")) {
      const auto var = name.get<std::string>();
      r.metrics.push_back({var, metric_report_from_json(j.at("metrics").at(var))});
    }
    r.ini = ini_report_from_json(j.at("ini"));
    return r;
  } catch (const json::exception& e) {
    throw Error("malformed_json", "malformed evaluation result", e.what());
  }
}

json to_json(const llm::TimedResponse& r) {
  json j = {{"latency_s", r.latency_s}, {"status", llm::to_string(r.status)}, {"detail", r.detail}};
  j["text"] = r.text ? json(*r.text) : json(nullptr);
  j["http_status"] = r.http_status ? json(*r.http_status) : json(nullptr);
  j["timed_out"] = r.timed_out;
  return j;
}

}  // namespace infinite
