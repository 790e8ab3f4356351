#include "infinite/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "infinite/error.hpp"

namespace infinite::config {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw Error("invalid_config", where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw Error("invalid_config", "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj.at(key).get<T>();
}

}  // namespace

void HarnessConfig::validate() const {
  index.validate();
  forecast.validate();
  for (const auto& [name, ep] : endpoints) {
    try {
      ep.validate();
    } catch (const Error& e) {
      throw Error(e.code(), "endpoint '" + name + "': " + e.what(), e.detail());
    }
  }
  if (service.port < 0 || service.port > 65535) throw Error("invalid_config", "service port out of range");
  if (service.data_dir.empty()) throw Error("invalid_config", "service data_dir must not be empty");
}

HarnessConfig parse_config(std::string_view json_text) {
  HarnessConfig cfg;
  try {
    const json root = json::parse(json_text);
    reject_unknown(root, {"index", "forecast", "endpoints", "service"}, "config");

    if (root.contains("index")) {
      const json& j = root.at("index");
      reject_unknown(j, {"art1_s", "art2_s", "m", "w_e", "w_c", "w_a", "mape_clamp_pct", "mask_eps", "count_sb_latency"},
                     "index");
      auto& c = cfg.index;
      read(j, "art1_s", c.art1_s);
      read(j, "art2_s", c.art2_s);
      read(j, "m", c.m);
      read(j, "w_e", c.w_e);
      read(j, "w_c", c.w_c);
      read(j, "w_a", c.w_a);
      read(j, "mape_clamp_pct", c.mape_clamp_pct);
      read(j, "mask_eps", c.mask_eps);
      read(j, "count_sb_latency", c.count_sb_latency);
      if (c.mape_clamp_pct != 100.0) throw Error("invalid_config", "mape_clamp_pct is fixed at 100");
    }
    if (root.contains("forecast")) {
      const json& j = root.at("forecast");
      reject_unknown(j,
                     {"units", "activation", "learning_rate", "beta1", "beta2", "epsilon", "batch_size", "epochs",
                      "train_fraction", "timesteps", "seed", "shuffle", "validation_fraction"},
                     "forecast");
      auto& c = cfg.forecast;
      read(j, "units", c.units);
      if (j.contains("activation")) c.activation = forecast::parse_activation(j.at("activation").get<std::string>());
      read(j, "learning_rate", c.learning_rate);
      read(j, "beta1", c.beta1);
      read(j, "beta2", c.beta2);
      read(j, "epsilon", c.epsilon);
      read(j, "batch_size", c.batch_size);
      read(j, "epochs", c.epochs);
      read(j, "train_fraction", c.train_fraction);
      read(j, "timesteps", c.timesteps);
      read(j, "seed", c.seed);
      read(j, "shuffle", c.shuffle);
      read(j, "validation_fraction", c.validation_fraction);
    }
    if (root.contains("endpoints")) {
      const json& eps = root.at("endpoints");
      if (!eps.is_object()) throw Error("invalid_config", "endpoints must be an object");
      for (const auto& [name, j] : eps.items()) {
        reject_unknown(j, {"base_url", "model", "api_key_env", "timeout_s", "max_retries_sb"}, "endpoint " + name);
        llm::EndpointSpec ep;
        ep.base_url = j.at("base_url").get<std::string>();
        ep.model_name = j.at("model").get<std::string>();
        read(j, "api_key_env", ep.api_key_env);
        read(j, "timeout_s", ep.timeout_s);
        read(j, "max_retries_sb", ep.max_retries_sb);
        cfg.endpoints.emplace(name, std::move(ep));
      }
    }
    if (root.contains("service")) {
      const json& j = root.at("service");
      reject_unknown(j, {"bind_address", "port", "data_dir"}, "service");
      read(j, "bind_address", cfg.service.bind_address);
      read(j, "port", cfg.service.port);
      read(j, "data_dir", cfg.service.data_dir);
    }
  } catch (const json::exception& e) {
    throw Error("invalid_config", "malformed configuration", e.what());
  }
  cfg.validate();
  return cfg;
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read configuration", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace infinite::config
