#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "infinite/indices.hpp"
#include "infinite/llm_client.hpp"
#include "infinite/lstm.hpp"

namespace infinite::config {

struct ServiceSettings {
  std::string bind_address = "127.0.0.1";
  int port = 8750;
  std::string data_dir = "infinite-data";
};

/// The harness configuration file. Every section and key is optional;
/// unknown keys are rejected.
///
///   {
///     "index":     {"art1_s": 10, "art2_s": 30, "m": 1, "w_e": .., "w_c": .., "w_a": ..,
///                   "mask_eps": 0.1, "count_sb_latency": false},
///     "forecast":  {"units": 10, "activation": "relu", "learning_rate": 0.001, "beta1": 0.9,
///                   "beta2": 0.999, "epsilon": 1e-8, "batch_size": 16, "epochs": 10,
///                   "train_fraction": 0.9, "timesteps": 3, "seed": 42, "shuffle": false,
///                   "validation_fraction": 0},
///     "endpoints": {"gpt": {"base_url": "https://api.openai.com/v1", "model": "gpt-4o",
///                           "api_key_env": "OPENAI_API_KEY", "timeout_s": 300, "max_retries_sb": 3}},
///     "service":   {"bind_address": "127.0.0.1", "port": 8750, "data_dir": "infinite-data"}
///   }
struct HarnessConfig {
  indices::IndexConfig index;
  forecast::ForecastConfig forecast;
  std::map<std::string, llm::EndpointSpec> endpoints;
  ServiceSettings service;

  void validate() const;
};

HarnessConfig parse_config(std::string_view json_text);
HarnessConfig load_config(const std::filesystem::path& path);

}  // namespace infinite::config
