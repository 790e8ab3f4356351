#include <doctest.h>

#include "infinite/config.hpp"
#include "infinite/error.hpp"

using namespace infinite;
using namespace infinite::config;

TEST_CASE("empty configuration gives the baseline settings") {
  const HarnessConfig c = parse_config("{}");
  CHECK(c.index.art1_s == 10.0);
  CHECK(c.index.art2_s == 30.0);
  CHECK(c.index.m == 1.0);
  CHECK(c.forecast.units == 10);
  CHECK(c.forecast.activation == forecast::Activation::relu);
  CHECK(c.forecast.batch_size == 16);
  CHECK(c.forecast.epochs == 10);
  CHECK(c.forecast.timesteps == 3);
  CHECK(c.forecast.train_fraction == 0.9);
  CHECK(c.service.port == 8750);
  CHECK(c.endpoints.empty());
}

TEST_CASE("full configuration") {
  const HarnessConfig c = parse_config(R"({
    "index": {"art1_s": 5, "art2_s": 20, "m": 2, "w_e": 0.5, "w_c": 0.25, "w_a": 0.25, "mask_eps": 0.2},
    "forecast": {"units": 8, "activation": "tanh", "epochs": 3, "seed": 7},
    "endpoints": {"gpt": {"base_url": "https://api.openai.com/v1", "model": "gpt-4o",
                          "api_key_env": "OPENAI_API_KEY", "timeout_s": 120, "max_retries_sb": 5}},
    "service": {"port": 9000, "data_dir": "/tmp/x"}
  })");
  CHECK(c.index.art1_s == 5.0);
  CHECK(c.index.w_e == 0.5);
  CHECK(c.index.mask_eps == 0.2);
  CHECK(c.forecast.activation == forecast::Activation::tanh);
  CHECK(c.forecast.seed == 7);
  const auto& gpt = c.endpoints.at("gpt");
  CHECK(gpt.model_name == "gpt-4o");
  CHECK(gpt.api_key_env == "OPENAI_API_KEY");
  CHECK(gpt.timeout_s == 120.0);
  CHECK(gpt.max_retries_sb == 5);
  CHECK(c.service.port == 9000);
}

TEST_CASE("invalid configurations are rejected") {
  for (const char* text : {
           R"({"indx": {}})",
           R"({"index": {"w_e": 0.9}})",
           R"({"index": {"art1_s": 40}})",
           R"({"index": {"mape_clamp_pct": 50}})",
           R"({"forecast": {"units": 0}})",
           R"({"forecast": {"activation": "gelu"}})",
           R"({"endpoints": {"x": {"base_url": "nope", "model": "m"}}})",
           R"({"endpoints": {"x": {"base_url": "http://h", "model": "m", "api_key": "sk-123"}}})",
           R"({"service": {"port": 70000}})",
           R"([1, 2])",
           R"({"index": )",
       }) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text), Error);
  }
}
