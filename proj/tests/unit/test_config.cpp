#include "obsid/config.hpp"
#include "obsid/error.hpp"

#include <doctest.h>

#include <algorithm>

using namespace obsid;

namespace {

constexpr const char* kMinimal = R"(
seed: 42
model:
  family: one_qubit_2param
prior:
  mean: [4.1, 6.2]
  std: [0.5, 0.5]
backend:
  kind: simulated
  g_true: [4.0, 6.0]
pulses:
  - family: rabi
  - family: pwc_amplitude
    segments: 10
)";

bool mentions(const std::vector<std::string>& issues, const std::string& what) {
  return std::any_of(issues.begin(), issues.end(), [&](const std::string& s) { return s.find(what) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal config fills every default") {
  const RunConfig cfg = parse_config(yaml_to_json(kMinimal));
  CHECK(cfg.seed == 42);
  CHECK(cfg.model.parameter_count() == 2);
  CHECK(cfg.prior_covariance(0, 0) == 0.25);
  CHECK(cfg.prior_covariance(0, 1) == 0.0);
  CHECK(cfg.backend.shots == 1000);
  CHECK(cfg.loop.cost.planned_shots == 1000);
  REQUIRE(cfg.loop.families.size() == 2);
  CHECK(cfg.loop.families[1].segments == 10);
  CHECK(cfg.loop.cost.a_diagonal == std::vector<double>{1.0, 1.0});
  CHECK(cfg.loop.cost_kind == CostKind::apc);
  CHECK(cfg.loop.population_size == 2000);
}

TEST_CASE("emit round trip is idempotent") {
  const RunConfig cfg = parse_config(yaml_to_json(kMinimal));
  const std::string once = emit_config(cfg);
  const RunConfig back = parse_config(yaml_to_json(once));
  const std::string twice = emit_config(back);
  CHECK(once == twice);
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.backend.seed == cfg.backend.seed);
  CHECK(back.prior_covariance == cfg.prior_covariance);

  // a full covariance and a remote backend survive as well
  auto tree = yaml_to_json(kMinimal);
  tree["prior"].erase("std");
  tree["prior"]["covariance"] = Json::array({Json::array({0.25, 0.1}), Json::array({0.1, 0.3})});
  tree["backend"] = {{"kind", "remote"}, {"endpoint", "tcp://lab:5555"}};
  const RunConfig remote = parse_config(tree);
  CHECK(remote.backend.shots == 100);
  const std::string text = emit_config(remote);
  CHECK(emit_config(parse_config(yaml_to_json(text))) == text);
}

TEST_CASE("yaml scalars") {
  const Json j = yaml_to_json("a: 3\nb: 3.5\nc: \"3\"\nd: true\ne: ~\nf: word\ng: 1e-3\n");
  CHECK(j["a"].is_number_integer());
  CHECK(j["b"] == 3.5);
  CHECK(j["c"] == "3");
  CHECK(j["d"] == true);
  CHECK(j["e"].is_null());
  CHECK(j["f"] == "word");
  CHECK(j["g"] == 1e-3);
  CHECK_THROWS_AS(yaml_to_json("a: [1, 2"), Error);
  CHECK_THROWS_AS(yaml_to_json("a: 1\na: 2\n"), Error);
  CHECK(json_to_yaml(Json{{"s", "123"}}).find("\"123\"") != std::string::npos);
}

TEST_CASE("every issue is reported at once") {
  auto tree = yaml_to_json(kMinimal);
  tree["colour"] = "blue";
  tree["prior"]["mean"] = Json::array({4.1});
  tree["backend"]["shots"] = 0;
  tree["optimizer"] = {{"budget", 10}, {"method", "bfgs"}};
  tree["loop"] = {{"stall_ratio", 1.5}, {"population_size", 50}};
  tree["pulses"][1]["segments"] = "ten";
  const auto issues = config_issues(tree);
  INFO(issues.size());
  CHECK(mentions(issues, "colour: unknown key"));
  CHECK(mentions(issues, "prior.mean: expected 2 entries"));
  CHECK(mentions(issues, "backend.shots"));
  CHECK(mentions(issues, "optimizer.budget"));
  CHECK(mentions(issues, "optimizer.method"));
  CHECK(mentions(issues, "loop.stall_ratio"));
  CHECK(mentions(issues, "loop.population_size"));
  CHECK(mentions(issues, "pulses[1].segments"));
  CHECK(issues.size() >= 8);

  try {
    parse_config(tree);
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
}

TEST_CASE("structural errors") {
  CHECK(mentions(config_issues(Json::array()), "must be a mapping"));
  auto tree = yaml_to_json(kMinimal);
  tree.erase("model");
  tree.erase("pulses");
  auto issues = config_issues(tree);
  CHECK(mentions(issues, "model: required section is missing"));
  CHECK(mentions(issues, "pulses"));

  tree = yaml_to_json(kMinimal);
  tree["prior"]["covariance"] = Json::array({Json::array({1.0, 0.0}), Json::array({0.0, 1.0})});
  CHECK(mentions(config_issues(tree), "exactly one of std or covariance"));

  tree = yaml_to_json(kMinimal);
  tree["prior"]["std"] = Json::array({0.5, -0.5});
  CHECK(mentions(config_issues(tree), "prior.std"));

  tree = yaml_to_json(kMinimal);
  tree["prior"].erase("std");
  tree["prior"]["covariance"] = Json::array({Json::array({1.0, 2.0}), Json::array({2.0, 1.0})});
  CHECK(mentions(config_issues(tree), "prior"));

  tree = yaml_to_json(kMinimal);
  tree["backend"] = {{"kind", "remote"}, {"endpoint", "udp://x"}};
  CHECK(mentions(config_issues(tree), "backend.endpoint"));

  tree = yaml_to_json(kMinimal);
  tree["backend"]["kind"] = "quantum";
  CHECK(mentions(config_issues(tree), "backend.kind"));
}

TEST_CASE("two-qubit models reject single-channel families") {
  auto tree = yaml_to_json(kMinimal);
  tree["model"]["family"] = "two_qubit_5param";
  tree["prior"]["mean"] = Json::array({1.0, 2.0, 3.0, 4.0, 5.0});
  tree["prior"]["std"] = Json::array({0.5, 0.5, 0.5, 0.5, 0.5});
  tree["backend"]["g_true"] = Json::array({1.0, 2.0, 3.0, 4.0, 5.0});
  tree["pulses"] = Json::array({Json{{"family", "ramsey"}}});
  CHECK(mentions(config_issues(tree), "only available for single-channel models"));

  tree["pulses"] = Json::array({Json{{"family", "pwc_amplitude"}, {"segments", 4}}});
  CHECK(config_issues(tree).empty());
  const RunConfig cfg = parse_config(tree);
  CHECK(cfg.loop.families[0].channel_count == 2);
  CHECK(cfg.loop.cost.a_diagonal.size() == 5);
}
