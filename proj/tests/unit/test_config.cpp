#include "memlab/config.hpp"

#include <doctest.h>

using namespace memlab;

TEST_CASE("defaults follow the reference hyperparameters") {
  const RunConfig c;
  CHECK(c.optimizer.learning_rate == 4e-3);
  CHECK(c.optimizer.beta1 == 0.9);
  CHECK(c.optimizer.beta2 == 0.999);
  CHECK(c.optimizer.batch_size == 256);
  CHECK(c.optimizer.weight_decay == 0.0);
  CHECK(c.probe.k_neighbors == 20);
  CHECK(c.model.patterns == 1024);
  CHECK(c.grid.n_values == std::vector<std::size_t>{50, 100, 200, 400});
  CHECK(c.grid.b_values == std::vector<int>{1, 4, 16, 64});
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("json round trip preserves every field") {
  RunConfig c;
  c.data.n = 321;
  c.labels.noise_fraction = 0.25;
  c.model.encoder = "mlp";
  c.model.encoder_hidden = {16, 8};
  c.augment.kind = "subspace";
  c.augment.views = 4;
  c.optimizer.learning_rate = 1e-3;
  c.budget.max_epochs = 7;
  c.seed = 99;
  const RunConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.model.encoder_hidden == std::vector<int>{16, 8});
  CHECK(back.budget.max_epochs.value() == 7);
}

TEST_CASE("unknown keys name their path") {
  try {
    parse_config_text(R"({"optimizer": {"learning_rat": 0.1}})");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("optimizer.learning_rat") != std::string::npos);
  }
}

TEST_CASE("type mismatches and invalid values are rejected") {
  CHECK_THROWS_AS(parse_config_text(R"({"data": {"n": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"optimizer": {"beta1": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"data": {"d1": 40}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("partial configs keep the remaining defaults") {
  const RunConfig c = parse_config_text(R"({"data": {"n": 64}})");
  CHECK(c.data.n == 64);
  CHECK(c.data.d == 32);
  CHECK(c.model.patterns == 1024);
}

TEST_CASE("dotted overrides") {
  RunConfig c = apply_set(RunConfig{}, "optimizer.learning_rate=0.5");
  CHECK(c.optimizer.learning_rate == 0.5);
  c = apply_set(c, "augment.kind=subspace");
  CHECK(c.augment.kind == "subspace");
  c = with_override(c, "grid.B_values", nlohmann::json::array({2, 3}));
  CHECK(c.grid.b_values == std::vector<int>{2, 3});
  CHECK_THROWS_AS(apply_set(c, "optimizer.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_set(c, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(apply_set(c, "data.n=-5"), ConfigError);
  // constraints are checked once the overrides are complete
  RunConfig iid = apply_set(RunConfig{}, "augment.kind=iid");
  CHECK_THROWS_AS(iid.validate(), ConfigError);
  iid = apply_set(iid, "augment.iid_subset=10");
  CHECK_NOTHROW(iid.validate());
}
