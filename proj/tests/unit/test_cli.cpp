#include "memlab/cli.hpp"
#include "memlab/records.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace memlab;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& tag) {
    root = fs::temp_directory_path() / ("memlab_cli_" + tag);
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string at(const std::string& name) const { return (root / name).string(); }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "memlab");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kSmall = {"--set", "data.n=30",          "--set", "data.n_test=40",
                                         "--set", "model.patterns=16",  "--set", "budget.max_steps=20",
                                         "--set", "probe.schedule=0",   "--set", "probe.invariance_points=10"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST_CASE("check prints one line per suite and exits 0") {
  const Outcome o = run({"check"});
  CHECK(o.code == kExitOk);
  CHECK(o.out.find("PASS lemma") != std::string::npos);
  CHECK(o.out.find("PASS decomposition") != std::string::npos);
  CHECK(o.out.find("FAIL") == std::string::npos);
}

TEST_CASE("train writes a snapshot, records and a checkpoint") {
  Scratch s("train");
  const Outcome o = run(with_small({"train", "-o", s.at("a")}));
  REQUIRE(o.code == kExitOk);
  for (const char* f : {"config.json", "runs.csv", "history.csv", "probes.csv", "configs.json", "model.bin"}) {
    CHECK(fs::exists(s.root / "a" / f));
  }
  const auto rows = read_runs_csv(s.at("a/runs.csv"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 30);
  CHECK(rows[0].K_p == 16);
}

TEST_CASE("re-running train reproduces runs.csv byte for byte") {
  Scratch s("repeat");
  REQUIRE(run(with_small({"train", "-o", s.at("a"), "--seed", "5"})).code == kExitOk);
  REQUIRE(run(with_small({"train", "-o", s.at("b"), "--seed", "5"})).code == kExitOk);
  CHECK(read_text(s.at("a/runs.csv")) == read_text(s.at("b/runs.csv")));
  CHECK(read_text(s.at("a/history.csv")) == read_text(s.at("b/history.csv")));
}

TEST_CASE("budget 0 trains nothing and is not memorized") {
  Scratch s("zero");
  auto args = with_small({"train", "-o", s.at("a")});
  args.insert(args.end(), {"--set", "budget.max_steps=0"});
  REQUIRE(run(args).code == kExitOk);
  const auto rows = read_runs_csv(s.at("a/runs.csv"));
  CHECK(rows[0].verdict == "NotMemorized");
  CHECK(rows[0].probe_final == rows[0].probe_init);
}

TEST_CASE("non-empty output directories need --force") {
  Scratch s("force");
  REQUIRE(run(with_small({"gen-data", "-o", s.at("a")})).code == kExitOk);
  CHECK(run(with_small({"gen-data", "-o", s.at("a")})).code != kExitOk);
  CHECK(run(with_small({"gen-data", "-o", s.at("a"), "--force"})).code == kExitOk);
}

TEST_CASE("configuration errors exit with 2") {
  Scratch s("config");
  CHECK(run({"train", "-o", s.at("a"), "--set", "optimizer.learnig_rate=0.1"}).code == kExitConfigError);
  CHECK(run({"sweep", "-o", s.at("b"), "--name", "custom"}).code == kExitConfigError);
  CHECK(run({"no-such-command"}).code == kExitConfigError);
  CHECK(run({"train", "-c", s.at("missing.json")}).code == kExitConfigError);
}

TEST_CASE("probe and decompose work from saved files") {
  Scratch s("probe");
  REQUIRE(run(with_small({"train", "-o", s.at("t"), "--format", "csv"})).code == kExitOk);
  std::string train_data, test_data;
  for (const auto& e : fs::directory_iterator(s.root / "t")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("train", 0) == 0) train_data = e.path().string();
    if (name.rfind("test", 0) == 0) test_data = e.path().string();
  }
  REQUIRE(!train_data.empty());
  REQUIRE(!test_data.empty());
  const Outcome p = run(with_small({"probe", "-o", s.at("p"), "--model", s.at("t/model.bin"), "--data", train_data,
                                    "--test", test_data}));
  CHECK(p.code == kExitOk);
  CHECK(fs::exists(s.root / "p" / "probes.csv"));
  const Outcome d =
      run(with_small({"decompose", "-o", s.at("d"), "--model", s.at("t/model.bin"), "--data", train_data, "--views", "3"}));
  CHECK(d.code == kExitOk);
  const std::string csv = read_text(s.at("d/decomposition.csv"));
  CHECK(csv.find("l_super,") != std::string::npos);
  CHECK(csv.find("inv,") != std::string::npos);
}
