#include "memlab/checkpoint.hpp"
#include "memlab/dataset_io.hpp"
#include "memlab/records.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace memlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("memlab_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

LabeledDataset sample_dataset() {
  ToyDataConfig cfg;
  cfg.n = 40;
  cfg.seed = 12;
  return randomize_labels(generate_toy_data(cfg), 7, 1.0, false, 3);
}

void check_same(const LabeledDataset& a, const LabeledDataset& b) {
  CHECK(a.inputs == b.inputs);
  CHECK(a.clean_labels == b.clean_labels);
  CHECK(a.random_labels == b.random_labels);
  CHECK(a.true_cluster == b.true_cluster);
  CHECK(a.cluster_means == b.cluster_means);
  CHECK(a.d1 == b.d1);
  CHECK(a.num_classes == b.num_classes);
  CHECK(a.num_random_classes == b.num_random_classes);
  CHECK(a.seed == b.seed);
  CHECK(a.sigma == b.sigma);
}

}  // namespace

TEST_CASE("dataset round trips exactly in both formats") {
  TempDir dir;
  const LabeledDataset ds = sample_dataset();
  write_dataset(ds, dir.file("d.bin"));
  write_dataset(ds, dir.file("d.csv"));
  check_same(read_dataset(dir.file("d.bin")), ds);
  check_same(read_dataset(dir.file("d.csv")), ds);
}

TEST_CASE("damaged dataset files are reported") {
  TempDir dir;
  const LabeledDataset ds = sample_dataset();
  write_dataset(ds, dir.file("d.bin"));
  const auto size = fs::file_size(dir.file("d.bin"));
  fs::resize_file(dir.file("d.bin"), size - 9);
  CHECK_THROWS_AS(read_dataset(dir.file("d.bin")), DataError);
  {
    std::ofstream out(dir.file("bad.csv"));
    out << "x0,x1\n1,2\n";
  }
  CHECK_THROWS_AS(read_dataset(dir.file("bad.csv")), DataError);
  CHECK_THROWS(read_dataset(dir.file("missing.bin")));
}

TEST_CASE("model checkpoints reproduce outputs bit for bit") {
  TempDir dir;
  ModelSpec a;
  a.num_patterns = 30;
  a.num_classes = 7;
  a.train_patterns = false;
  ModelSpec b;
  b.encoder = EncoderKind::Mlp;
  b.encoder_hidden = {12};
  b.embedding_dim = 6;
  b.projector = ProjectorKind::Mlp;
  b.projector_hidden = {9};
  ModelSpec c;
  c.projector = ProjectorKind::Identity;
  c.num_classes = 32;
  Mat X = Mat::Random(5, 32);
  for (const ModelSpec& spec : {a, b, c}) {
    const Model m = init_model(spec, 21);
    save_model(m, dir.file("m.bin"));
    const Model back = load_model(dir.file("m.bin"));
    CHECK(forward_batch(back, X) == forward_batch(m, X));
    CHECK(back.train_patterns == m.train_patterns);
    CHECK(parameter_names(back) == parameter_names(m));
  }
  {
    std::ofstream out(dir.file("junk.bin"), std::ios::binary);
    out << "not a model";
  }
  CHECK_THROWS_AS(load_model(dir.file("junk.bin")), DataError);
}

TEST_CASE("runs.csv parses back to the same rows") {
  RunRecord rec;
  rec.run_id = "preserve:B=4:seed=1";
  rec.axis = "augment.views";
  rec.value = "4";
  rec.arm = "preserve";
  rec.seed = 1;
  rec.config.data.n = 50;
  rec.config.augment.kind = "subspace";
  rec.config.augment.views = 4;
  rec.train_acc = 0.1 + 0.2;
  rec.probe_init.accuracy = 1.0 / 3.0;
  rec.probe_final.accuracy = 0.75;
  rec.verdict.verdict = Verdict::NotMemorized;
  rec.invariance_init.mean_I = 0.123456789012345678;
  rec.wall_time_s = 3.5;
  RunRecord other = rec;
  other.run_id = "run, with \"quotes\"";
  const auto rows = parse_runs_csv(runs_csv({rec, other}));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == to_row(rec));
  CHECK(rows[1] == to_row(other));
  CHECK(rows[0].train_acc == 0.1 + 0.2);
  CHECK(rows[0].B == 4);
  // wall time is only written when requested
  CHECK(rows[0].wall_time_s == 0.0);
  CHECK(run_columns().front() == "run_id");
  CHECK(run_columns().size() == 22);
}

TEST_CASE("figure names") {
  CHECK(figure_name("B") == "fig5");
  CHECK(figure_name("classes") == "fig9");
  CHECK(figure_name("strength") == "fig11");
  CHECK(figure_name("noise") == "fig12");
  CHECK(figure_name("projector") == "fig7");
  CHECK(figure_name("custom") == "sweep");
}
