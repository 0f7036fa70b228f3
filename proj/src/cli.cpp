#include "memlab/cli.hpp"

#include "memlab/checkpoint.hpp"
#include "memlab/checks.hpp"
#include "memlab/config.hpp"
#include "memlab/dataset_io.hpp"
#include "memlab/experiments.hpp"
#include "memlab/records.hpp"

#include "text_format.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace memlab {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool force = false;
  int verbosity = 0;
  std::optional<unsigned> threads;

  // subcommand specific
  std::string sweep_name;
  std::string model_path;
  std::string data_path;
  std::string test_path;
  std::string data_format = "bin";
  std::optional<int> views;
};

RunConfig resolve_config(const Options& opt) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig{} : parse_config(opt.config_path);
  for (const auto& s : opt.sets) cfg = apply_set(cfg, s);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) cfg.threads = *opt.threads;
  if (!opt.sweep_name.empty()) cfg.sweep.name = opt.sweep_name;
  cfg.validate();
  if (opt.verbosity > 0) std::clog << "resolved config:\n" << config_to_json(cfg).dump(2) << "\n";
  return cfg;
}

/// Creates the output directory; an existing non-empty one needs --force.
fs::path prepare_out_dir(const Options& opt, const std::string& fallback) {
  const fs::path dir = opt.out_dir.empty() ? fs::path(fallback) : fs::path(opt.out_dir);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw InputError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !opt.force) {
      throw InputError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
    }
  }
  fs::create_directories(dir);
  return dir;
}

void write_snapshot(const fs::path& dir, const RunConfig& cfg) {
  write_text((dir / "config.json").string(), config_to_json(cfg).dump(2) + "\n");
}

std::string ext(const Options& opt) { return opt.data_format == "csv" ? ".csv" : ".bin"; }

int cmd_gen_data(const Options& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, "data");
  write_snapshot(dir, cfg);
  const RunInputs in = prepare_run(cfg, cfg.seed);
  write_dataset(in.train, (dir / ("train" + ext(opt))).string());
  write_dataset(in.test, (dir / ("test" + ext(opt))).string());
  out << "wrote " << in.train.size() << " train and " << in.test.size() << " test samples to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, "run");
  write_snapshot(dir, cfg);
  RunInputs in;
  Model trained;
  const RunRecord rec = run_single(cfg, cfg.seed, &in, &trained);
  emit_records({rec}, dir.string());
  save_model(trained, (dir / "model.bin").string());
  write_dataset(in.train, (dir / ("train" + ext(opt))).string());
  write_dataset(in.test, (dir / ("test" + ext(opt))).string());
  out << rec.run_id << ": steps=" << rec.steps << " train_acc=" << rec.train_acc
      << " probe_init=" << rec.probe_init.accuracy << " probe_final=" << rec.probe_final.accuracy
      << " verdict=" << to_string(rec.verdict.verdict) << "\n";
  if (rec.failed) {
    err << "run failed: " << rec.failure << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

int cmd_probe(const Options& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  if (opt.model_path.empty() || opt.data_path.empty()) throw ConfigError("probe needs --model and --data");
  const fs::path dir = prepare_out_dir(opt, "probe");
  write_snapshot(dir, cfg);
  const Model model = load_model(opt.model_path);
  const LabeledDataset fit = read_dataset(opt.data_path);
  const LabeledDataset eval = opt.test_path.empty() ? fit : read_dataset(opt.test_path);
  if (fit.dim() != model.input_dim() || eval.dim() != model.input_dim()) {
    throw InputError("probe: dataset dimension does not match the model");
  }
  const int k = clamp_neighbors(cfg.probe.k_neighbors, fit.size());
  const auto layers = probe_layers(model, fit, eval, k);
  std::ostringstream csv;
  csv << "layer,is_embedding,clean_accuracy,random_accuracy,k,n_fit,n_eval\n";
  for (const auto& [clean, random] : layers) {
    csv << clean.layer << ',' << (clean.layer == model.embedding_layer() ? 1 : 0) << ','
        << detail::format_double(clean.accuracy) << ',' << detail::format_double(random.accuracy) << ',' << clean.k
        << ',' << clean.n_fit << ',' << clean.n_eval << '\n';
    out << "layer " << clean.layer << (clean.layer == model.embedding_layer() ? " (embedding)" : "")
        << ": clean=" << clean.accuracy << " random=" << random.accuracy << "\n";
  }
  write_text((dir / "probes.csv").string(), csv.str());
  return kExitOk;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  const RunConfig cfg = named_sweep_config(resolve_config(opt));
  const auto jobs = sweep_jobs(cfg);  // validates axis and values before anything is written
  const fs::path dir = prepare_out_dir(opt, "sweep");
  write_snapshot(dir, cfg);
  const auto records = run_jobs(jobs, cfg.threads);
  emit_records(records, dir.string());
  write_text((dir / (figure_name(cfg.sweep.name) + ".dat")).string(), sweep_dat(records));
  std::size_t failed = 0;
  for (const auto& r : records) {
    failed += r.failed ? 1 : 0;
    out << r.run_id << ": train_acc=" << r.train_acc << " probe " << r.probe_init.accuracy << " -> "
        << r.probe_final.accuracy << " " << to_string(r.verdict.verdict) << "\n";
  }
  return failed ? kExitRunFailure : kExitOk;
}

int cmd_grid(const Options& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, "grid");
  write_snapshot(dir, cfg);
  const GridResult grid = capacity_grid(cfg.grid.n_values, cfg.grid.b_values, cfg, cfg.grid.seeds);
  emit_records(grid.records, dir.string());
  write_text((dir / "fig16.dat").string(), grid_dat(grid));
  write_text((dir / "capacity.txt").string(), std::to_string(grid.capacity_estimate) + "\n");
  std::size_t failed = 0;
  for (const auto& c : grid.cells) failed += c.failed ? 1 : 0;
  out << "grid: " << grid.cells.size() << " cells, capacity estimate n*B = " << grid.capacity_estimate << "\n";
  return failed ? kExitRunFailure : kExitOk;
}

int cmd_decompose(const Options& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  if (opt.model_path.empty() || opt.data_path.empty()) throw ConfigError("decompose needs --model and --data");
  const fs::path dir = prepare_out_dir(opt, "decompose");
  write_snapshot(dir, cfg);
  const Model model = load_model(opt.model_path);
  const LabeledDataset ds = read_dataset(opt.data_path);
  if (ds.dim() != model.input_dim()) throw InputError("decompose: dataset dimension does not match the model");
  if (ds.num_random_classes != model.output_dim()) {
    throw InputError("decompose: label classes do not match the model output");
  }
  const int views = opt.views ? *opt.views : cfg.probe.decompose_views;
  if (views < 1) throw ConfigError("decompose: --views must be positive");
  const AugmentationSpec base = AugmentationSpec::subspace(ds.d1, cfg.augment.strength * ds.sigma);
  const AugmentationSpec frozen =
      materialize_augmentations(ds, base, views, LabelPolicy::Preserve, Rng(cfg.seed).split("decompose").key());
  const DecompositionReport rep = loss_decompose(model, ds, *frozen.views);
  std::ostringstream csv;
  csv << "term,value\n";
  csv << "l_super," << detail::format_double(rep.l_super) << '\n';
  csv << "inv," << detail::format_double(rep.inv_term) << '\n';
  csv << "bias," << detail::format_double(rep.bias_term) << '\n';
  csv << "residual," << detail::format_double(rep.residual) << '\n';
  for (const auto& [label, b] : rep.per_class_bias) csv << "bias_class_" << label << ',' << detail::format_double(b) << '\n';
  write_text((dir / "decomposition.csv").string(), csv.str());
  out << "L_super=" << rep.l_super << " Inv=" << rep.inv_term << " Bias=" << rep.bias_term
      << " residual=" << rep.residual << "\n";
  return kExitOk;
}

int cmd_check(const Options& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  std::optional<fs::path> dir;
  if (!opt.out_dir.empty()) {
    dir = prepare_out_dir(opt, opt.out_dir);
    write_snapshot(*dir, cfg);
  }
  const auto results = run_all_checks(cfg.seed);
  std::ostringstream csv;
  csv << "suite,instances,failures,max_residual,tolerance,skipped_coordinates,passed\n";
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.instances << " instances, max residual "
        << r.max_residual << " (tolerance " << r.tolerance << ")";
    if (r.skipped_coordinates) out << ", " << r.skipped_coordinates << " singular coordinates skipped";
    out << "\n";
    csv << r.name << ',' << r.instances << ',' << r.failures << ',' << detail::format_double(r.max_residual) << ','
        << detail::format_double(r.tolerance) << ',' << r.skipped_coordinates << ',' << (r.passed ? 1 : 0) << '\n';
  }
  if (dir) write_text((*dir / "checks.csv").string(), csv.str());
  return all ? kExitOk : kExitRunFailure;
}

void add_common(CLI::App* sub, Options& opt, bool with_out = true) {
  sub->add_option("-c,--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
  if (with_out) sub->add_option("-o,--out", opt.out_dir, "output directory");
  sub->add_option("--seed", opt.seed, "run seed");
  sub->add_option("--set", opt.sets, "override a config key, e.g. --set optimizer.learning_rate=0.001");
  sub->add_option("--threads", opt.threads, "worker threads for sweeps and grids (0 = all cores)");
  sub->add_flag("-f,--force", opt.force, "overwrite a non-empty output directory");
  sub->add_flag("-v,--verbose", opt.verbosity, "more output");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"memlab: memorization experiments on a Gaussian-mixture toy model"};
  app.require_subcommand(1);
  Options opt;

  auto* gen = app.add_subcommand("gen-data", "generate train/test datasets");
  add_common(gen, opt);
  gen->add_option("--format", opt.data_format, "dataset format")->check(CLI::IsMember({"bin", "csv"}));

  auto* train = app.add_subcommand("train", "train one model and record the run");
  add_common(train, opt);
  train->add_option("--format", opt.data_format, "dataset format")->check(CLI::IsMember({"bin", "csv"}));

  auto* probe = app.add_subcommand("probe", "K-NN probe a checkpoint at every layer");
  add_common(probe, opt);
  probe->add_option("--model", opt.model_path, "model checkpoint")->required()->check(CLI::ExistingFile);
  probe->add_option("--data", opt.data_path, "fit dataset")->required()->check(CLI::ExistingFile);
  probe->add_option("--test", opt.test_path, "evaluation dataset (defaults to --data)")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run a named or custom sweep");
  add_common(sweep, opt);
  sweep->add_option("--name", opt.sweep_name, "B, classes, noise, strength, projector or custom");

  auto* grid = app.add_subcommand("grid", "capacity phase grid over (n, B)");
  add_common(grid, opt);

  auto* dec = app.add_subcommand("decompose", "split the augmented loss of a checkpoint into Inv and Bias");
  add_common(dec, opt);
  dec->add_option("--model", opt.model_path, "model checkpoint")->required()->check(CLI::ExistingFile);
  dec->add_option("--data", opt.data_path, "dataset")->required()->check(CLI::ExistingFile);
  dec->add_option("--views", opt.views, "views per sample (defaults to probe.decompose_views)");

  auto* check = app.add_subcommand("check", "run the identity and gradient property suites");
  add_common(check, opt);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (*gen) return cmd_gen_data(opt, out);
    if (*train) return cmd_train(opt, out, err);
    if (*probe) return cmd_probe(opt, out);
    if (*sweep) return cmd_sweep(opt, out);
    if (*grid) return cmd_grid(opt, out);
    if (*dec) return cmd_decompose(opt, out);
    if (*check) return cmd_check(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitConfigError;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace memlab
