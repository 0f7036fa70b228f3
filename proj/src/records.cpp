#include "memlab/records.hpp"

#include "text_format.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace memlab {

namespace {

using detail::format_double;

std::string fmt_opt(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

/// Quotes a field when it contains a separator or a quote.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("runs.csv: unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::string dat_token(const std::string& s) {
  if (s.empty()) return "-";
  std::string out = s;
  for (char& c : out) {
    if (c == ' ' || c == '\t' || c == '"') c = '_';
  }
  return out;
}

}  // namespace

RunRow to_row(const RunRecord& rec) {
  RunRow row;
  row.run_id = rec.run_id;
  row.axis = rec.axis;
  row.value = rec.value;
  row.seed = rec.seed;
  row.n = rec.config.data.n;
  row.B = rec.views();
  row.C_prime = rec.label_classes();
  row.noise_fraction = rec.config.labels.noise_fraction;
  row.strength = rec.config.augment.kind == "subspace" ? rec.config.augment.strength : 0.0;
  row.K_p = rec.config.model.projector == "inverse_distance" ? rec.config.model.patterns : 0;
  row.memorized = rec.memorized();
  row.verdict = rec.failed ? "Failed" : to_string(rec.verdict.verdict);
  row.train_acc = rec.train_acc;
  row.probe_init = rec.probe_init.accuracy;
  row.probe_final = rec.probe_final.accuracy;
  row.inv_init = rec.invariance_init.mean_I;
  row.inv_final = rec.invariance_final.mean_I;
  row.l_super = rec.decomposition_final.l_super;
  row.inv_term = rec.decomposition_final.inv_term;
  row.bias_term = rec.decomposition_final.bias_term;
  row.residual = rec.decomposition_final.residual;
  row.wall_time_s = rec.config.record_wall_time ? rec.wall_time_s : 0.0;
  return row;
}

const std::vector<std::string>& run_columns() {
  static const std::vector<std::string> cols = {
      "run_id",    "axis",       "value",       "seed",     "n",        "B",        "C_prime",  "noise_fraction",
      "strength",  "K_p",        "memorized",   "verdict",  "train_acc", "probe_init", "probe_final", "inv_init",
      "inv_final", "l_super",    "inv_term",    "bias_term", "residual", "wall_time_s"};
  return cols;
}

std::string runs_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  const auto& cols = run_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& rec : records) {
    const RunRow r = to_row(rec);
    out << csv_field(r.run_id) << ',' << csv_field(r.axis) << ',' << csv_field(r.value) << ',' << r.seed << ','
        << r.n << ',' << r.B << ',' << r.C_prime << ',' << format_double(r.noise_fraction) << ','
        << format_double(r.strength) << ',' << r.K_p << ',' << (r.memorized ? 1 : 0) << ',' << r.verdict << ','
        << format_double(r.train_acc) << ',' << format_double(r.probe_init) << ',' << format_double(r.probe_final)
        << ',' << format_double(r.inv_init) << ',' << format_double(r.inv_final) << ',' << format_double(r.l_super)
        << ',' << format_double(r.inv_term) << ',' << format_double(r.bias_term) << ',' << format_double(r.residual)
        << ',' << format_double(r.wall_time_s) << '\n';
  }
  return out.str();
}

std::vector<RunRow> parse_runs_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("runs.csv: empty input");
  const auto header = parse_csv_line(line);
  if (header != run_columns()) throw DataError("runs.csv: unexpected header");
  std::vector<RunRow> rows;
  const std::string where = "runs.csv";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = parse_csv_line(line);
    if (f.size() != header.size()) throw DataError("runs.csv: wrong field count in '" + line + "'");
    RunRow r;
    r.run_id = f[0];
    r.axis = f[1];
    r.value = f[2];
    r.seed = static_cast<std::uint64_t>(std::stoull(f[3]));
    r.n = static_cast<std::size_t>(detail::parse_int(f[4], where));
    r.B = static_cast<int>(detail::parse_int(f[5], where));
    r.C_prime = static_cast<int>(detail::parse_int(f[6], where));
    r.noise_fraction = detail::parse_double(f[7], where);
    r.strength = detail::parse_double(f[8], where);
    r.K_p = static_cast<int>(detail::parse_int(f[9], where));
    r.memorized = detail::parse_int(f[10], where) != 0;
    r.verdict = f[11];
    r.train_acc = detail::parse_double(f[12], where);
    r.probe_init = detail::parse_double(f[13], where);
    r.probe_final = detail::parse_double(f[14], where);
    r.inv_init = detail::parse_double(f[15], where);
    r.inv_final = detail::parse_double(f[16], where);
    r.l_super = detail::parse_double(f[17], where);
    r.inv_term = detail::parse_double(f[18], where);
    r.bias_term = detail::parse_double(f[19], where);
    r.residual = detail::parse_double(f[20], where);
    r.wall_time_s = detail::parse_double(f[21], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RunRow> read_runs_csv(const std::string& path) { return parse_runs_csv(read_text(path)); }

std::string history_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "run_id,epoch,train_loss,train_acc_unaug,probe_acc,invariance\n";
  for (const auto& rec : records) {
    for (const auto& e : rec.history.epochs) {
      out << csv_field(rec.run_id) << ',' << e.epoch << ',' << format_double(e.train_loss) << ','
          << format_double(e.train_acc_unaug) << ',' << fmt_opt(e.probe_acc) << ',' << fmt_opt(e.invariance) << '\n';
    }
  }
  return out.str();
}

std::string probes_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "run_id,phase,layer,label_source,k,n_fit,n_eval,accuracy\n";
  auto line = [&](const RunRecord& rec, const char* phase, const ProbeResult& p) {
    out << csv_field(rec.run_id) << ',' << phase << ',' << p.layer << ',' << to_string(p.label_source) << ',' << p.k
        << ',' << p.n_fit << ',' << p.n_eval << ',' << format_double(p.accuracy) << '\n';
  };
  for (const auto& rec : records) {
    line(rec, "init", rec.probe_init);
    line(rec, "final", rec.probe_final);
    for (const auto& [clean, random] : rec.layer_probes_init) {
      line(rec, "init", clean);
      line(rec, "init", random);
    }
    for (const auto& [clean, random] : rec.layer_probes_final) {
      line(rec, "final", clean);
      line(rec, "final", random);
    }
  }
  return out.str();
}

std::string configs_json(const std::vector<RunRecord>& records) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& rec : records) j[rec.run_id] = config_to_json(rec.config);
  return j.dump(2) + "\n";
}

std::string timings_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "run_id,wall_time_s\n";
  for (const auto& rec : records) out << csv_field(rec.run_id) << ',' << format_double(rec.wall_time_s) << '\n';
  return out.str();
}

std::string sweep_dat(const std::vector<RunRecord>& records) {
  struct Group {
    std::string arm;
    std::string value;
    std::vector<double> train_acc, probe_init, probe_final, inv_final, memorized;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.arm, rec.value);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.push_back(Group{rec.arm, rec.value, {}, {}, {}, {}, {}});
    }
    Group& g = groups[it->second];
    g.train_acc.push_back(rec.train_acc);
    g.probe_init.push_back(rec.probe_init.accuracy);
    g.probe_final.push_back(rec.probe_final.accuracy);
    g.inv_final.push_back(rec.invariance_final.mean_I);
    g.memorized.push_back(rec.memorized() ? 1.0 : 0.0);
  }
  std::ostringstream out;
  const std::string axis = records.empty() ? "value" : dat_token(records.front().axis);
  out << "# arm " << axis
      << " seeds train_acc train_acc_sd probe_init probe_init_sd probe_final probe_final_sd inv_final inv_final_sd "
         "memorized_frac\n";
  for (const auto& g : groups) {
    const Stats ta = stats(g.train_acc), pi = stats(g.probe_init), pf = stats(g.probe_final), inv = stats(g.inv_final),
                mem = stats(g.memorized);
    out << dat_token(g.arm) << ' ' << dat_token(g.value) << ' ' << g.train_acc.size() << ' ' << format_double(ta.mean)
        << ' ' << format_double(ta.stddev) << ' ' << format_double(pi.mean) << ' ' << format_double(pi.stddev) << ' '
        << format_double(pf.mean) << ' ' << format_double(pf.stddev) << ' ' << format_double(inv.mean) << ' '
        << format_double(inv.stddev) << ' ' << format_double(mem.mean) << '\n';
  }
  return out.str();
}

std::string grid_dat(const GridResult& grid) {
  std::ostringstream out;
  out << "# arm n B nB seeds memorized_frac train_acc probe_init probe_final probe_final_sd benign malign\n";
  for (const std::string arm : {"preserve", "randomize"}) {
    for (std::size_t n : grid.n_values) {
      for (int b : grid.b_values) {
        std::vector<double> ta, pi, pf;
        int memorized = 0, benign = 0, malign = 0;
        for (std::uint64_t seed : grid.seeds) {
          const GridCell& c = grid.cell(arm, n, b, seed);
          ta.push_back(c.train_acc);
          pi.push_back(c.probe_init);
          pf.push_back(c.probe_final);
          memorized += c.memorized ? 1 : 0;
          benign += c.verdict == Verdict::Benign ? 1 : 0;
          malign += c.verdict == Verdict::Malign ? 1 : 0;
        }
        const double seeds = static_cast<double>(grid.seeds.size());
        const Stats pfs = stats(pf);
        out << arm << ' ' << n << ' ' << b << ' ' << n * static_cast<std::size_t>(b) << ' ' << grid.seeds.size()
            << ' ' << format_double(memorized / seeds) << ' ' << format_double(stats(ta).mean) << ' '
            << format_double(stats(pi).mean) << ' ' << format_double(pfs.mean) << ' ' << format_double(pfs.stddev)
            << ' ' << benign << ' ' << malign << '\n';
      }
    }
  }
  return out.str();
}

std::string figure_name(const std::string& sweep_name) {
  if (sweep_name == "B") return "fig5";
  if (sweep_name == "classes") return "fig9";
  if (sweep_name == "strength") return "fig11";
  if (sweep_name == "noise") return "fig12";
  if (sweep_name == "projector") return "fig7";
  return "sweep";
}

void emit_records(const std::vector<RunRecord>& records, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_text((base / "runs.csv").string(), runs_csv(records));
  write_text((base / "history.csv").string(), history_csv(records));
  write_text((base / "probes.csv").string(), probes_csv(records));
  write_text((base / "configs.json").string(), configs_json(records));
  bool timed = false;
  for (const auto& rec : records) timed = timed || rec.config.record_wall_time;
  if (timed) write_text((base / "timings.csv").string(), timings_csv(records));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw InputError("write to " + path + " failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace memlab
