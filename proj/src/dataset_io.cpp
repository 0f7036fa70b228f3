#include "memlab/dataset_io.hpp"

#include "binary_io.hpp"
#include "text_format.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace memlab {

namespace {

constexpr std::uint32_t kDatasetMagic = 0x53444c4d;  // "MLDS"
constexpr std::uint32_t kDatasetVersion = 1;

void check_consistent(const LabeledDataset& ds) {
  const std::size_t n = ds.size();
  if (ds.clean_labels.size() != n || ds.random_labels.size() != n || ds.true_cluster.size() != n) {
    throw InputError("dataset: label arrays do not match the sample count");
  }
}

void check_labels(const LabeledDataset& ds, const std::string& where) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.clean_labels[i] < 0 || ds.clean_labels[i] >= ds.num_classes || ds.true_cluster[i] < 0 ||
        ds.true_cluster[i] >= ds.num_classes || ds.random_labels[i] < 0 ||
        ds.random_labels[i] >= ds.num_random_classes) {
      throw DataError(where + ": label out of range in row " + std::to_string(i));
    }
  }
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_dataset_csv(const LabeledDataset& ds, const std::string& path) {
  check_consistent(ds);
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  const int d = ds.dim();
  out << "# memlab-dataset n=" << ds.size() << " d=" << d << " d1=" << ds.d1 << " C=" << ds.num_classes
      << " C_prime=" << ds.num_random_classes << " seed=" << ds.seed << " sigma=" << detail::format_double(ds.sigma)
      << '\n';
  for (int j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "clean,random,cluster\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < d; ++j) out << detail::format_double(ds.inputs(r, j)) << ',';
    out << ds.clean_labels[i] << ',' << ds.random_labels[i] << ',' << ds.true_cluster[i] << '\n';
  }
  for (Eigen::Index k = 0; k < ds.cluster_means.rows(); ++k) {
    out << "mean";
    for (Eigen::Index j = 0; j < ds.cluster_means.cols(); ++j) out << ',' << detail::format_double(ds.cluster_means(k, j));
    out << '\n';
  }
  if (!out) throw InputError("write to " + path + " failed");
}

LabeledDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# memlab-dataset", 0) != 0) {
    throw DataError(path + ": missing dataset header");
  }
  std::map<std::string, std::string> header;
  {
    std::istringstream fields(line.substr(16));
    std::string kv;
    while (fields >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw DataError(path + ": malformed header field '" + kv + "'");
      header[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  auto field = [&](const std::string& key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw DataError(path + ": header lacks '" + key + "'");
    return it->second;
  };
  const auto n = static_cast<std::size_t>(detail::parse_int(field("n"), path));
  const auto d = static_cast<int>(detail::parse_int(field("d"), path));
  LabeledDataset ds;
  ds.d1 = static_cast<int>(detail::parse_int(field("d1"), path));
  ds.num_classes = static_cast<int>(detail::parse_int(field("C"), path));
  ds.num_random_classes = static_cast<int>(detail::parse_int(field("C_prime"), path));
  ds.seed = std::stoull(field("seed"));
  ds.sigma = detail::parse_double(field("sigma"), path);
  if (d <= 0 || ds.d1 <= 0 || ds.d1 > d || ds.num_classes <= 0 || ds.num_random_classes <= 0) {
    throw DataError(path + ": invalid header dimensions");
  }

  std::getline(in, line);  // column names
  ds.inputs.resize(static_cast<Eigen::Index>(n), d);
  ds.clean_labels.resize(n);
  ds.random_labels.resize(n);
  ds.true_cluster.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError(path + ": expected " + std::to_string(n) + " rows");
    const auto parts = detail::split_fields(line);
    if (parts.size() != static_cast<std::size_t>(d) + 3) {
      throw DataError(path + ": row " + std::to_string(i) + " has " + std::to_string(parts.size()) + " fields");
    }
    for (int j = 0; j < d; ++j) ds.inputs(static_cast<Eigen::Index>(i), j) = detail::parse_double(parts[static_cast<std::size_t>(j)], path);
    ds.clean_labels[i] = static_cast<int>(detail::parse_int(parts[static_cast<std::size_t>(d)], path));
    ds.random_labels[i] = static_cast<int>(detail::parse_int(parts[static_cast<std::size_t>(d) + 1], path));
    ds.true_cluster[i] = static_cast<int>(detail::parse_int(parts[static_cast<std::size_t>(d) + 2], path));
  }
  std::vector<std::vector<double>> means;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = detail::split_fields(line);
    if (parts.front() != "mean" || parts.size() != static_cast<std::size_t>(ds.d1) + 1) {
      throw DataError(path + ": unexpected trailing line");
    }
    std::vector<double> row;
    for (std::size_t j = 1; j < parts.size(); ++j) row.push_back(detail::parse_double(parts[j], path));
    means.push_back(std::move(row));
  }
  ds.cluster_means.resize(static_cast<Eigen::Index>(means.size()), ds.d1);
  for (std::size_t k = 0; k < means.size(); ++k) {
    for (int j = 0; j < ds.d1; ++j) ds.cluster_means(static_cast<Eigen::Index>(k), j) = means[k][static_cast<std::size_t>(j)];
  }
  check_labels(ds, path);
  return ds;
}

void write_dataset_binary(const LabeledDataset& ds, const std::string& path) {
  check_consistent(ds);
  detail::BinaryWriter w(path);
  w.put(kDatasetMagic);
  w.put(kDatasetVersion);
  w.put<std::uint64_t>(ds.size());
  w.put<std::int32_t>(ds.dim());
  w.put<std::int32_t>(ds.d1);
  w.put<std::int32_t>(ds.num_classes);
  w.put<std::int32_t>(ds.num_random_classes);
  w.put<std::uint64_t>(ds.seed);
  w.put(ds.sigma);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(ds.cluster_means.rows()));
  w.put_doubles(ds.inputs.data(), static_cast<std::size_t>(ds.inputs.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w.put<std::int32_t>(ds.clean_labels[i]);
    w.put<std::int32_t>(ds.random_labels[i]);
    w.put<std::int32_t>(ds.true_cluster[i]);
  }
  w.put_doubles(ds.cluster_means.data(), static_cast<std::size_t>(ds.cluster_means.size()));
  w.finish();
}

LabeledDataset read_dataset_binary(const std::string& path) {
  detail::BinaryReader r(path);
  if (r.get<std::uint32_t>() != kDatasetMagic) throw DataError(path + ": not a dataset file");
  if (r.get<std::uint32_t>() != kDatasetVersion) throw DataError(path + ": unsupported dataset version");
  const auto n = r.get<std::uint64_t>();
  const auto d = r.get<std::int32_t>();
  LabeledDataset ds;
  ds.d1 = r.get<std::int32_t>();
  ds.num_classes = r.get<std::int32_t>();
  ds.num_random_classes = r.get<std::int32_t>();
  ds.seed = r.get<std::uint64_t>();
  ds.sigma = r.get<double>();
  const auto num_means = r.get<std::uint64_t>();
  if (d <= 0 || ds.d1 <= 0 || ds.d1 > d || ds.num_classes <= 0 || ds.num_random_classes <= 0 || n > (1ull << 32) ||
      num_means > (1ull << 24)) {
    throw DataError(path + ": invalid header dimensions");
  }
  ds.inputs.resize(static_cast<Eigen::Index>(n), d);
  r.get_doubles(ds.inputs.data(), static_cast<std::size_t>(ds.inputs.size()));
  ds.clean_labels.resize(n);
  ds.random_labels.resize(n);
  ds.true_cluster.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.clean_labels[i] = r.get<std::int32_t>();
    ds.random_labels[i] = r.get<std::int32_t>();
    ds.true_cluster[i] = r.get<std::int32_t>();
  }
  ds.cluster_means.resize(static_cast<Eigen::Index>(num_means), ds.d1);
  r.get_doubles(ds.cluster_means.data(), static_cast<std::size_t>(ds.cluster_means.size()));
  r.expect_end();
  check_labels(ds, path);
  return ds;
}

void write_dataset(const LabeledDataset& ds, const std::string& path) {
  if (has_suffix(path, ".csv")) {
    write_dataset_csv(ds, path);
  } else {
    write_dataset_binary(ds, path);
  }
}

LabeledDataset read_dataset(const std::string& path) {
  return has_suffix(path, ".csv") ? read_dataset_csv(path) : read_dataset_binary(path);
}

}  // namespace memlab
