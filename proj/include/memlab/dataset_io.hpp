#pragma once

#include "memlab/synthdata.hpp"

#include <string>

namespace memlab {

/// CSV layout: one header line of key=value pairs
///   # memlab-dataset n=.. d=.. d1=.. C=.. C_prime=.. seed=.. sigma=..
/// a column line, then one row per sample: x0..x{d-1}, clean, random, cluster.
/// Cluster means follow as rows tagged "mean" in the first column.
/// Values are written with 17 significant digits, so a round trip is exact.
void write_dataset_csv(const LabeledDataset& ds, const std::string& path);
LabeledDataset read_dataset_csv(const std::string& path);

/// Little-endian binary with the same content.
void write_dataset_binary(const LabeledDataset& ds, const std::string& path);
LabeledDataset read_dataset_binary(const std::string& path);

/// Picks the format from the extension: ".csv" is text, anything else binary.
void write_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset read_dataset(const std::string& path);

}  // namespace memlab
