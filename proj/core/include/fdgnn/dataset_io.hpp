#pragma once

// Dataset container: one JSON header line followed by one JSON line per
// record. Field order is fixed so that identical records serialize to
// identical bytes.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdgnn/graph_builder.hpp"

namespace fdgnn {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetHeader {
  int schema_version = kDatasetSchemaVersion;
  std::size_t intersections = 8;
  std::size_t edge_dim = 19;
  double window = 900.0;
  // "real", "random" or "mixed".
  std::string tmc_mode = "real";
  DrvSelection drv = DrvSelection::kLongitudinal;
  std::size_t record_count = 0;

  bool operator==(const DatasetHeader&) const = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;

  bool operator==(const Dataset&) const = default;
};

// record_count in the written header is taken from records.size().
void write_dataset(std::ostream& out, const Dataset& d);
// Throws ParseError (byte offset, record index) on malformed, inconsistent
// or truncated input.
Dataset read_dataset(std::istream& in);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string record_to_json(const DatasetRecord& r);

}  // namespace fdgnn
