#include "fdgnn/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json_convert.hpp"

namespace fdgnn {

namespace {

using ojson = nlohmann::ordered_json;

ojson matrix_rows(const Matrix& m) {
  ojson rows = ojson::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

ojson record_json(const DatasetRecord& r) {
  const StaticGraph& g = r.static_graph;
  ojson j;
  j["scenario_id"] = r.scenario_id;
  j["tmc_mode"] = to_string(r.tmc_mode);
  j["x"] = matrix_rows(g.x);
  j["mask"] = matrix_rows(g.mask);
  j["x_masked"] = matrix_rows(masked_node_features(g));
  j["supervision"] = matrix_rows(arterial_columns(g.x));
  j["e"] = matrix_rows(g.e);
  j["x_dynamic"] = matrix_rows(r.dynamic_graph.x);
  j["e_dynamic"] = matrix_rows(r.dynamic_graph.e);
  ojson t;
  t["mu_east"] = r.target.mu_east;
  t["sigma_east"] = r.target.sigma_east;
  t["mu_west"] = r.target.mu_west;
  t["sigma_west"] = r.target.sigma_west;
  t["pdf_east"] = r.target.pdf_east;
  t["pdf_west"] = r.target.pdf_west;
  j["target"] = t;
  ojson c;
  c["cycle"] = r.covariates.cycle;
  c["volume_east"] = r.covariates.volume_east;
  c["volume_west"] = r.covariates.volume_west;
  c["green_pct_east"] = r.covariates.green_pct_east;
  c["green_pct_west"] = r.covariates.green_pct_west;
  j["covariates"] = c;
  return j;
}

Matrix expect_matrix(const json& j, const char* key, std::size_t rows, std::size_t cols) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  Matrix m = jsonio::matrix_from_json(*it, key);
  if (m.rows() != rows || m.cols() != cols) {
    throw DataError(std::string(key) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return m;
}

DatasetRecord parse_record(const json& j, const DatasetHeader& h) {
  jsonio::check_keys(j, {"scenario_id", "tmc_mode", "x", "mask", "x_masked", "supervision", "e", "x_dynamic",
                         "e_dynamic", "target", "covariates"},
                     "record");
  const std::size_t K = h.intersections, E = 2 * h.intersections;
  DatasetRecord r;
  r.scenario_id = jsonio::required<std::string>(j, "scenario_id", "record");
  r.tmc_mode = tmc_mode_from_string(jsonio::required<std::string>(j, "tmc_mode", "record"));
  StaticGraph& g = r.static_graph;
  g.topology = corridor_topology(K);
  g.x = expect_matrix(j, "x", K, kNodeFeatures);
  g.mask = expect_matrix(j, "mask", K, kNodeFeatures);
  if (g.mask != phase_mask(K)) throw DataError("mask does not hide exactly the arterial phases");
  if (expect_matrix(j, "x_masked", K, kNodeFeatures) != masked_node_features(g)) {
    throw DataError("x_masked is inconsistent with x and mask");
  }
  if (expect_matrix(j, "supervision", K, kMaskedColumns.size()) != arterial_columns(g.x)) {
    throw DataError("supervision values differ from the unmasked counts");
  }
  g.e = expect_matrix(j, "e", E, h.edge_dim);
  r.dynamic_graph.topology = g.topology;
  r.dynamic_graph.x = expect_matrix(j, "x_dynamic", K, kDynamicNodeFeatures);
  r.dynamic_graph.e = expect_matrix(j, "e_dynamic", E, h.edge_dim);

  const json& t = j.at("target");
  jsonio::check_keys(t, {"mu_east", "sigma_east", "mu_west", "sigma_west", "pdf_east", "pdf_west"}, "target");
  r.target.mu_east = jsonio::required<double>(t, "mu_east", "target");
  r.target.sigma_east = jsonio::required<double>(t, "sigma_east", "target");
  r.target.mu_west = jsonio::required<double>(t, "mu_west", "target");
  r.target.sigma_west = jsonio::required<double>(t, "sigma_west", "target");
  r.target.pdf_east = jsonio::required<std::vector<double>>(t, "pdf_east", "target");
  r.target.pdf_west = jsonio::required<std::vector<double>>(t, "pdf_west", "target");
  if (r.target.pdf_east.size() != kPdfBins || r.target.pdf_west.size() != kPdfBins) {
    throw DataError("target pdfs must have " + std::to_string(kPdfBins) + " bins");
  }
  const json& c = j.at("covariates");
  jsonio::check_keys(c, {"cycle", "volume_east", "volume_west", "green_pct_east", "green_pct_west"}, "covariates");
  r.covariates.cycle = jsonio::required<double>(c, "cycle", "covariates");
  r.covariates.volume_east = jsonio::required<double>(c, "volume_east", "covariates");
  r.covariates.volume_west = jsonio::required<double>(c, "volume_west", "covariates");
  r.covariates.green_pct_east = jsonio::required<double>(c, "green_pct_east", "covariates");
  r.covariates.green_pct_west = jsonio::required<double>(c, "green_pct_west", "covariates");
  return r;
}

}  // namespace

std::string record_to_json(const DatasetRecord& r) { return record_json(r).dump(); }

void write_dataset(std::ostream& out, const Dataset& d) {
  ojson h;
  h["format"] = "fdgnn-dataset";
  h["schema_version"] = kDatasetSchemaVersion;
  h["intersections"] = d.header.intersections;
  h["edge_dim"] = d.header.edge_dim;
  h["window"] = d.header.window;
  h["tmc_mode"] = d.header.tmc_mode;
  h["drv"] = to_string(d.header.drv);
  h["record_count"] = d.records.size();
  out << h.dump() << '\n';
  for (const auto& r : d.records) {
    if (r.static_graph.x.rows() != d.header.intersections || r.static_graph.e.cols() != d.header.edge_dim) {
      throw DimensionError("record '" + r.scenario_id + "' does not match the dataset header shape");
    }
    out << record_json(r).dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t offset = 0;
  std::ptrdiff_t index = -1;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    const std::ptrdiff_t line_index = have_header ? index + 1 : -1;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        jsonio::check_keys(j, {"format", "schema_version", "intersections", "edge_dim", "window", "tmc_mode", "drv",
                               "record_count"},
                           "dataset header");
        if (jsonio::required<std::string>(j, "format", "header") != "fdgnn-dataset") {
          throw DataError("not an fdgnn dataset");
        }
        auto& h = d.header;
        h.schema_version = jsonio::required<int>(j, "schema_version", "header");
        if (h.schema_version != kDatasetSchemaVersion) {
          throw DataError("unsupported dataset schema version " + std::to_string(h.schema_version) + " (expected " +
                          std::to_string(kDatasetSchemaVersion) + ")");
        }
        h.intersections = jsonio::required<std::size_t>(j, "intersections", "header");
        h.edge_dim = jsonio::required<std::size_t>(j, "edge_dim", "header");
        h.window = jsonio::required<double>(j, "window", "header");
        h.tmc_mode = jsonio::required<std::string>(j, "tmc_mode", "header");
        h.drv = drv_selection_from_string(jsonio::required<std::string>(j, "drv", "header"));
        h.record_count = jsonio::required<std::size_t>(j, "record_count", "header");
        if (h.intersections < 2) throw DataError("header: intersections must be >= 2");
        if (h.edge_dim != edge_feature_dim(h.drv)) throw DataError("header: edge_dim does not match drv selection");
        have_header = true;
        continue;
      }
      ++index;
      if (static_cast<std::size_t>(index) >= d.header.record_count) {
        throw DataError("more records than the header announces");
      }
      d.records.push_back(parse_record(j, d.header));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string("dataset: ") + e.what(), line_offset, line_index);
    }
  }
  if (!have_header) throw ParseError("dataset: missing header", 0, -1);
  if (d.records.size() != d.header.record_count) {
    throw ParseError("dataset: truncated, expected " + std::to_string(d.header.record_count) + " records, found " +
                         std::to_string(d.records.size()),
                     offset, static_cast<std::ptrdiff_t>(d.records.size()));
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_dataset(ss, d);
  jsonio::write_file(path, ss.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return read_dataset(in);
}

}  // namespace fdgnn
