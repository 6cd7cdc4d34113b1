#pragma once

// Graph views of one simulated scenario.
//
// Both graphs share a fixed topology over the K intersections. Each travel
// direction contributes K-1 segment edges (upstream node -> downstream node)
// and one entry edge, a self-loop on the first intersection of that
// direction that carries the arterial inflow measured at the corridor
// boundary. Edge order:
//
//   0 .. K-2       east segments j -> j+1
//   K-1            east entry 0 -> 0
//   K .. 2K-2      west segments j+1 -> j
//   2K-1           west entry K-1 -> K-1
//
// Edge feature row: [dis, tmc (12 ratios of the downstream intersection),
// drv (5 or 11 driving-behavior fields), density], where density is the
// through-phase count of the downstream detector divided by dis.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fdgnn/corridor.hpp"
#include "fdgnn/matrix.hpp"

namespace fdgnn {

inline constexpr std::size_t kPdfBins = 250;
inline constexpr double kBinWidth = 10.0;
inline constexpr double kSigmaFloor = 1.0;
inline constexpr std::size_t kNodeFeatures = 8;
inline constexpr std::size_t kTimingFeatures = 6;
inline constexpr std::size_t kDynamicNodeFeatures = kTimingFeatures + kNodeFeatures;
// Columns (0-based) of the phases hidden by the mask: NEMA 1, 2, 5, 6.
inline constexpr std::array<std::size_t, 4> kMaskedColumns{0, 1, 4, 5};

enum class DrvSelection { kLongitudinal, kFull };

const char* to_string(DrvSelection d);
DrvSelection drv_selection_from_string(const std::string& s);
std::size_t drv_dim(DrvSelection d);
// 1 + 12 + drv + 1: 19 for the longitudinal selection, 25 for the full set.
std::size_t edge_feature_dim(DrvSelection d);

struct GraphTopology {
  std::size_t nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<Direction> direction;
  // True for the two boundary entry edges.
  std::vector<bool> entry;

  std::size_t edges() const { return src.size(); }
  bool operator==(const GraphTopology&) const = default;
};

GraphTopology corridor_topology(std::size_t intersections);

struct Window {
  double start = 300.0;
  double length = 900.0;

  double end() const { return start + length; }
};

struct StaticGraph {
  GraphTopology topology;
  // Ground-truth per-phase counts, K×8 (column p-1 is phase p).
  Matrix x;
  // Binary mask, K×8, zero at the arterial phases.
  Matrix mask;
  // Edge features computed from the unmasked counts, 2K×d_e.
  Matrix e;

  bool operator==(const StaticGraph&) const = default;
};

struct DynamicGraph {
  GraphTopology topology;
  // K×14: [cyc, off/cyc, maxDr/cyc for phases 1, 2, 5, 6, counts for phases 1..8].
  Matrix x;
  Matrix e;

  bool operator==(const DynamicGraph&) const = default;
};

struct TravelTimeTarget {
  double mu_east = 0.0;
  double sigma_east = kSigmaFloor;
  double mu_west = 0.0;
  double sigma_west = kSigmaFloor;
  std::vector<double> pdf_east;
  std::vector<double> pdf_west;

  bool operator==(const TravelTimeTarget&) const = default;
};

struct Covariates {
  double cycle = 0.0;
  // Completed corridor journeys among vehicles entering in the measurement interval.
  double volume_east = 0.0;
  double volume_west = 0.0;
  // Coordinated-phase green as a percentage of the cycle, averaged over intersections.
  double green_pct_east = 0.0;
  double green_pct_west = 0.0;

  bool operator==(const Covariates&) const = default;
};

struct DatasetRecord {
  std::string scenario_id;
  TmcMode tmc_mode = TmcMode::kReal;
  StaticGraph static_graph;
  DynamicGraph dynamic_graph;
  TravelTimeTarget target;
  Covariates covariates;

  bool operator==(const DatasetRecord&) const = default;
};

// K×8 mask with zeros at kMaskedColumns.
Matrix phase_mask(std::size_t intersections);
// Elementwise x ∘ t. Throws DimensionError on a shape mismatch.
Matrix apply_mask(const Matrix& x, const Matrix& t);

StaticGraph build_static_graph(const SimulationLog& log, const Scenario& scenario, const Window& window,
                               DrvSelection drv = DrvSelection::kLongitudinal);

// Inputs of the imputation network: counts with the arterial phases hidden,
// and edge features whose segment densities are recomputed from those
// counts. Entry edges keep their observed boundary density.
Matrix masked_node_features(const StaticGraph& g);
Matrix masked_edge_features(const StaticGraph& g);

// Fills the masked cells of `masked_x` from `imputed` (K×4, columns for
// phases 1, 2, 5, 6). Non-finite imputations are missing values; throws
// DataError listing every such cell.
Matrix merge_imputation(const Matrix& masked_x, const Matrix& imputed);

// Reads the K×4 arterial-phase block out of a K×8 count matrix.
Matrix arterial_columns(const Matrix& x);

// Dynamic graph for `scenario` with counts taken from `inflow` (K×8, complete).
DynamicGraph build_dynamic_graph(const Scenario& scenario, const Matrix& inflow,
                                 DrvSelection drv = DrvSelection::kLongitudinal);
// Same timing block and static edge columns as `g`, counts and densities from `inflow`.
DynamicGraph replace_inflow(const DynamicGraph& g, const Matrix& inflow);

struct NormalFit {
  double mu = 0.0;
  double sigma = kSigmaFloor;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::size_t n = 0;
};

// Sample mean and floored sample standard deviation. Throws
// InsufficientDataError for fewer than two samples.
NormalFit fit_normal_pdf(const std::vector<double>& samples);

// Normal density at bin centers 10 i + 5, i = 0..249.
std::vector<double> discretize_pdf(double mu, double sigma);

// One dataset record. Travel-time targets use vehicles whose corridor entry
// lies in the scenario's measurement interval; features use `window`.
// Throws InsufficientDataError when a direction has fewer than two journeys.
DatasetRecord make_record(const Scenario& scenario, const SimulationLog& log, const Window& window,
                          DrvSelection drv = DrvSelection::kLongitudinal);

// Through phase counted by the detector feeding a segment in direction d.
int through_phase(Direction d);

}  // namespace fdgnn
