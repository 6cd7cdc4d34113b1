#include "fdgnn/graph_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "fdgnn/corridor_sim.hpp"
#include "fdgnn/errors.hpp"

namespace fdgnn {

namespace {

constexpr std::size_t kDisColumn = 0;
constexpr std::size_t kTmcColumn = 1;
constexpr std::size_t kDrvColumn = 13;

std::vector<double> drv_values(const DrivingBehavior& b, DrvSelection d) {
  if (d == DrvSelection::kLongitudinal) return {b.accel, b.decel, b.min_gap, b.sigma, b.tau};
  return {b.accel,        b.decel,          b.emergency_decel, b.min_gap,           b.sigma,           b.tau,
          b.lc_strategic, b.lc_cooperative, b.lc_speed_gain,   b.speed_factor_mean, b.speed_factor_stdev};
}

double edge_distance(const CorridorSpec& c, const GraphTopology& topo, std::size_t i) {
  if (topo.entry[i]) return c.entry_length;
  const std::size_t seg = std::min(topo.src[i], topo.dst[i]);
  return topo.direction[i] == Direction::kEast ? c.segment_east[seg] : c.segment_west[seg];
}

void check_counts(const Matrix& x, std::size_t K, const char* what) {
  if (x.rows() != K || x.cols() != kNodeFeatures) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(K) + "x8 counts, got " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

// Writes density = count of the destination's through phase / dis into the
// last column, for the edges selected by `which`.
template <typename Pred>
void set_densities(Matrix& e, const GraphTopology& topo, const Matrix& counts, Pred which) {
  const std::size_t last = e.cols() - 1;
  for (std::size_t i = 0; i < topo.edges(); ++i) {
    if (!which(i)) continue;
    const auto col = static_cast<std::size_t>(through_phase(topo.direction[i]) - 1);
    e(i, last) = counts(topo.dst[i], col) / e(i, kDisColumn);
  }
}

Matrix edge_features(const Scenario& s, const GraphTopology& topo, const Matrix& counts, DrvSelection drv) {
  const std::size_t de = edge_feature_dim(drv);
  Matrix e(topo.edges(), de);
  const auto drv_row = drv_values(s.behavior, drv);
  for (std::size_t i = 0; i < topo.edges(); ++i) {
    e(i, kDisColumn) = edge_distance(s.corridor, topo, i);
    const auto& tmc = s.tmc[topo.dst[i]];
    for (std::size_t j = 0; j < tmc.size(); ++j) e(i, kTmcColumn + j) = tmc[j];
    for (std::size_t j = 0; j < drv_row.size(); ++j) e(i, kDrvColumn + j) = drv_row[j];
  }
  set_densities(e, topo, counts, [](std::size_t) { return true; });
  return e;
}

Matrix timing_block(const Scenario& s) {
  const auto K = s.plans.size();
  Matrix t(K, kTimingFeatures);
  for (std::size_t k = 0; k < K; ++k) {
    const TimingPlan& p = s.plans[k];
    t(k, 0) = p.cycle;
    t(k, 1) = p.offset / p.cycle;
    t(k, 2) = p.phase(1).max_green / p.cycle;
    t(k, 3) = p.phase(2).max_green / p.cycle;
    t(k, 4) = p.phase(5).max_green / p.cycle;
    t(k, 5) = p.phase(6).max_green / p.cycle;
  }
  return t;
}

}  // namespace

const char* to_string(DrvSelection d) { return d == DrvSelection::kLongitudinal ? "longitudinal" : "full"; }

DrvSelection drv_selection_from_string(const std::string& s) {
  if (s == "longitudinal") return DrvSelection::kLongitudinal;
  if (s == "full") return DrvSelection::kFull;
  throw ConfigError("unknown drv selection '" + s + "' (expected longitudinal or full)");
}

std::size_t drv_dim(DrvSelection d) { return d == DrvSelection::kLongitudinal ? 5 : 11; }

std::size_t edge_feature_dim(DrvSelection d) { return 1 + 12 + drv_dim(d) + 1; }

int through_phase(Direction d) { return d == Direction::kEast ? 2 : 6; }

GraphTopology corridor_topology(std::size_t K) {
  if (K < 2) throw ConfigError("corridor graph needs at least 2 intersections");
  GraphTopology g;
  g.nodes = K;
  auto add = [&](std::size_t s, std::size_t d, Direction dir, bool entry) {
    g.src.push_back(s);
    g.dst.push_back(d);
    g.direction.push_back(dir);
    g.entry.push_back(entry);
  };
  for (std::size_t j = 0; j + 1 < K; ++j) add(j, j + 1, Direction::kEast, false);
  add(0, 0, Direction::kEast, true);
  for (std::size_t j = 0; j + 1 < K; ++j) add(j + 1, j, Direction::kWest, false);
  add(K - 1, K - 1, Direction::kWest, true);
  return g;
}

Matrix phase_mask(std::size_t K) {
  Matrix t(K, kNodeFeatures, 1.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t c : kMaskedColumns) t(k, c) = 0.0;
  return t;
}

Matrix apply_mask(const Matrix& x, const Matrix& t) {
  if (x.rows() != t.rows() || x.cols() != t.cols()) {
    throw DimensionError("apply_mask: X is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         " but T is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= t.data()[i];
  return out;
}

StaticGraph build_static_graph(const SimulationLog& log, const Scenario& s, const Window& w, DrvSelection drv) {
  if (w.start < 0.0 || !(w.length > 0.0) || w.end() > s.duration + 1e-9) {
    throw ConfigError("feature window [" + std::to_string(w.start) + ", " + std::to_string(w.end()) +
                      ") must lie inside the simulated duration");
  }
  double max_cycle = 0.0;
  for (const auto& p : s.plans) max_cycle = std::max(max_cycle, p.cycle);
  if (w.length < max_cycle) {
    spdlog::warn("scenario '{}': feature window of {:.0f} s is shorter than one cycle ({:.0f} s)", s.id, w.length,
                 max_cycle);
  }
  const auto K = static_cast<std::size_t>(s.corridor.intersections);
  StaticGraph g;
  g.topology = corridor_topology(K);
  g.x = detector_count_matrix(log, static_cast<int>(K), w.start, w.end());
  g.mask = phase_mask(K);
  g.e = edge_features(s, g.topology, g.x, drv);
  return g;
}

Matrix masked_node_features(const StaticGraph& g) { return apply_mask(g.x, g.mask); }

Matrix masked_edge_features(const StaticGraph& g) {
  Matrix e = g.e;
  const Matrix xm = masked_node_features(g);
  set_densities(e, g.topology, xm, [&](std::size_t i) { return !g.topology.entry[i]; });
  return e;
}

Matrix arterial_columns(const Matrix& x) {
  Matrix out(x.rows(), kMaskedColumns.size());
  for (std::size_t k = 0; k < x.rows(); ++k)
    for (std::size_t j = 0; j < kMaskedColumns.size(); ++j) out(k, j) = x(k, kMaskedColumns[j]);
  return out;
}

Matrix merge_imputation(const Matrix& masked_x, const Matrix& imputed) {
  check_counts(masked_x, masked_x.rows(), "merge_imputation");
  if (imputed.rows() != masked_x.rows() || imputed.cols() != kMaskedColumns.size()) {
    throw DimensionError("merge_imputation: expected " + std::to_string(masked_x.rows()) + "x4 imputations");
  }
  std::string missing;
  Matrix out = masked_x;
  for (std::size_t k = 0; k < imputed.rows(); ++k) {
    for (std::size_t j = 0; j < kMaskedColumns.size(); ++j) {
      const double v = imputed(k, j);
      if (!std::isfinite(v)) {
        missing += (missing.empty() ? "" : ", ") + std::string("(intersection ") + std::to_string(k) + ", phase " +
                   std::to_string(kMaskedColumns[j] + 1) + ")";
        continue;
      }
      out(k, kMaskedColumns[j]) = v;
    }
  }
  if (!missing.empty()) throw DataError("missing imputed counts for masked cells: " + missing);
  return out;
}

DynamicGraph build_dynamic_graph(const Scenario& s, const Matrix& inflow, DrvSelection drv) {
  const auto K = static_cast<std::size_t>(s.corridor.intersections);
  check_counts(inflow, K, "build_dynamic_graph");
  for (std::size_t i = 0; i < inflow.size(); ++i) {
    if (!std::isfinite(inflow.data()[i]) || inflow.data()[i] < 0.0) {
      throw DataError("build_dynamic_graph: counts must be finite and nonnegative");
    }
  }
  DynamicGraph g;
  g.topology = corridor_topology(K);
  const Matrix timing = timing_block(s);
  g.x = Matrix(K, kDynamicNodeFeatures);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t c = 0; c < kTimingFeatures; ++c) g.x(k, c) = timing(k, c);
    for (std::size_t c = 0; c < kNodeFeatures; ++c) g.x(k, kTimingFeatures + c) = inflow(k, c);
  }
  g.e = edge_features(s, g.topology, inflow, drv);
  return g;
}

DynamicGraph replace_inflow(const DynamicGraph& g, const Matrix& inflow) {
  check_counts(inflow, g.topology.nodes, "replace_inflow");
  DynamicGraph out = g;
  for (std::size_t k = 0; k < g.topology.nodes; ++k)
    for (std::size_t c = 0; c < kNodeFeatures; ++c) out.x(k, kTimingFeatures + c) = inflow(k, c);
  set_densities(out.e, out.topology, inflow, [](std::size_t) { return true; });
  return out;
}

NormalFit fit_normal_pdf(const std::vector<double>& samples) {
  if (samples.size() < 2) {
    throw InsufficientDataError("normal fit needs at least 2 travel-time samples, got " +
                                std::to_string(samples.size()));
  }
  const double n = static_cast<double>(samples.size());
  const double mu = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : samples) {
    const double d = x - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  NormalFit f;
  f.n = samples.size();
  f.mu = mu;
  f.sigma = std::max(std::sqrt(m2 / (n - 1.0)), kSigmaFloor);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    f.skewness = m3 / std::pow(m2, 1.5);
    f.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return f;
}

std::vector<double> discretize_pdf(double mu, double sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma < kSigmaFloor - 1e-12) {
    throw NumericError("discretize_pdf: need finite mu and sigma >= " + std::to_string(kSigmaFloor));
  }
  std::vector<double> pdf(kPdfBins);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < kPdfBins; ++i) {
    const double z = (kBinWidth * static_cast<double>(i) + kBinWidth / 2.0 - mu) / sigma;
    pdf[i] = norm * std::exp(-0.5 * z * z);
  }
  return pdf;
}

DatasetRecord make_record(const Scenario& s, const SimulationLog& log, const Window& w, DrvSelection drv) {
  DatasetRecord r;
  r.scenario_id = s.id;
  r.tmc_mode = s.tmc_mode;
  r.static_graph = build_static_graph(log, s, w, drv);
  r.dynamic_graph = build_dynamic_graph(s, r.static_graph.x, drv);

  const double t0 = s.measurement_start, t1 = s.measurement_start + s.measurement_length;
  const auto east = extract_travel_times(log, Direction::kEast, t0, t1);
  const auto west = extract_travel_times(log, Direction::kWest, t0, t1);
  NormalFit fe, fw;
  try {
    fe = fit_normal_pdf(east);
    fw = fit_normal_pdf(west);
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError("scenario '" + s.id + "': " + e.what());
  }
  spdlog::debug("scenario '{}': east n={} skew={:.3f} kurt={:.3f}; west n={} skew={:.3f} kurt={:.3f}", s.id, fe.n,
                fe.skewness, fe.excess_kurtosis, fw.n, fw.skewness, fw.excess_kurtosis);
  r.target.mu_east = fe.mu;
  r.target.sigma_east = fe.sigma;
  r.target.mu_west = fw.mu;
  r.target.sigma_west = fw.sigma;
  r.target.pdf_east = discretize_pdf(fe.mu, fe.sigma);
  r.target.pdf_west = discretize_pdf(fw.mu, fw.sigma);

  double cycle = 0.0, g_east = 0.0, g_west = 0.0;
  for (const auto& p : s.plans) {
    cycle += p.cycle;
    g_east += 100.0 * p.phase(2).max_green / p.cycle;
    g_west += 100.0 * p.phase(6).max_green / p.cycle;
  }
  const auto K = static_cast<double>(s.plans.size());
  r.covariates.cycle = cycle / K;
  r.covariates.volume_east = static_cast<double>(east.size());
  r.covariates.volume_west = static_cast<double>(west.size());
  r.covariates.green_pct_east = g_east / K;
  r.covariates.green_pct_west = g_west / K;
  return r;
}

}  // namespace fdgnn
