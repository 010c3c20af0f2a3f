#include "okpz/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace okpz {

void BoundaryParams::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error("Robin parameters must be finite (Dirichlet limits are not supported)");
  }
}

GridSpec::GridSpec(int m, double dt, double t_horizon, const BoundaryParams& params)
    : m_(m), dt_(dt), t_horizon_(t_horizon) {
  params.validate();
  if (m < 8) throw Error("grid needs m >= 8 cells, got " + std::to_string(m));
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt must be positive");
  if (!(t_horizon > 0.0)) throw Error("t_horizon must be positive");
  const double limit = max_dt(m, params);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "dt = " << dt << " violates the M-matrix bound dt <= dx^2/(2+2(|A|+|B|)dx) = "
        << limit;
    throw Error(msg.str());
  }
}

double GridSpec::max_dt(int m, const BoundaryParams& params) {
  const double dx = 1.0 / m;
  return dx * dx / (2.0 + 2.0 * (std::abs(params.a) + std::abs(params.b)) * dx);
}

std::vector<double> GridSpec::weights() const {
  std::vector<double> w(nodes());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = weight(j);
  return w;
}

std::size_t GridSpec::nearest_node(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw Error("location outside [0,1]");
  const double scaled = x * m_;
  auto j = static_cast<std::size_t>(std::floor(scaled));
  // ties (exact half-way) stay on the lower node
  if (scaled - static_cast<double>(j) > 0.5) ++j;
  return std::min(j, nodes() - 1);
}

std::int64_t GridSpec::steps_in(double duration) const {
  const double ratio = duration / dt_;
  const double rounded = std::round(ratio);
  if (!(duration >= 0.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "duration " << duration << " is not an integral number of steps dt = " << dt_;
    throw Error(msg.str());
  }
  return static_cast<std::int64_t>(rounded);
}

std::int64_t GridSpec::step_index(double t) const { return steps_in(t); }

double integrate(const GridSpec& grid, std::span<const double> values) {
  const std::size_t n = values.size();
  double interior = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) interior += values[j];
  return grid.dx() * (interior + 0.5 * (values[0] + values[n - 1]));
}

SpatialField::SpatialField(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.nodes()) {
    throw Error("field has " + std::to_string(values_.size()) + " values, grid has " +
                std::to_string(grid_.nodes()) + " nodes");
  }
}

SpatialField SpatialField::constant(const GridSpec& grid, double value) {
  return SpatialField(grid, std::vector<double>(grid.nodes(), value));
}

bool SpatialField::all_positive() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

bool SpatialField::all_nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

InitialMeasure InitialMeasure::delta(double x, double mass) {
  InitialMeasure mu;
  mu.atoms.push_back({x, mass});
  return mu;
}

InitialMeasure InitialMeasure::uniform() {
  InitialMeasure mu;
  mu.density = std::vector<double>{};  // empty marks "constant one on any grid"
  return mu;
}

InitialMeasure InitialMeasure::from_density(std::vector<double> density) {
  InitialMeasure mu;
  mu.density = std::move(density);
  return mu;
}

namespace {

std::vector<double> read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field file " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,value", 0) != 0) throw Error("field file must start with header x,value");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("malformed field row: " + line);
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return values;
}

}  // namespace

InitialMeasure InitialMeasure::parse(const std::string& spec) {
  if (spec == "uniform") return uniform();
  if (spec.rfind("delta:", 0) == 0) return delta(std::stod(spec.substr(6)));
  if (spec.rfind("file:", 0) == 0) return from_density(read_field_csv(spec.substr(5)));
  throw Error("initial condition must be delta:<x>, uniform or file:<path>, got '" + spec + "'");
}

void InitialMeasure::validate(const GridSpec& grid) const {
  for (const auto& atom : atoms) {
    if (!(atom.x >= 0.0 && atom.x <= 1.0)) throw Error("atom location outside [0,1]");
    if (!(atom.mass > 0.0)) throw Error("atom mass must be positive");
  }
  if (density && !density->empty()) {
    if (density->size() != grid.nodes()) throw Error("density does not match grid");
    for (double v : *density) {
      if (!(v >= 0.0)) throw Error("density must be nonnegative");
    }
  }
  if (!(total_mass(grid) > 0.0)) throw Error("zero measure has no equivalence class");
}

double InitialMeasure::total_mass(const GridSpec& grid) const {
  double mass = 0.0;
  for (const auto& atom : atoms) mass += atom.mass;
  if (density) {
    if (density->empty()) {
      mass += 1.0;
    } else {
      mass += integrate(grid, *density);
    }
  }
  return mass;
}

SpatialField InitialMeasure::to_field(const GridSpec& grid) const {
  validate(grid);
  std::vector<double> values(grid.nodes(), 0.0);
  if (density) {
    if (density->empty()) {
      std::fill(values.begin(), values.end(), 1.0);
    } else {
      values = *density;
    }
  }
  for (const auto& atom : atoms) {
    const std::size_t j = grid.nearest_node(atom.x);
    values[j] += atom.mass / grid.weight(j);
  }
  return SpatialField(grid, std::move(values));
}

void MollifierSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw Error("mollifier bandwidth must be positive");
}

QuotientPoint::QuotientPoint(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw Error("empty quotient point");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0)) throw Error("quotient point entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error("quotient point is not normalized");
}

QuotientPoint QuotientPoint::uniform(std::size_t nodes) {
  std::vector<double> p(nodes, 1.0 / static_cast<double>(nodes - 1));
  p.front() *= 0.5;
  p.back() *= 0.5;
  return QuotientPoint(std::move(p));
}

namespace {

QuotientPoint normalize_masses(std::vector<double> masses) {
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (!(total > 0.0)) throw Error("zero measure has no equivalence class");
  for (double& v : masses) v /= total;
  return QuotientPoint(std::move(masses));
}

}  // namespace

QuotientPoint quotient(const InitialMeasure& mu, const GridSpec& grid) {
  if (!(mu.total_mass(grid) > 0.0)) throw Error("zero measure has no equivalence class");
  return quotient(mu.to_field(grid));
}

QuotientPoint quotient(const SpatialField& field) {
  if (!field.all_nonnegative()) throw Error("quotient needs a nonnegative field");
  std::vector<double> masses(field.size());
  for (std::size_t j = 0; j < masses.size(); ++j) masses[j] = field.grid().weight(j) * field[j];
  return normalize_masses(std::move(masses));
}

}  // namespace okpz
