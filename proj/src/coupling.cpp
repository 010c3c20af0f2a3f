#include "okpz/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "okpz/rng.hpp"

namespace okpz {

CPK::CPK(int m, std::vector<double> k) : m_(m), k_(std::move(k)) {
  if (m < 1) throw Error("kernel grid needs m >= 1");
  if (k_.size() != nodes() * nodes()) throw Error("kernel matrix has the wrong size");
  if (!(min_entry() > 0.0)) throw Error("kernel entries must be strictly positive");
  if (row_sum_defect() > 1e-10) throw Error("kernel rows do not integrate to one");
}

double CPK::min_entry() const { return *std::min_element(k_.begin(), k_.end()); }

double CPK::row_sum_defect() const {
  const std::size_t n = nodes();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += weight(j) * k_[i * n + j];
    worst = std::max(worst, std::abs(acc - 1.0));
  }
  return worst;
}

CPK CPK::uniform(int m) {
  const std::size_t n = static_cast<std::size_t>(m) + 1;
  return CPK(m, std::vector<double>(n * n, 1.0));
}

namespace {

std::vector<double> weighted_product(const std::vector<double>& a, const std::vector<double>& b,
                                     std::size_t n, int m) {
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double w = (k == 0 || k == n - 1) ? 0.5 / m : 1.0 / m;
      const double v = a[i * n + k] * w;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += v * b[k * n + j];
    }
  }
  return out;
}

double sup_row_distance(std::span<const double> q, std::size_t n, int m) {
  double worst = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double w = (j == 0 || j == n - 1) ? 0.5 / m : 1.0 / m;
        acc += w * std::abs(q[x * n + j] - q[y * n + j]);
      }
      worst = std::max(worst, acc);
    }
  }
  return worst;
}

std::size_t sample_row(const CPK& k, std::size_t row, double u) {
  const std::size_t n = k.nodes();
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += k.weight(j) * k(row, j);
    if (u <= acc) return j;
  }
  return n - 1;
}

std::size_t sample_uniform(const CPK& k, double u) {
  const std::size_t n = k.nodes();
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += k.weight(j);
    if (u <= acc) return j;
  }
  return n - 1;
}

std::size_t sample_residual(const CPK& k, std::size_t row, double delta, double u) {
  const std::size_t n = k.nodes();
  double acc = 0.0;
  const double target = u * (1.0 - delta);
  for (std::size_t j = 0; j < n; ++j) {
    acc += k.weight(j) * (k(row, j) - delta);
    if (target <= acc) return j;
  }
  return n - 1;
}

}  // namespace

CPK cpk_product(const CPK& p1, const CPK& p2) {
  if (p1.m() != p2.m()) throw Error("kernels live on different grids");
  const std::vector<double> a(p1.values().begin(), p1.values().end());
  const std::vector<double> b(p2.values().begin(), p2.values().end());
  return CPK(p1.m(), weighted_product(a, b, p1.nodes(), p1.m()));
}

std::vector<double> tv_profile(std::span<const CPK> cpks) {
  if (cpks.empty()) throw Error("tv profile needs at least one kernel");
  const int m = cpks[0].m();
  const std::size_t n = cpks[0].nodes();
  std::vector<double> q(cpks[0].values().begin(), cpks[0].values().end());
  std::vector<double> out;
  out.push_back(sup_row_distance(q, n, m));
  for (std::size_t k = 1; k < cpks.size(); ++k) {
    if (cpks[k].m() != m) throw Error("kernels live on different grids");
    const std::vector<double> b(cpks[k].values().begin(), cpks[k].values().end());
    q = weighted_product(q, b, n, m);
    out.push_back(sup_row_distance(q, n, m));
  }
  return out;
}

int doeblin_count(std::span<const CPK> cpks, double delta, std::size_t n) {
  int count = 0;
  for (std::size_t k = 0; k < std::min(n, cpks.size()); ++k)
    if (cpks[k].min_entry() > delta) ++count;
  return count;
}

CPK random_cpk(int m, std::uint64_t seed, std::uint64_t index) {
  const std::size_t n = static_cast<std::size_t>(m) + 1;
  CounterStream rng(seed, index, StreamTag::cpk_random);
  const double spread = 2.0 * rng.uniform();
  std::vector<double> k(n * n);
  for (auto& v : k) v = std::exp(spread * rng.normal());
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += ((j == 0 || j == n - 1) ? 0.5 / m : 1.0 / m) * k[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] /= acc;
  }
  return CPK(m, std::move(k));
}

void CouplingConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("coupling delta must lie in (0, 1)");
}

CoupledPaths doeblin_coupled_chains(std::span<const CPK> cpks, std::size_t x0, std::size_t y0,
                                    const CouplingConfig& cfg, std::uint64_t seed,
                                    std::uint64_t run) {
  cfg.validate();
  if (cpks.empty()) throw Error("coupled chains need at least one kernel");
  const std::size_t n = cpks[0].nodes();
  if (x0 >= n || y0 >= n) throw Error("chain start is not a grid node");
  CounterStream rng(seed, run, StreamTag::coupling);
  CoupledPaths out;
  out.s.push_back(x0);
  out.t.push_back(y0);
  if (x0 == y0) out.meet_step = 0;
  for (std::size_t k = 0; k < cpks.size(); ++k) {
    const CPK& p = cpks[k];
    const std::size_t s = out.s.back();
    const std::size_t t = out.t.back();
    std::size_t s_next, t_next;
    if (s == t) {
      s_next = t_next = sample_row(p, s, rng.uniform());
    } else if (p.min_entry() > cfg.delta) {
      if (rng.uniform() <= cfg.delta) {
        s_next = t_next = sample_uniform(p, rng.uniform());
      } else {
        s_next = sample_residual(p, s, cfg.delta, rng.uniform());
        t_next = sample_residual(p, t, cfg.delta, rng.uniform());
      }
    } else {
      s_next = sample_row(p, s, rng.uniform());
      t_next = sample_row(p, t, rng.uniform());
    }
    out.s.push_back(s_next);
    out.t.push_back(t_next);
    if (out.meet_step < 0 && s_next == t_next) out.meet_step = static_cast<long>(k) + 1;
  }
  return out;
}

namespace {

void check_chain(std::span<const Propagator> props) {
  if (props.empty()) throw Error("need at least one propagator");
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (k > 0 && (!(props[k].grid == props[0].grid) ||
                  std::abs(props[k].s - props[k - 1].t) > 1e-9)) {
      throw Error("propagators are not composable at index " + std::to_string(k));
    }
  }
}

// Z_{n+1}(i) = Σ_j w_j P(j, i) Z_n(j) for the step propagator P.
std::vector<double> pull_back(const Propagator& step, const std::vector<double>& zn) {
  const std::size_t n = step.nodes();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = step.grid.weight(j) * zn[j];
    const double* row = step.z.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) out[i] += a * row[i];
  }
  return out;
}

}  // namespace

std::vector<CPK> cpk_from_propagators(std::span<const Propagator> props,
                                      std::span<const double> f) {
  check_chain(props);
  const std::size_t N = props.size();
  const std::size_t n = props[0].nodes();
  const int m = props[0].grid.m();
  if (f.size() != n) throw Error("terminal weight has the wrong length");
  for (double v : f)
    if (!(v > 0.0)) throw Error("terminal weight must be strictly positive");
  std::vector<double> zn(f.begin(), f.end());
  std::vector<CPK> out;
  out.reserve(N);
  for (std::size_t k = 0; k < N; ++k) {
    const Propagator& step = props[N - 1 - k];
    const auto zn1 = pull_back(step, zn);
    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] = step(j, i) * zn[j] / zn1[i];
    out.emplace_back(m, std::move(p));
    zn = zn1;
  }
  return out;
}

double product_identity_defect(std::span<const Propagator> props, std::span<const double> f) {
  const auto kernels = cpk_from_propagators(props, f);
  const std::size_t N = kernels.size();
  CPK q = kernels[N - 1];
  for (std::size_t k = N - 1; k-- > 0;) q = cpk_product(q, kernels[k]);

  Propagator full = props[0];
  for (std::size_t k = 1; k < props.size(); ++k) full = compose(props[k], full);
  const std::size_t n = full.nodes();
  std::vector<double> zf(f.begin(), f.end());
  for (std::size_t k = props.size(); k-- > 0;) zf = pull_back(props[k], zf);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(q(i, j) - full(j, i) * f[j] / zf[i]));
  return worst;
}

CouplingEventStats omega_event_check(std::span<const Propagator> props, double delta, int n_f,
                                     std::uint64_t seed) {
  check_chain(props);
  if (!(delta > 0.0 && delta < 1.0)) throw Error("event delta must lie in (0, 1)");
  const std::size_t N = props.size();
  const std::size_t n = props[0].nodes();
  auto within = [delta](const Propagator& p) {
    return std::all_of(p.z.begin(), p.z.end(),
                       [delta](double v) { return v > delta && v < 1.0 / delta; });
  };
  CouplingEventStats stats;
  stats.omega.assign(N, false);
  for (std::size_t k = 1; k < N; ++k) {
    // kernel k steps over props[N−1−k]; the next unit step is props[N−k]
    const Propagator& first = props[N - 1 - k];
    const Propagator& second = props[N - k];
    stats.omega[k] = within(first) && within(second) && within(compose(second, first));
    if (stats.omega[k]) ++stats.flagged;
  }
  const double floor = delta * delta * delta;
  stats.doeblin_count =
      doeblin_count(cpk_from_propagators(props, std::vector<double>(n, 1.0)), floor, N);
  if (stats.flagged == 0) return stats;

  std::vector<bool> violated(N, false);
  for (int r = 0; r < n_f; ++r) {
    CounterStream rng(seed, static_cast<std::uint64_t>(r), StreamTag::test);
    const double spread = 3.0 * rng.uniform();
    std::vector<double> f(n);
    for (auto& v : f) v = std::exp(spread * rng.normal());
    const auto kernels = cpk_from_propagators(props, f);
    for (std::size_t k = 1; k < N; ++k)
      if (stats.omega[k] && !(kernels[k].min_entry() > floor)) violated[k] = true;
  }
  stats.bound_violations = static_cast<int>(std::count(violated.begin(), violated.end(), true));
  return stats;
}

}  // namespace okpz
