#include "okpz/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "okpz/coupling.hpp"
#include "okpz/experiments.hpp"
#include "okpz/io.hpp"
#include "okpz/kernel.hpp"
#include "okpz/metrics.hpp"
#include "okpz/polymer.hpp"
#include "okpz/rng.hpp"
#include "okpz/solver.hpp"

namespace okpz {

void configure_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("OKPZ_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);
}

namespace {

using Clock = std::chrono::steady_clock;

// Config file plus per-field flag overrides; flags win.
struct ConfigFlags {
  std::string path;
  std::optional<double> a, b, dt, t_horizon;
  std::optional<int> m;
  std::optional<std::uint64_t> seed;
  bool noise_off = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "JSON config {a, b, m, dt, t_horizon, seed, mollifier?}")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--a", a, "override A");
    cmd->add_option("--b", b, "override B");
    cmd->add_option("--m", m, "override m");
    cmd->add_option("--dt", dt, "override dt");
    cmd->add_option("--t-horizon", t_horizon, "override t_horizon");
    cmd->add_option("--seed", seed, "override seed");
    cmd->add_flag("--noise-off", noise_off, "deterministic run (zero noise)");
  }

  RunConfig load() const {
    RunConfig c = load_config(path);
    if (a) c.params.a = *a;
    if (b) c.params.b = *b;
    if (m) c.m = *m;
    if (dt) c.dt = *dt;
    if (t_horizon) c.t_horizon = *t_horizon;
    if (seed) c.seed = *seed;
    if (noise_off) c.noise_off = true;
    c.params.validate();
    return c;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

SpatialField read_any_field(const std::string& path) {
  auto values = read_field_values(path);
  if (values.size() < 9) throw Error("field " + path + " needs at least 9 nodes");
  const int m = static_cast<int>(values.size()) - 1;
  const BoundaryParams neutral;
  return SpatialField(GridSpec(m, GridSpec::max_dt(m, neutral), 1.0, neutral), std::move(values));
}

DriftField parse_drift(const std::string& spec) {
  if (spec == "zero") return DriftField::constant(0.0);
  if (spec == "cos") {
    return DriftField::bounded([](double, double x) { return std::cos(std::numbers::pi * x); }, 1.0);
  }
  if (spec.rfind("const:", 0) == 0) return DriftField::constant(std::stod(spec.substr(6)));
  throw Error("drift must be zero, cos or const:<c>, got '" + spec + "'");
}

// One named invariant of the check battery.
struct Invariant {
  std::string name;
  std::function<bool()> holds;
};

std::vector<Invariant> invariant_battery(bool quick) {
  const int m = quick ? 16 : 32;
  const BoundaryParams robin{1.0, 1.0};
  const double dt = quick ? 1e-3 : 2.5e-4;
  const GridSpec grid(m, dt, 1.0, robin);
  std::vector<Invariant> out;

  out.push_back({"noise slices are deterministic", [grid] {
                   return make_noise_slice(NoisePlan::white(7), 3, grid) ==
                          make_noise_slice(NoisePlan::white(7), 3, grid);
                 }});
  out.push_back({"kernel symmetric and positive", [robin] {
                   const auto sys = EigenSystem::compute(robin, 40);
                   const auto k = kernel_matrix(sys, 0.05, 16);
                   const std::size_t n = 17;
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t j = 0; j < n; ++j)
                       if (k[i * n + j] != k[j * n + i] || !(k[i * n + j] > 0.0)) return false;
                   return true;
                 }});
  out.push_back({"neumann kernel conserves mass", [] {
                   const auto sys = EigenSystem::compute({}, 40);
                   const double ts[] = {0.1};
                   return kernel_fact_checks(sys, ts, 32).mass_defect < 1e-8;
                 }});
  out.push_back({"solver positive and linear", [grid, robin] {
                   const auto plan = NoisePlan::white(11);
                   const auto f = solve(grid, robin, InitialMeasure::delta(0.3), 0.0, 0.2, plan);
                   const auto g = solve(grid, robin, InitialMeasure::uniform(), 0.0, 0.2, plan);
                   std::vector<double> mix(grid.nodes());
                   for (std::size_t j = 0; j < mix.size(); ++j)
                     mix[j] = 2.0 * InitialMeasure::delta(0.3).to_field(grid)[j] + 3.0;
                   const auto h = solve(grid, robin, InitialMeasure::from_density(mix), 0.0, 0.2, plan);
                   for (std::size_t j = 0; j < mix.size(); ++j) {
                     if (!(f[j] > 0.0) || !(g[j] > 0.0)) return false;
                     const double want = 2.0 * f[j] + 3.0 * g[j];
                     if (std::abs(h[j] - want) > 1e-12 * std::abs(want)) return false;
                   }
                   return true;
                 }});
  out.push_back({"propagators compose", [grid, robin] {
                   const auto plan = NoisePlan::white(5);
                   const auto p1 = propagator(grid, robin, 0.0, 0.1, plan);
                   const auto p2 = propagator(grid, robin, 0.1, 0.2, plan);
                   const auto whole = propagator(grid, robin, 0.0, 0.2, plan);
                   const auto prod = compose(p2, p1);
                   double scale = 0.0, defect = 0.0;
                   for (std::size_t k = 0; k < whole.z.size(); ++k) {
                     scale = std::max(scale, std::abs(whole.z[k]));
                     defect = std::max(defect, std::abs(whole.z[k] - prod.z[k]));
                   }
                   return defect <= 1e-12 * scale && whole.min_entry() > 0.0;
                 }});
  out.push_back({"propagators match across thread counts", [grid, robin] {
                   const auto plan = NoisePlan::white(9);
                   return propagator(grid, robin, 0.0, 0.1, plan).z ==
                          propagator_serial(grid, robin, 0.0, 0.1, plan).z;
                 }});
  out.push_back({"relaxation inequality", [quick] {
                   const int len = quick ? 8 : 20;
                   for (int seq = 0; seq < (quick ? 5 : 20); ++seq) {
                     std::vector<CPK> cpks;
                     for (int k = 0; k < len; ++k) cpks.push_back(random_cpk(8, 100 + seq, k));
                     const auto prof = tv_profile(cpks);
                     for (double delta : {0.05, 0.1, 0.2, 0.3, 0.5}) {
                       for (std::size_t n = 1; n <= prof.size(); ++n) {
                         const int j = doeblin_count(cpks, delta, n);
                         if (!(prof[n - 1] <= 2.0 * std::pow(1.0 - delta, j))) return false;
                       }
                     }
                   }
                   return true;
                 }});
  out.push_back({"product identity", [quick] {
                   const BoundaryParams neutral;
                   const GridSpec g(16, 1e-3, 1.0, neutral);
                   const auto props = unit_propagators(g, neutral, 0.0, quick ? 3 : 6,
                                                       NoisePlan::white(3));
                   std::vector<double> f(g.nodes());
                   for (std::size_t j = 0; j < f.size(); ++j) f[j] = 1.0 + g.x(j);
                   return product_identity_defect(props, f) < 1e-10;
                 }});
  out.push_back({"d_x bounded by d_x_bar", [] {
                   for (std::uint64_t r = 0; r < 20; ++r) {
                     CounterStream rng(1, r, StreamTag::test);
                     std::vector<double> p(17), q(17);
                     double sp = 0.0, sq = 0.0;
                     for (std::size_t j = 0; j < 17; ++j) {
                       p[j] = rng.uniform();
                       q[j] = rng.uniform();
                       sp += p[j];
                       sq += q[j];
                     }
                     for (std::size_t j = 0; j < 17; ++j) {
                       p[j] /= sp;
                       q[j] /= sq;
                     }
                     const QuotientPoint a(p), b(q);
                     if (d_x(a, a) != 0.0 || d_x(a, b) > d_x_bar(a, b) + 1e-12) return false;
                   }
                   return true;
                 }});
  out.push_back({"zero tilt is one", [grid, robin] {
                   const auto res = tilt_expectation(grid, robin, NoisePlan::white(2), 0.1, 0.5,
                                                     SpatialField::constant(grid, 1.0),
                                                     DriftField::constant(0.0), 50, 4);
                   return res.v_mc == 1.0 && res.v_exact == 1.0;
                 }});
  out.push_back({"identical pair stays synchronized", [] {
                   const BoundaryParams neutral;
                   const GridSpec g(16, 1e-3, 2.0, neutral);
                   const InitPair pair{InitialMeasure::delta(0.25), InitialMeasure::delta(0.25)};
                   SyncConfig cfg;
                   cfg.n_max = 2;
                   cfg.n_seeds = 2;
                   const auto res = synchronization(g, neutral, std::span(&pair, 1), cfg);
                   return res.rows[0].max == 0.0 && res.rows[1].max == 0.0;
                 }});
  return out;
}

int run_check(bool quick) {
  int failures = 0;
  for (const auto& inv : invariant_battery(quick)) {
    bool ok = false;
    try {
      ok = inv.holds();
    } catch (const std::exception& e) {
      std::cout << "error while checking " << inv.name << ": " << e.what() << '\n';
    }
    std::cout << (ok ? "PASS " : "FAIL ") << inv.name << '\n';
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"okpz: open-boundary KPZ / Robin stochastic heat equation laboratory", "okpz"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (default: OKPZ_THREADS or all cores)");

  // kernel
  auto* kernel = app.add_subcommand("kernel", "Robin heat kernel");
  kernel->require_subcommand(1);
  double ka = 0.0, kb = 0.0, kt = 0.1, kx = 0.5, ky = 0.5;
  int kmodes = 64, ksteps = 200, km = 64;
  std::int64_t kpaths = 100000;
  std::uint64_t kseed = 1;
  std::string kreport;
  auto add_point = [&](CLI::App* c) {
    c->add_option("--a", ka, "A");
    c->add_option("--b", kb, "B");
    c->add_option("--t", kt, "time");
    c->add_option("--x", kx, "x");
    c->add_option("--y", ky, "y");
  };
  auto* keval = kernel->add_subcommand("eval", "eigen-expansion value; prints p_t(x,y)");
  add_point(keval);
  keval->add_option("--modes", kmodes, "number of modes");
  auto* kmc = kernel->add_subcommand("mc", "Feynman-Kac estimate; prints estimate and stderr");
  add_point(kmc);
  kmc->add_option("--paths", kpaths, "bridges");
  kmc->add_option("--steps", ksteps, "steps per bridge");
  kmc->add_option("--seed", kseed, "seed");
  auto* kcheck = kernel->add_subcommand(
      "check", "kernel facts; JSON {positivity_min, semigroup_defect, growth_constant_C, ...}");
  kcheck->add_option("--a", ka, "A");
  kcheck->add_option("--b", kb, "B");
  kcheck->add_option("--modes", kmodes, "number of modes");
  kcheck->add_option("--m", km, "grid cells");
  kcheck->add_option("--report", kreport, "output JSON")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "evolve an initial measure; CSV columns x,value");
  ConfigFlags solve_cfg;
  solve_cfg.attach(solve_cmd);
  std::string init_spec = "uniform", out_path;
  double t0 = 0.0, t1 = 1.0;
  solve_cmd->add_option("--init", init_spec, "delta:<x> | uniform | file:<csv>");
  solve_cmd->add_option("--t0", t0, "start time");
  solve_cmd->add_option("--t1", t1, "end time");
  solve_cmd->add_option("--out", out_path, "output CSV")->required();

  // metric
  auto* metric = app.add_subcommand("metric", "distances between two field CSVs");
  metric->require_subcommand(1);
  std::string left, right;
  double kappa = 0.4;
  std::vector<CLI::App*> metric_cmds;
  for (const char* name : {"dx", "dxbar", "dy"}) {
    auto* c = metric->add_subcommand(name, std::string("prints ") + name);
    c->add_option("--left", left, "field CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--right", right, "field CSV")->required()->check(CLI::ExistingFile);
    if (std::string(name) == "dy") c->add_option("--kappa", kappa, "Hoelder exponent in (0,1/2)");
    metric_cmds.push_back(c);
  }

  // couple
  auto* couple = app.add_subcommand("couple", "kernel coupling");
  couple->require_subcommand(1);
  auto* cprofile = couple->add_subcommand("profile", "CSV columns N,tv_sup,bound");
  ConfigFlags couple_cfg;
  couple_cfg.attach(cprofile);
  int slabs = 10;
  double delta = 0.05;
  cprofile->add_option("--slabs", slabs, "unit time slabs N");
  cprofile->add_option("--delta", delta, "Doeblin delta");
  cprofile->add_option("--out", out_path, "output CSV")->required();

  // polymer
  auto* polymer = app.add_subcommand("polymer", "directed polymer");
  polymer->require_subcommand(1);
  auto* psample = polymer->add_subcommand("sample", "CSV columns path,time,x");
  ConfigFlags psample_cfg;
  psample_cfg.attach(psample);
  double pt = 1.0, px = 0.5;
  int pmesh = 10;
  std::int64_t ppaths = 1000;
  psample->add_option("--t", pt, "polymer length");
  psample->add_option("--x", px, "endpoint");
  psample->add_option("--mesh", pmesh, "mesh intervals");
  psample->add_option("--paths", ppaths, "paths");
  psample->add_option("--out", out_path, "output CSV")->required();
  auto* ptilt = polymer->add_subcommand("tilt", "JSON {v_mc, v_exact, stderr}");
  ConfigFlags ptilt_cfg;
  ptilt_cfg.attach(ptilt);
  std::string drift_spec = "cos";
  ptilt->add_option("--t", pt, "polymer length");
  ptilt->add_option("--x", px, "endpoint");
  ptilt->add_option("--paths", ppaths, "paths");
  ptilt->set_help_flag("--help", "Print this help message and exit");
  ptilt->add_option("--h", drift_spec, "zero | cos | const:<c>");
  ptilt->add_option("--out", out_path, "output JSON")->required();

  // experiments
  auto* sync = app.add_subcommand(
      "sync", "synchronization; CSV columns N,mean,stderr,max and <out>.summary.json {c_hat, r2}");
  ConfigFlags sync_cfg;
  sync_cfg.attach(sync);
  int seeds = 20, nmax = 12;
  std::string metric_name = "dx";
  sync->add_option("--seeds", seeds, "noise seeds");
  sync->add_option("--nmax", nmax, "largest N");
  sync->add_option("--metric", metric_name, "dx | dxbar | dy");
  sync->add_option("--out", out_path, "output CSV")->required();

  auto* ergodic = app.add_subcommand(
      "ergodic", "time averages; CSV columns N,running_mean and <out>.summary.json");
  ConfigFlags ergodic_cfg;
  ergodic_cfg.attach(ergodic);
  int n_units = 200, burn_in = 10;
  std::string functional = "cos";
  ergodic->add_option("--init", init_spec, "delta:<x> | uniform | file:<csv>");
  ergodic->add_option("--n", n_units, "unit times");
  ergodic->add_option("--burn-in", burn_in, "discarded unit times");
  ergodic->add_option("--functional", functional, "cos | dx");
  ergodic->add_option("--out", out_path, "output CSV")->required();

  auto* growth = app.add_subcommand("growth", "growth rate; JSON {rate, mean_increment, stderr}");
  ConfigFlags growth_cfg;
  growth_cfg.attach(growth);
  growth->add_option("--init", init_spec, "delta:<x> | uniform | file:<csv>");
  growth->add_option("--n", n_units, "unit times (>= 50)");
  growth->add_option("--burn-in", burn_in, "discarded unit times");
  growth->add_option("--out", out_path, "output JSON")->required();

  auto* tilt = app.add_subcommand("tilt", "support tilt limit; CSV columns n,mean,stderr");
  ConfigFlags tilt_cfg;
  tilt_cfg.attach(tilt);
  std::vector<int> n_list{2, 5, 10, 20};
  tilt->add_option("--n-list", n_list, "tilt strengths")->delimiter(',');
  tilt->add_option("--seeds", seeds, "noise seeds");
  tilt->add_option("--out", out_path, "output CSV")->required();

  auto* check = app.add_subcommand("check", "invariant battery; exit 1 on any violation");
  bool quick = false;
  check->add_flag("--quick", quick, "smaller sizes");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  configure_threads(threads);
  const auto start = Clock::now();
  try {
    if (keval->parsed()) {
      const auto sys = EigenSystem::compute({ka, kb}, kmodes);
      std::cout << std::setprecision(17) << kernel_eval(sys, kt, kx, ky) << '\n';
      return 0;
    }
    if (kmc->parsed()) {
      const auto est = kernel_mc({ka, kb}, kt, kx, ky, kpaths, ksteps, kseed);
      std::cout << std::setprecision(17) << est.estimate << ' ' << est.std_error << '\n';
      return 0;
    }
    if (kcheck->parsed()) {
      const auto sys = EigenSystem::compute({ka, kb}, kmodes);
      const double ts[] = {0.05, 0.1, 0.2, 0.5, 1.0};
      const auto r = kernel_fact_checks(sys, ts, km);
      write_json(kreport, {{"positivity_min", r.positivity_min},
                           {"semigroup_defect", r.semigroup_defect},
                           {"growth_constant_C", r.growth_constant_c},
                           {"symmetry_defect", r.symmetry_defect},
                           {"mass_defect", r.mass_defect}});
      write_manifest(kreport, {{"a", ka}, {"b", kb}, {"modes", kmodes}, {"m", km}}, 0,
                     seconds_since(start));
      return 0;
    }
    if (solve_cmd->parsed()) {
      const auto cfg = solve_cfg.load();
      const auto z = solve(cfg.grid(), cfg.params, InitialMeasure::parse(init_spec), t0, t1,
                           cfg.plan());
      write_field_csv(out_path, z);
      write_manifest(out_path, cfg.to_json(), cfg.seed, seconds_since(start));
      return 0;
    }
    for (auto* c : metric_cmds) {
      if (!c->parsed()) continue;
      const auto f = read_any_field(left);
      const auto g = read_any_field(right);
      if (f.size() != g.size()) throw Error("fields have different lengths");
      const SpatialField g2(f.grid(), std::vector<double>(g.values().begin(), g.values().end()));
      double v = 0.0;
      if (c->get_name() == "dx") v = d_x(quotient(f), quotient(g2));
      if (c->get_name() == "dxbar") v = d_x_bar(f, g2);
      if (c->get_name() == "dy") v = d_y(f, g2, MetricConfig{kappa});
      std::cout << std::setprecision(17) << v << '\n';
      return 0;
    }
    if (cprofile->parsed()) {
      const auto cfg = couple_cfg.load();
      const auto grid = cfg.grid();
      const auto props = unit_propagators(grid, cfg.params, 0.0, slabs, cfg.plan());
      const auto cpks = cpk_from_propagators(props, std::vector<double>(grid.nodes(), 1.0));
      // the chain runs from the earliest slab forward: kernels in order N−1, ..., 0
      std::vector<CPK> ordered(cpks.rbegin(), cpks.rend());
      const auto prof = tv_profile(ordered);
      auto out = open_csv(out_path);
      out << "N,tv_sup,bound\n";
      for (std::size_t n = 1; n <= prof.size(); ++n) {
        out << n << ',' << prof[n - 1] << ','
            << 2.0 * std::pow(1.0 - delta, doeblin_count(ordered, delta, n)) << '\n';
      }
      out.close();
      auto j = cfg.to_json();
      j["slabs"] = slabs;
      j["delta"] = delta;
      write_manifest(out_path, j, cfg.seed, seconds_since(start));
      return 0;
    }
    if (psample->parsed()) {
      const auto cfg = psample_cfg.load();
      const auto grid = cfg.grid();
      if (pmesh < 1) throw Error("mesh needs at least one interval");
      std::vector<Propagator> props;
      for (int k = 0; k < pmesh; ++k)
        props.push_back(propagator(grid, cfg.params, pt * k / pmesh, pt * (k + 1) / pmesh, cfg.plan()));
      const PolymerSampler sampler(props, SpatialField::constant(grid, 1.0).values());
      auto out = open_csv(out_path);
      out << "path,time,x\n";
      for (std::int64_t r = 0; r < ppaths; ++r) {
        const auto path = sampler.sample(grid.nearest_node(px), cfg.seed, static_cast<std::uint64_t>(r));
        for (std::size_t k = 0; k < path.times.size(); ++k)
          out << r << ',' << path.times[k] << ',' << path.positions[k] << '\n';
      }
      out.close();
      write_manifest(out_path, cfg.to_json(), cfg.seed, seconds_since(start));
      return 0;
    }
    if (ptilt->parsed()) {
      const auto cfg = ptilt_cfg.load();
      const auto grid = cfg.grid();
      const auto h = parse_drift(drift_spec);
      const auto r = tilt_expectation(grid, cfg.params, cfg.plan(), pt, px,
                                      SpatialField::constant(grid, 1.0), h, ppaths, cfg.seed);
      write_json(out_path, {{"v_mc", r.v_mc}, {"v_exact", r.v_exact}, {"stderr", r.std_error}});
      auto j = cfg.to_json();
      j["h"] = drift_spec;
      write_manifest(out_path, j, cfg.seed, seconds_since(start));
      return 0;
    }
    if (sync->parsed()) {
      const auto cfg = sync_cfg.load();
      SyncConfig sc;
      sc.n_max = nmax;
      sc.n_seeds = seeds;
      sc.seed = cfg.seed;
      sc.metric = parse_sync_metric(metric_name);
      sc.noise_off = cfg.noise_off;
      sc.mollifier = cfg.mollifier;
      const auto pairs = default_init_pairs();
      const auto res = synchronization(cfg.grid(), cfg.params, pairs, sc);
      auto out = open_csv(out_path);
      out << "N,mean,stderr,max\n";
      for (const auto& r : res.rows) out << r.n << ',' << r.mean << ',' << r.std_error << ',' << r.max << '\n';
      out.close();
      const std::string summary = out_path + ".summary.json";
      write_json(summary, {{"c_hat", res.fit.rate}, {"r2", res.fit.r2}, {"points", res.fit.points}});
      auto j = cfg.to_json();
      j["seeds"] = seeds;
      j["nmax"] = nmax;
      j["metric"] = metric_name;
      write_manifest(out_path, j, cfg.seed, seconds_since(start));
      write_manifest(summary, j, cfg.seed, seconds_since(start));
      return 0;
    }
    if (ergodic->parsed()) {
      const auto cfg = ergodic_cfg.load();
      const auto run = long_run(cfg.grid(), cfg.params, InitialMeasure::parse(init_spec), n_units,
                                cfg.plan());
      QuotientFunctional f;
      if (functional == "cos") {
        f = functional_cos;
      } else if (functional == "dx") {
        f = functional_dx_uniform;
      } else {
        throw Error("functional must be cos or dx");
      }
      const auto res = ergodic_average(run, f, burn_in);
      auto out = open_csv(out_path);
      out << "N,running_mean\n";
      for (std::size_t k = 0; k < res.running.size(); ++k) out << burn_in + k + 1 << ',' << res.running[k] << '\n';
      out.close();
      const std::string summary = out_path + ".summary.json";
      write_json(summary, {{"mean", res.summary.mean},
                           {"stderr", res.summary.std_error},
                           {"batches", res.summary.batches}});
      auto j = cfg.to_json();
      j["init"] = init_spec;
      j["n"] = n_units;
      j["functional"] = functional;
      write_manifest(out_path, j, cfg.seed, seconds_since(start));
      write_manifest(summary, j, cfg.seed, seconds_since(start));
      return 0;
    }
    if (growth->parsed()) {
      const auto cfg = growth_cfg.load();
      const auto res = growth_rate(cfg.grid(), cfg.params, InitialMeasure::parse(init_spec),
                                   n_units, cfg.plan(), burn_in);
      write_json(out_path, {{"rate", res.rate},
                            {"mean_increment", res.increments.mean},
                            {"stderr", res.increments.std_error}});
      auto j = cfg.to_json();
      j["init"] = init_spec;
      j["n"] = n_units;
      write_manifest(out_path, j, cfg.seed, seconds_since(start));
      return 0;
    }
    if (tilt->parsed()) {
      const auto cfg = tilt_cfg.load();
      const auto grid = cfg.grid();
      std::vector<double> phi0(grid.nodes());
      for (std::size_t j = 0; j < phi0.size(); ++j) phi0[j] = std::cos(std::numbers::pi * grid.x(j));
      const auto rows = tilt_support_experiment(grid, cfg.params, phi0, n_list, seeds, cfg.seed);
      auto out = open_csv(out_path);
      out << "n,mean,stderr\n";
      for (const auto& r : rows) out << r.n << ',' << r.mean << ',' << r.std_error << '\n';
      out.close();
      auto j = cfg.to_json();
      j["seeds"] = seeds;
      j["n_list"] = n_list;
      write_manifest(out_path, j, cfg.seed, seconds_since(start));
      return 0;
    }
    if (check->parsed()) return run_check(quick);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::cerr << app.help();
  return 2;
}

}  // namespace okpz
