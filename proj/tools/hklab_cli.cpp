// hklab: experiment harness for gradient flows of power-entropy divergences.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hklab/hklab.hpp"

namespace {

using hklab::DiscreteMeasure;
using hklab::EntropyOrder;
using hklab::ErrorKind;
using hklab::Grid1D;
using hklab::io::fmt;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::size_t grid_n = 400;
  std::vector<double> domain = {0.0, 1.0};
  double dt = 0.0;  // 0 selects a stable step automatically
  double t_end = 2.0;
  double alpha = 1.0;
  double beta = 1.0;
  double p = 1.0;
  std::string geometry = "he";
  std::string target = "gaussian";
  std::string init = "perturbed";
  std::string out = "-";
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::size_t record_every = 0;  // 0 selects about 200 samples
  std::vector<double> p_list;
  std::vector<double> aux;
  std::vector<double> r_list = {1e-6, 1e-4, 1e-2, 0.5, 1.0, 2.0, 10.0};
  std::string pq_grid = "-2:2:0.25";
  double s_min = 1e-12;
  double s_max = 1e12;
  double z0 = 0.1;
  double perturb = 0.5;
  std::string scan_kind;
};

[[noreturn]] void config_error(const std::string& msg) { hklab::raise(ErrorKind::BadParams, msg); }

std::vector<double> parse_numbers(const std::string& text, char sep) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error("not a number: '" + item + "'");
    }
  }
  return v;
}

/// Splits "name:args" into the name and the numeric arguments.
std::pair<std::string, std::vector<double>> parse_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {text, {}};
  return {text.substr(0, colon), parse_numbers(text.substr(colon + 1), ',')};
}

Grid1D make_grid(const Options& o) {
  if (o.domain.size() != 2) config_error("--domain expects a,b");
  return Grid1D(o.domain[0], o.domain[1], o.grid_n);
}

DiscreteMeasure make_target(const Options& o, const Grid1D& grid) {
  const auto [name, args] = parse_spec(o.target);
  const double left = grid.left();
  const double len = grid.right() - grid.left();
  if (name == "uniform") return hklab::make_target(hklab::target::Uniform{}, grid);
  if (name == "gaussian") {
    if (args.empty()) return hklab::make_target(hklab::target::Gaussian{left + 0.5 * len, 0.15 * len}, grid);
    if (args.size() != 2) config_error("gaussian target expects gaussian:mean,sd");
    return hklab::make_target(hklab::target::Gaussian{args[0], args[1]}, grid);
  }
  if (name == "mixture") {
    return hklab::make_target(
        hklab::target::Mixture{{0.6, 0.4}, {{left + 0.3 * len, 0.08 * len}, {left + 0.7 * len, 0.1 * len}}}, grid);
  }
  if (name == "double-well") {
    if (args.size() > 1) config_error("double-well target expects double-well[:depth]");
    return hklab::make_target(hklab::target::DoubleWell{args.empty() ? 2.0 : args[0]}, grid);
  }
  config_error("unknown target '" + o.target + "' (uniform, gaussian[:m,s], mixture, double-well[:a])");
}

/// Deterministic uniform draw in [0, 1) from the raw 64-bit engine output.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

DiscreteMeasure make_init(const Options& o, const DiscreteMeasure& pi) {
  const Grid1D& grid = pi.grid();
  const auto [name, args] = parse_spec(o.init);
  const double z = hklab::mass(pi);
  const double left = grid.left();
  const double len = grid.right() - grid.left();
  std::vector<double> d(grid.size());
  if (name == "target") return pi;
  if (name == "scaled") {
    if (args.size() != 1) config_error("scaled init expects scaled:c");
    return pi.scaled(args[0]);
  }
  if (name == "perturbed") {
    const double amp = args.empty() ? 0.5 : args[0];
    if (!(amp >= 0.0 && amp < 1.0)) config_error("perturbation amplitude must lie in [0, 1)");
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = pi[i] * (1.0 + amp * std::sin(6.0 * (grid.center(i) - left) / len));
  } else if (name == "mixture") {
    const DiscreteMeasure m = hklab::make_target(
        hklab::target::Mixture{{0.5, 0.5}, {{left + 0.25 * len, 0.07 * len}, {left + 0.65 * len, 0.12 * len}}}, grid);
    d = m.values();
  } else if (name == "gaussian") {
    if (args.size() != 2) config_error("gaussian init expects gaussian:mean,sd");
    d = hklab::make_target(hklab::target::Gaussian{args[0], args[1]}, grid).values();
  } else if (name == "random") {
    // Smooth random log-perturbation: a few Fourier modes with seeded amplitudes.
    std::mt19937_64 rng(o.seed);
    std::vector<double> amp(4);
    std::vector<double> phase(4);
    for (std::size_t k = 0; k < 4; ++k) {
      amp[k] = 0.5 * (2.0 * unit_draw(rng) - 1.0) / static_cast<double>(k + 1);
      phase[k] = 2.0 * std::numbers::pi * unit_draw(rng);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = (grid.center(i) - left) / len;
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        s += amp[k] * std::cos(2.0 * std::numbers::pi * static_cast<double>(k + 1) * x + phase[k]);
      d[i] = pi[i] * std::exp(s);
    }
  } else {
    config_error("unknown init '" + o.init + "' (target, scaled:c, perturbed[:amp], mixture, gaussian:m,s, random)");
  }
  return hklab::normalize(DiscreteMeasure(grid, std::move(d))).shape.scaled(z);
}

hklab::Geometry make_geometry(const Options& o) {
  const std::string& g = o.geometry;
  if (g == "w") return hklab::Geometry::wasserstein(o.alpha);
  if (g == "he") return hklab::Geometry::hellinger(o.beta);
  if (g == "she") return hklab::Geometry::spherical_hellinger(o.beta);
  if (g == "hk") return hklab::Geometry::hk(o.alpha, o.beta);
  if (g == "shk") return hklab::Geometry::shk(o.alpha, o.beta);
  config_error("unknown geometry '" + g + "' (w, he, she, hk, shk)");
}

double auto_dt(const hklab::Geometry& g, const DiscreteMeasure& mu, const DiscreteMeasure& pi, EntropyOrder p) {
  double dt = 1e-3;
  if (g.has_reaction()) dt = std::min(dt, 0.1 / g.beta);
  if (g.has_transport()) dt = std::min(dt, 0.5 * hklab::transport_stable_dt(mu, pi, p, g.alpha));
  return dt;
}

std::size_t auto_record_every(double t_end, double dt, std::size_t requested) {
  if (requested > 0) return requested;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  return std::max<std::size_t>(1, steps / 200);
}

void emit(const Options& o, const std::string& text) {
  if (o.out == "-" || o.out.empty()) {
    std::cout << text;
  } else {
    hklab::io::write_atomic(o.out, text);
  }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json scan_record(double p, std::optional<double> q, double constant, std::optional<double> reference) {
  json r;
  r["p"] = p;
  r["q"] = q ? json(*q) : json(nullptr);
  r["constant"] = finite_or_null(constant);
  r["paper_value"] = reference ? finite_or_null(*reference) : json(nullptr);
  r["abs_err"] = reference && std::isfinite(*reference) ? json(std::abs(constant - *reference)) : json(nullptr);
  return r;
}

int cmd_flow(const Options& o) {
  const Grid1D grid = make_grid(o);
  const DiscreteMeasure pi = make_target(o, grid);
  const hklab::Geometry geom = make_geometry(o);
  const EntropyOrder p(o.p);
  DiscreteMeasure mu0 = make_init(o, pi);
  const double dt = o.dt > 0.0 ? o.dt : auto_dt(geom, mu0, pi, p);
  hklab::FlowSpec spec{geom, p, pi, dt, o.t_end, auto_record_every(o.t_end, dt, o.record_every)};
  std::vector<EntropyOrder> aux;
  for (double q : o.aux) aux.emplace_back(q);
  const hklab::DecayTrace trace = hklab::run(mu0, spec, aux);

  std::optional<double> rate;
  try {
    rate = hklab::fit_decay_rate(trace, 0.1 * o.t_end, o.t_end);
  } catch (const hklab::Error&) {
  }
  std::optional<double> reference;
  if (geom.kind == hklab::Geometry::Kind::Hellinger && o.p <= 0.5) reference = geom.beta / (1.0 - o.p);
  if (geom.kind == hklab::Geometry::Kind::SphericalHellinger && o.p <= 0.5) reference = geom.beta * hklab::M_p(o.p);

  if (o.format == "csv") {
    emit(o, hklab::io::trace_csv(trace));
    return kExitOk;
  }
  json j;
  j["geometry"] = hklab::to_string(geom.kind);
  j["p"] = o.p;
  j["alpha"] = geom.alpha;
  j["beta"] = geom.beta;
  j["dt"] = dt;
  j["samples"] = trace.size();
  j["fitted_rate"] = rate ? finite_or_null(*rate) : json(nullptr);
  j["paper_value"] = reference ? json(*reference) : json(nullptr);
  j["abs_err"] = rate && reference ? json(std::abs(*rate - *reference)) : json(nullptr);
  j["initial_divergence"] = finite_or_null(trace.divergence.front());
  j["final_divergence"] = finite_or_null(trace.divergence.back());
  j["initial_mass"] = trace.mass.front();
  j["final_mass"] = trace.mass.back();
  j["floor_events"] = trace.diagnostics.floor_events;
  j["max_mass_drift"] = trace.diagnostics.max_mass_drift;
  j["trace"] = {{"t", trace.times},
                {"divergence", trace.divergence},
                {"mass", trace.mass},
                {"dissipation", trace.dissipation}};
  emit(o, j.dump(2) + "\n");
  return kExitOk;
}

std::vector<double> default_or(const std::vector<double>& given, std::vector<double> fallback) {
  return given.empty() ? fallback : given;
}

std::string param_value_csv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string s = "param,value\n";
  for (const auto& [k, v] : rows) s += k + "," + fmt(v) + "\n";
  return s;
}

int cmd_scan(const Options& o) {
  std::vector<std::pair<std::string, double>> rows;
  json records = json::array();
  hklab::ScanConfig cfg;
  cfg.s_min = o.s_min;
  cfg.s_max = o.s_max;
  cfg.validate();

  if (o.scan_kind == "loj-he") {
    for (double p : default_or(o.p_list, {-2.0, -1.0, 0.0, 0.25, 0.5, 0.75, 1.0, 2.0})) {
      const double c = hklab::loj_constant_he(EntropyOrder(p), cfg);
      rows.emplace_back("p=" + fmt(p), c);
      records.push_back(scan_record(p, std::nullopt, c, p <= 0.5 ? 1.0 / (1.0 - p) : 0.0));
    }
  } else if (o.scan_kind == "she") {
    for (double p : default_or(o.p_list, {o.p})) {
      const double c = hklab::she_constant_scan(EntropyOrder(p));
      rows.emplace_back("p=" + fmt(p), c);
      records.push_back(scan_record(p, std::nullopt, c, p <= 0.5 ? hklab::M_p(p) : 0.0));
    }
  } else if (o.scan_kind == "mpq") {
    const std::vector<double> g = parse_numbers(o.pq_grid, ':');
    if (g.size() != 3 || !(g[2] > 0.0) || !(g[1] >= g[0])) config_error("--grid expects lo:hi:step");
    const auto n = static_cast<std::size_t>(std::floor((g[1] - g[0]) / g[2] + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = g[0] + g[2] * static_cast<double>(i);
      for (std::size_t k = 0; k < n; ++k) {
        const double q = g[0] + g[2] * static_cast<double>(k);
        const double m = hklab::m_pq(p, q, cfg);
        rows.emplace_back("p=" + fmt(p) + ";q=" + fmt(q), m);
        std::optional<double> reference;
        if (p == q && p < 1.0) reference = 1.0 / (1.0 - p);
        if (std::abs(p + q - 1.0) < 1e-12 && p > 0.0 && p < 1.0) reference = std::min(1.0 / p, 1.0 / (1.0 - p));
        json r = scan_record(p, q, m, reference);
        r["stated_region_positive"] = p <= std::max(0.0, std::min(1.0, 1.0 - q));
        records.push_back(r);
      }
    }
  } else if (o.scan_kind == "slope") {
    const Grid1D grid = make_grid(o);
    const DiscreteMeasure pi = hklab::normalize(make_target(o, grid)).shape;
    std::vector<double> radii;
    for (int e = 2; e <= 12; ++e) radii.push_back(std::pow(10.0, -e));
    for (double p : default_or(o.p_list, {-1.0, 0.0, 0.25, 0.5, 1.0, 2.0})) {
      const hklab::SlopeResult s = hklab::metric_slope_zero(EntropyOrder(p), pi, radii);
      rows.emplace_back("p=" + fmt(p), s.value);
      const double reference = p > 0.5 ? 0.0 : (p == 0.5 ? 1.0 : std::numeric_limits<double>::infinity());
      json r = scan_record(p, std::nullopt, s.value, reference);
      r["kind"] = hklab::to_string(s.kind);
      records.push_back(r);
    }
  } else {
    config_error("scan expects one of loj-he, she, mpq, slope");
  }

  if (o.format == "csv") {
    emit(o, param_value_csv(rows));
  } else {
    emit(o, json{{"scan", o.scan_kind}, {"results", records}}.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_shape_mass(const Options& o) {
  if (!(o.z0 > 0.0)) config_error("--z0 must be positive");
  if (!(o.perturb >= 0.0 && o.perturb < 1.0)) config_error("--perturb must lie in [0, 1)");
  if (!(o.alpha > 0.0) || !(o.beta > 0.0)) config_error("shape-mass needs alpha, beta > 0");
  Options local = o;
  local.init = "perturbed:" + fmt(o.perturb);
  const Grid1D grid = make_grid(o);
  const DiscreteMeasure pi = make_target(o, grid);
  const DiscreteMeasure start = make_init(local, pi).scaled(o.z0 / hklab::mass(pi));
  const hklab::Geometry geom = hklab::Geometry::hk(o.alpha, o.beta);
  const double dt = o.dt > 0.0 ? o.dt : auto_dt(geom, start, pi, EntropyOrder::kl());
  hklab::ShapeMassRun run_cfg{dt, o.t_end, auto_record_every(o.t_end, dt, o.record_every)};
  const hklab::ShapeMassReport rep = hklab::verify_hk_decay(start, pi, o.alpha, o.beta, run_cfg);

  if (o.format == "csv") {
    std::string s = "t,z,kl_shape,he_total,bound,mass_bound_ok,he_bound_ok\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      s += fmt(rep.times[i]) + "," + fmt(rep.z[i]) + "," + fmt(rep.kl_shape[i]) + "," + fmt(rep.he_total[i]) + "," +
           fmt(rep.bound[i]) + "," + (rep.mass_bound_ok[i] ? "1" : "0") + "," + (rep.he_bound_ok[i] ? "1" : "0") +
           "\n";
    emit(o, s);
  } else {
    const auto& c = rep.constants;
    json j{{"z0", c.z0},
           {"z_star", c.z_star},
           {"H0", c.h0},
           {"alpha_hat", c.alpha_hat},
           {"beta", c.beta},
           {"gamma", c.gamma()},
           {"samples", rep.times.size()},
           {"max_mass_formula_error", rep.max_mass_formula_error()},
           {"all_bounds_hold", rep.all_bounds_hold()},
           {"corrected_bounds_hold", rep.corrected_bounds_hold()}};
    emit(o, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_geodesic(const Options& o) {
  const Grid1D grid = make_grid(o);
  const DiscreteMeasure end = make_target(o, grid);
  const DiscreteMeasure start = make_init(o, end);
  const double total = hklab::hellinger(start, end);
  std::string s = "s,distance_from_start,distance_to_end,mass\n";
  json pts = json::array();
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    const DiscreteMeasure m = hklab::hellinger_geodesic(start, end, t);
    const double a = hklab::hellinger(start, m);
    const double b = hklab::hellinger(m, end);
    s += fmt(t) + "," + fmt(a) + "," + fmt(b) + "," + fmt(hklab::mass(m)) + "\n";
    pts.push_back({{"s", t}, {"distance_from_start", a}, {"distance_to_end", b}});
  }
  if (o.format == "csv") {
    emit(o, s);
  } else {
    emit(o, json{{"distance", total}, {"points", pts}}.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_counterexample(const Options& o) {
  const Grid1D grid = make_grid(o);
  const DiscreteMeasure pi = make_target(o, grid);
  const EntropyOrder p(o.p);
  std::string s = "r,dissipation_w,dissipation_he,divergence\n";
  json rows = json::array();
  for (double r : o.r_list) {
    const hklab::CounterexampleValues v = hklab::counterexample_scaled(pi, r, p);
    s += fmt(r) + "," + fmt(v.dissipation_w) + "," + fmt(v.dissipation_he) + "," + fmt(v.divergence) + "\n";
    rows.push_back({{"r", r},
                    {"dissipation_w", v.dissipation_w},
                    {"dissipation_he", finite_or_null(v.dissipation_he)},
                    {"divergence", finite_or_null(v.divergence)}});
  }
  if (o.format == "csv") {
    emit(o, s);
  } else {
    emit(o, json{{"p", o.p}, {"rows", rows}}.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient flows of power-entropy divergences: simulations and functional-inequality scans"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  Options o;

  app.add_option("--grid-n", o.grid_n, "number of grid cells")->check(CLI::Range(2, 1000000));
  app.add_option("--domain", o.domain, "domain endpoints a,b")->delimiter(',')->expected(2);
  app.add_option("--dt", o.dt, "time step (0 = automatic stable step)")->check(CLI::NonNegativeNumber);
  app.add_option("--t-end", o.t_end, "final time")->check(CLI::PositiveNumber);
  app.add_option("--alpha", o.alpha, "transport weight")->check(CLI::NonNegativeNumber);
  app.add_option("--beta", o.beta, "reaction weight")->check(CLI::NonNegativeNumber);
  app.add_option("--p", o.p, "entropy order");
  app.add_option("--geometry", o.geometry, "w | he | she | hk | shk");
  app.add_option("--target", o.target, "uniform | gaussian[:m,s] | mixture | double-well[:a]");
  app.add_option("--init", o.init, "target | scaled:c | perturbed[:amp] | mixture | gaussian:m,s | random");
  app.add_option("--out", o.out, "output file ('-' for stdout)");
  app.add_option("--seed", o.seed, "seed for randomized initial data");
  app.add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--record-every", o.record_every, "steps between samples (0 = about 200 samples)");
  app.add_option("--p-list", o.p_list, "comma-separated entropy orders")->delimiter(',');
  app.add_option("--aux", o.aux, "extra divergence orders recorded along the flow")->delimiter(',');
  app.add_option("--r-list", o.r_list, "scales r for counterexample")->delimiter(',');
  app.add_option("--grid", o.pq_grid, "p,q grid lo:hi:step for scan mpq");
  app.add_option("--s-min", o.s_min, "lower end of scan range")->check(CLI::PositiveNumber);
  app.add_option("--s-max", o.s_max, "upper end of scan range")->check(CLI::PositiveNumber);
  app.add_option("--z0", o.z0, "initial mass for shape-mass");
  app.add_option("--perturb", o.perturb, "shape perturbation amplitude for shape-mass");

  auto* flow = app.add_subcommand("flow", "simulate a gradient flow and write its decay trace")->fallthrough();
  auto* scan = app.add_subcommand("scan", "functional-inequality constant scans")->fallthrough();
  scan->add_option("kind", o.scan_kind, "loj-he | mpq | she | slope")
      ->required()
      ->check(CLI::IsMember({"loj-he", "mpq", "she", "slope"}));
  auto* shape = app.add_subcommand("shape-mass", "HK flow of KL with shape/mass decay bounds")->fallthrough();
  auto* geo = app.add_subcommand("geodesic", "Hellinger geodesic between --init and --target")->fallthrough();
  auto* cex = app.add_subcommand("counterexample", "dissipations at constant multiples of the target")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*flow) return cmd_flow(o);
    if (*scan) return cmd_scan(o);
    if (*shape) return cmd_shape_mass(o);
    if (*geo) return cmd_geodesic(o);
    if (*cex) return cmd_counterexample(o);
  } catch (const hklab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Unstable:
      case ErrorKind::InsufficientData:
      case ErrorKind::NonPositiveValues:
      case ErrorKind::ZeroDivergence:
        return kExitNumeric;
      default:
        return kExitConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
