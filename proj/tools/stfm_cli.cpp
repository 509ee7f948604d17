#include "stfm/dataset.hpp"
#include "stfm/error.hpp"
#include "stfm/experiment.hpp"
#include "stfm/factor.hpp"
#include "stfm/forecast.hpp"
#include "stfm/metrics.hpp"
#include "stfm/serialize.hpp"
#include "stfm/sieve.hpp"
#include "stfm/simgen.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace stfm;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

struct Global {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
  bool full = false;
};

struct FitArgs {
  std::string data;
  std::string layout = "long";
  std::size_t deseasonalize = 0;
  bool standardize = false;
  std::string ranks = "auto";
  std::string rank_method = "ratio";
  double threshold = 0.9;
  std::string partition = "random";
  std::string basis = "bspline";
  int knots = 0;
  int degree = 3;
};

struct PredictArgs {
  std::string fit;
  std::string sieve;
  std::string sites;
  long t = -1;
  int horizon = 1;
  std::string model = "mar";
};

struct ReplicateArgs {
  std::string table = "all";
  std::size_t replicates = 0;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

fs::path out_dir(const Global& g) {
  const fs::path dir = g.out.empty() ? fs::path("out") : fs::path(g.out);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream s;
  s << std::setprecision(8) << v;
  return s.str();
}

std::optional<std::pair<std::size_t, std::size_t>> parse_ranks(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    const auto d = std::stoul(text.substr(0, comma));
    const auto r = std::stoul(text.substr(comma + 1));
    if (d == 0 || r == 0) throw std::invalid_argument(text);
    return std::make_pair(static_cast<std::size_t>(d), static_cast<std::size_t>(r));
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::ConfigError, "--ranks expects 'auto' or 'd,r', got '" + text + "'");
  }
}

Json sites_json(const SiteSet& sites) {
  Json out = Json::array();
  for (const auto& s : sites.sites()) out.push_back({{"id", s.id}, {"x", s.at.x}, {"y", s.at.y}});
  return out;
}

SiteSet sites_from_json(const Json& j) {
  std::vector<Site> sites;
  for (const auto& s : j) sites.push_back({s.at("id").get<std::string>(), {s.at("x").get<double>(), s.at("y").get<double>()}});
  return SiteSet(std::move(sites));
}

void write_scree(const fs::path& path, const FactorFit& fit) {
  auto out = open_out(path);
  out << "matrix,k,eigenvalue,fraction,cumulative\n";
  for (const auto& [name, values] : fit.spectra) {
    const double total = values.cwiseMax(0.0).sum();
    double cum = 0.0;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      const double frac = total > 0.0 ? std::max(values(k), 0.0) / total : 0.0;
      cum += frac;
      out << name << ',' << k + 1 << ',' << values(k) << ',' << frac << ',' << cum << '\n';
    }
  }
}

int cmd_simulate(const Global& g) {
  SimConfig c = g.config.empty() ? SimConfig{} : sim_config_from_json(read_json(g.config));
  if (g.seed) c.seed = *g.seed;
  const SimOutput sim = generate(c);
  const fs::path dir = out_dir(g);
  write_long_csv(dir / "data.csv", sim.data);
  write_json(dir / "truth.json", {{"config", to_json(c)}, {"truth", to_json(sim.truth)}});
  auto sites = open_out(dir / "new_sites.csv");
  write_sites_csv(sites, sim.truth.new_sites);
  std::cout << "wrote " << (dir / "data.csv").string() << " (T=" << c.T << ", n=" << c.n
            << ", p=" << c.p << ")\n";
  return kOk;
}

int cmd_fit(const Global& g, const FitArgs& a) {
  if (a.data.empty()) throw Error(ErrorKind::ConfigError, "fit needs --data");
  if (a.layout != "long" && a.layout != "wide") throw Error(ErrorKind::ConfigError, "--layout must be long or wide");
  STDataTensor data = load_csv(a.data, a.layout == "long" ? CsvLayout::Long : CsvLayout::Wide);
  if (a.deseasonalize > 0) data = deseasonalize_monthly(data, a.deseasonalize);
  const fs::path dir = out_dir(g);
  if (a.standardize) {
    auto [z, params] = standardize(data);
    data = std::move(z);
    write_json(dir / "scaling.json", to_json(params));
  }

  FitOptions fo;
  fo.ranks.fixed = parse_ranks(a.ranks);
  if (a.rank_method != "ratio" && a.rank_method != "scree") {
    throw Error(ErrorKind::ConfigError, "--rank-method must be ratio or scree");
  }
  fo.ranks.method = a.rank_method == "scree" ? RankMethod::Scree : RankMethod::EigenRatio;
  fo.ranks.threshold = a.threshold;
  if (a.partition != "random" && a.partition != "interleave") {
    throw Error(ErrorKind::ConfigError, "--partition must be random or interleave");
  }
  fo.strategy = a.partition == "random" ? PartitionStrategy::Random : PartitionStrategy::Interleave;
  fo.seed = g.seed.value_or(0);
  const FactorFit fit = stfm::fit(data, fo);

  BasisSpec spec = BasisSpec::default_for(data.sites());
  if (a.basis == "polynomial") {
    spec.family = BasisFamily::Polynomial;
    spec.knots_per_axis = a.knots > 0 ? a.knots : 3;
  } else if (a.basis == "bspline") {
    spec.degree = {a.degree, a.degree};
    if (a.knots > 0) spec.knots_per_axis = a.knots;
  } else {
    throw Error(ErrorKind::ConfigError, "--basis must be bspline or polynomial");
  }
  const SieveFit sieve = fit_loading_functions(fit.QA, build_basis(spec, data.sites()), spec);
  if (sieve.ill_conditioned) {
    std::cerr << "warning: sieve design is ill-conditioned (condition number "
              << sieve.condition_number << ")\n";
  }

  Json fj = to_json(fit);
  fj["sites"] = sites_json(data.sites());
  fj["variables"] = data.variables();
  fj["times"] = data.times();
  write_json(dir / "fit.json", fj);
  write_json(dir / "sieve.json", to_json(sieve));
  write_scree(dir / "scree.csv", fit);
  std::cout << "d_hat=" << fit.d() << " r_hat=" << fit.r() << '\n';
  return kOk;
}

struct LoadedFit {
  FactorFit fit;
  SieveFit sieve;
  SiteSet sites;
  std::vector<std::string> variables;
};

LoadedFit load_fit(const PredictArgs& a) {
  if (a.fit.empty() || a.sieve.empty()) throw Error(ErrorKind::ConfigError, "need --fit and --sieve");
  const Json fj = read_json(a.fit);
  LoadedFit out{factor_fit_from_json(fj), sieve_fit_from_json(read_json(a.sieve)), {}, {}};
  try {
    out.sites = sites_from_json(fj.at("sites"));
    out.variables = fj.at("variables").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("fit metadata: ") + e.what());
  }
  return out;
}

void write_predictions(std::ostream& out, const SiteSet& sites, const std::vector<std::string>& vars,
                       const Matrix& values, std::optional<int> horizon) {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = 0; j < vars.size(); ++j) {
      out << sites[i].id << ',' << sites[i].at.x << ',' << sites[i].at.y << ',' << vars[j] << ','
          << values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (horizon) out << ',' << *horizon;
      out << '\n';
    }
  }
}

int cmd_krige(const Global& g, const PredictArgs& a) {
  const LoadedFit lf = load_fit(a);
  if (a.sites.empty()) throw Error(ErrorKind::ConfigError, "krige needs --sites");
  const SiteSet query = load_sites_csv(a.sites);
  const std::size_t t = a.t < 0 ? lf.fit.T() - 1 : static_cast<std::size_t>(a.t);
  const Matrix pred = predict_sites(lf.fit, lf.sieve, query, t);
  auto out = open_out(out_dir(g) / "krige.csv");
  out << "site_id,x,y,variable,value\n";
  write_predictions(out, query, lf.variables, pred, std::nullopt);
  return kOk;
}

int cmd_forecast(const Global& g, const PredictArgs& a) {
  const LoadedFit lf = load_fit(a);
  const SiteSet query = a.sites.empty() ? lf.sites : load_sites_csv(a.sites);
  if (a.horizon < 1) throw Error(ErrorKind::ConfigError, "--horizon must be >= 1");
  TemporalModel model;
  if (a.model == "mar") {
    model = fit_mar1(lf.fit.Z);
  } else if (a.model == "var") {
    model = fit_var1(lf.fit.Z);
  } else {
    throw Error(ErrorKind::ConfigError, "--model must be mar or var");
  }
  const fs::path dir = out_dir(g);
  write_json(dir / "model.json", to_json(model));
  auto out = open_out(dir / "forecast.csv");
  out << "site_id,x,y,variable,value,horizon\n";
  for (int h = 1; h <= a.horizon; ++h) {
    write_predictions(out, query, lf.variables, predict_future(lf.fit, lf.sieve, model, query, h), h);
  }
  return kOk;
}

std::string cell_prefix(const GridCell& c) {
  std::ostringstream s;
  s << c.T << ',' << c.p << ',' << c.n << ',' << fmt(c.gamma);
  return s.str();
}

void add_summary(std::ostream& out, const std::vector<std::optional<double>>& values, double scale) {
  const Summary s = summarize(values);
  out << ',' << fmt(s.mean * scale) << ',' << fmt(s.std * scale);
}

template <typename F>
std::vector<std::optional<double>> column(const std::vector<ReplicateResult>& rs, F&& f) {
  std::vector<std::optional<double>> out;
  for (const auto& r : rs) out.push_back(r.ok ? f(r) : std::nullopt);
  return out;
}

int cmd_replicate(const Global& g, const ReplicateArgs& a) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::from_json(read_json(g.config));
  if (g.seed) cfg.seed = *g.seed;
  if (a.replicates > 0) cfg.replicates = a.replicates;
  if (g.full) cfg.replicates = 200;
  const bool all = a.table == "all";
  if (!all && a.table != "rank_freq" && a.table != "space_dist" && a.table != "prediction") {
    throw Error(ErrorKind::ConfigError, "--table must be rank_freq, space_dist, prediction or all");
  }
  const bool want_rank = all || a.table == "rank_freq";
  const bool want_dist = all || a.table == "space_dist";
  const bool want_pred = all || a.table == "prediction";

  const fs::path dir = g.out.empty() ? fs::path(cfg.outputs) : fs::path(g.out);
  fs::create_directories(dir);
  std::optional<std::ofstream> rank_out, dist_out, pred_out;
  if (want_rank) {
    rank_out = open_out(dir / "rank_freq.csv");
    *rank_out << "T,p,n,gamma,d_hat,r_hat,frequency\n";
  }
  if (want_dist) {
    dist_out = open_out(dir / "space_dist.csv");
    *dist_out << "T,p,n,gamma,replicates,failed,D_A1_x10_mean,D_A1_x10_std,D_A2_x10_mean,D_A2_x10_std,"
                 "D_A12_avg_x10_mean,D_A12_avg_x10_std,D_A_x10_mean,D_A_x10_std,D_B_x10_mean,D_B_x10_std,"
                 "mse_first_mean,mse_first_std,mse_second_mean,mse_second_std\n";
  }
  if (want_pred) {
    pred_out = open_out(dir / "prediction.csv");
    *pred_out << "T,p,n,gamma,replicates,failed,spatial_mean,spatial_std,mar_h1_mean,mar_h1_std,"
                 "mar_h2_mean,mar_h2_std,var_h1_mean,var_h1_std,var_h2_mean,var_h2_std\n";
  }

  ReplicateOptions ro;
  ro.ranks = cfg.ranks;
  ro.predictions = want_pred;
  for (const auto& cell : cfg.cells()) {
    const auto rs = run_cell(cell, cfg.replicates, cfg.seed, ro, g.jobs);
    std::size_t failed = 0;
    for (const auto& r : rs) {
      if (!r.ok) {
        ++failed;
        std::cerr << "replicate seed " << r.seed << " failed: " << r.error << '\n';
      }
    }
    if (rank_out) {
      for (const auto& [key, f] : rank_frequencies(rs)) {
        *rank_out << cell_prefix(cell) << ',' << key.first << ',' << key.second << ',' << fmt(f) << '\n';
      }
    }
    if (dist_out) {
      *dist_out << cell_prefix(cell) << ',' << rs.size() << ',' << failed;
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional(r.D_A1); }), 10.0);
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional(r.D_A2); }), 10.0);
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional((r.D_A1 + r.D_A2) / 2); }), 10.0);
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional(r.D_A); }), 10.0);
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional(r.D_B); }), 10.0);
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional(r.mse_first); }), 1.0);
      add_summary(*dist_out, column(rs, [](const auto& r) { return std::optional(r.mse_second); }), 1.0);
      *dist_out << '\n';
    }
    if (pred_out) {
      *pred_out << cell_prefix(cell) << ',' << rs.size() << ',' << failed;
      add_summary(*pred_out, column(rs, [](const auto& r) { return r.mspe_spatial; }), 1.0);
      for (std::size_t h = 0; h < kHorizons; ++h) {
        add_summary(*pred_out, column(rs, [h](const auto& r) { return r.mspe_mar[h]; }), 1.0);
      }
      for (std::size_t h = 0; h < kHorizons; ++h) {
        add_summary(*pred_out, column(rs, [h](const auto& r) { return r.mspe_var[h]; }), 1.0);
      }
      *pred_out << '\n';
    }
    std::cerr << "cell T=" << cell.T << " p=" << cell.p << " n=" << cell.n << " gamma=" << cell.gamma
              << ": " << rs.size() - failed << '/' << rs.size() << " replicates\n";
  }
  return kOk;
}

int cmd_snr(const Global& g, std::size_t draws) {
  SimConfig c = g.config.empty() ? SimConfig{} : sim_config_from_json(read_json(g.config));
  if (g.seed) c.seed = *g.seed;
  if (draws < 1000) throw Error(ErrorKind::ConfigError, "--draws must be >= 1000");
  const SnrEstimate est = snr_montecarlo(c, draws);
  auto out = open_out(out_dir(g) / "snr.csv");
  out << "snr,std_error,draws\n" << est.snr << ',' << est.std_error << ',' << est.draws << '\n';
  std::cout << "snr=" << fmt(est.snr) << " std_error=" << fmt(est.std_error) << '\n';
  return kOk;
}

int exit_code(const Error& e) {
  switch (classify(e.kind())) {
    case ErrorClass::Config: return kConfig;
    case ErrorClass::Data: return kData;
    case ErrorClass::Numerical: return kNumerical;
  }
  return kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank spatial-temporal factor model: simulate, fit, krige, forecast"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config, "JSON config (simulate, snr: simulation keys; replicate: grid)");
  app.add_option("--seed", g.seed, "RNG seed; overrides the config value");
  app.add_option("--out", g.out, "output directory (default: out, or the config's outputs for replicate)");
  app.add_option("--jobs", g.jobs, "worker threads (0: OpenMP default)")->capture_default_str();
  app.add_flag("--full", g.full, "replicate: 200 replicates per cell");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic data set with ground truth");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "estimate loadings, factors and the sieve loading functions");
  fit->add_option("--data", fa.data, "observation CSV")->required();
  fit->add_option("--layout", fa.layout, "long or wide")->capture_default_str();
  fit->add_option("--deseasonalize", fa.deseasonalize, "seasonal difference period (0: off)")->capture_default_str();
  fit->add_flag("--standardize", fa.standardize, "standardize every series; writes scaling.json");
  fit->add_option("--ranks", fa.ranks, "'auto' or 'd,r'")->capture_default_str();
  fit->add_option("--rank-method", fa.rank_method, "ratio or scree")->capture_default_str();
  fit->add_option("--threshold", fa.threshold, "scree explained fraction")->capture_default_str();
  fit->add_option("--partition", fa.partition, "random or interleave")->capture_default_str();
  fit->add_option("--basis", fa.basis, "bspline or polynomial")->capture_default_str();
  fit->add_option("--knots", fa.knots, "knots per axis, or max power for polynomial (0: default)")->capture_default_str();
  fit->add_option("--degree", fa.degree, "B-spline degree")->capture_default_str();

  PredictArgs pa;
  auto* krige = app.add_subcommand("krige", "predict the signal at new sites");
  auto* fc = app.add_subcommand("forecast", "forecast the signal h steps ahead");
  for (auto* sub : {krige, fc}) {
    sub->add_option("--fit", pa.fit, "fit.json from the fit command")->required();
    sub->add_option("--sieve", pa.sieve, "sieve.json from the fit command")->required();
    sub->add_option("--sites", pa.sites, "query sites CSV (site_id,x,y)");
  }
  krige->add_option("--t", pa.t, "time index (default: last)");
  fc->add_option("--horizon", pa.horizon, "forecast steps")->capture_default_str();
  fc->add_option("--model", pa.model, "mar or var")->capture_default_str();

  ReplicateArgs ra;
  auto* rep = app.add_subcommand("replicate", "Monte Carlo tables over a simulation grid");
  rep->add_option("--table", ra.table, "rank_freq, space_dist, prediction or all")->capture_default_str();
  rep->add_option("--replicates", ra.replicates, "replicates per cell (0: config value)");

  std::size_t draws = 100000;
  auto* snr = app.add_subcommand("snr", "Monte Carlo signal-to-noise ratio of the simulation design");
  snr->add_option("--draws", draws, "site draws")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (g.jobs > 0) omp_set_num_threads(g.jobs);
    if (*sim) return cmd_simulate(g);
    if (*fit) return cmd_fit(g, fa);
    if (*krige) return cmd_krige(g, pa);
    if (*fc) return cmd_forecast(g, pa);
    if (*rep) return cmd_replicate(g, ra);
    if (*snr) return cmd_snr(g, draws);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
