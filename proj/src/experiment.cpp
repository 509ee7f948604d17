#include "stfm/experiment.hpp"

#include "stfm/error.hpp"
#include "stfm/forecast.hpp"
#include "stfm/metrics.hpp"
#include "stfm/rng.hpp"
#include "stfm/sieve.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string_view>

namespace stfm {

namespace {

using Index = Eigen::Index;

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(static_cast<Index>(rows[i]));
  return out;
}

template <typename T>
std::vector<T> list_field(const nlohmann::json& grid, const char* key) {
  if (!grid.contains(key)) throw Error(ErrorKind::ConfigError, std::string("grid is missing '") + key + "'");
  const auto& v = grid.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

void score_predictions(const SimOutput& sim, const FactorFit& fit, ReplicateResult& res) {
  // The simulated sites are uniform on the square, so the sieve lives on the square itself.
  try {
    BasisSpec spec = BasisSpec::default_for(sim.data.sites());
    spec.domain = Domain{-1.0, 1.0, -1.0, 1.0};
    const SieveFit sieve = fit_loading_functions(fit.QA, build_basis(spec, sim.data.sites()), spec);
    Slices pred(fit.T());
    for (std::size_t t = 0; t < fit.T(); ++t) pred[t] = predict_sites(fit, sieve, sim.truth.new_sites, t);
    res.mspe_spatial = mspe_spatial(pred, sim.truth.new_site_truth);
  } catch (const Error&) {
  }

  const Matrix& ZT = fit.Z.z.back();
  const Matrix QBt = fit.QB.Q.transpose();
  auto score = [&](const TemporalModel& model, std::array<std::optional<double>, kHorizons>& out) {
    for (std::size_t h = 1; h <= kHorizons && h <= sim.truth.future_Xi.size(); ++h) {
      const Matrix zh = forecast_factor(model, ZT, static_cast<int>(h));
      out[h - 1] = mspe_temporal(fit.QA.Q * zh * QBt, sim.truth.future_Xi[h - 1]);
    }
  };
  try {
    score(fit_mar1(fit.Z), res.mspe_mar);
  } catch (const Error&) {
  }
  try {
    score(fit_var1(fit.Z), res.mspe_var);
  } catch (const Error&) {
  }
}

}  // namespace

std::vector<GridCell> ExperimentConfig::cells() const {
  std::vector<GridCell> out;
  for (auto t : T) {
    for (auto pp : p) {
      for (auto nn : n) {
        for (auto g : gamma) out.push_back({nn, pp, t, g});
      }
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw Error(ErrorKind::ConfigError, "replicates must be >= 1");
  if (n.empty() || p.empty() || T.empty() || gamma.empty()) {
    throw Error(ErrorKind::ConfigError, "every grid axis needs at least one value");
  }
  for (const auto& c : cells()) {
    SimConfig{c.n, c.p, c.T, c.gamma}.validate();
  }
  if (ranks && (ranks->first == 0 || ranks->second == 0)) {
    throw Error(ErrorKind::ConfigError, "fixed ranks must be positive");
  }
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> keys) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorKind::ConfigError, "unknown key: " + key);
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
    reject_unknown(j, {"grid", "replicates", "seed", "ranks", "outputs"});
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (!g.is_object()) throw Error(ErrorKind::ConfigError, "grid must be an object");
      reject_unknown(g, {"n", "p", "T", "gamma"});
      c.n = list_field<std::size_t>(g, "n");
      c.p = list_field<std::size_t>(g, "p");
      c.T = list_field<std::size_t>(g, "T");
      c.gamma = list_field<double>(g, "gamma");
    }
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    c.outputs = j.value("outputs", c.outputs);
    if (j.contains("ranks")) {
      const auto& r = j.at("ranks");
      if (r.is_string()) {
        if (r.get<std::string>() != "auto") throw Error(ErrorKind::ConfigError, "ranks must be \"auto\" or [d, r]");
      } else {
        const auto v = r.get<std::vector<std::size_t>>();
        if (v.size() != 2) throw Error(ErrorKind::ConfigError, "fixed ranks need two entries");
        c.ranks = std::make_pair(v[0], v[1]);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  c.validate();
  return c;
}

std::uint64_t replicate_seed(std::uint64_t seed, const GridCell& cell, std::size_t index) {
  std::uint64_t key = mix_seed(cell.n);
  key = mix_seed(key ^ cell.p);
  key = mix_seed(key ^ cell.T);
  key = mix_seed(key ^ std::bit_cast<std::uint64_t>(cell.gamma));
  return derive_seed(seed, key, index);
}

ReplicateResult run_replicate(const GridCell& cell, std::uint64_t seed, const ReplicateOptions& options) {
  ReplicateResult res;
  res.seed = seed;
  try {
    SimConfig sc;
    sc.n = cell.n;
    sc.p = cell.p;
    sc.T = cell.T;
    sc.gamma = cell.gamma;
    sc.seed = seed;
    sc.horizon = kHorizons;
    const SimOutput sim = generate(sc);

    FitOptions fo;
    fo.ranks.fixed = options.ranks;
    fo.seed = derive_seed(seed, 101);
    const FactorFit fit = stfm::fit(sim.data, fo);
    res.d_hat = fit.d();
    res.r_hat = fit.r();
    res.D_A1 = space_distance(fit.QA1.Q, take_rows(sim.truth.A, fit.partition.spatial_half1()));
    res.D_A2 = space_distance(fit.QA2.Q, take_rows(sim.truth.A, fit.partition.idx2));
    res.D_A = space_distance(fit.QA.Q, sim.truth.A);
    res.D_B = space_distance(fit.QB.Q, sim.truth.B);

    const SignalTensor first = estimate_signals(sim.data, fit.QA1, fit.QA2, fit.QB, fit.partition);
    res.mse_first = mse_signals(first, sim.truth.Xi);
    Slices second(fit.T());
    for (std::size_t t = 0; t < fit.T(); ++t) second[t] = fit.signal(t);
    res.mse_second = mse_signals(second, sim.truth.Xi.slices());

    if (options.predictions) score_predictions(sim, fit, res);
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

std::vector<ReplicateResult> run_cell(const GridCell& cell, std::size_t count, std::uint64_t seed,
                                      const ReplicateOptions& options, int jobs) {
  std::vector<ReplicateResult> out(count);
  const int workers = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(count); ++k) {
    const auto i = static_cast<std::size_t>(k);
    out[i] = run_replicate(cell, replicate_seed(seed, cell, i), options);
  }
  return out;
}

Summary summarize(const std::vector<std::optional<double>>& values) {
  Summary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.count;
    }
  }
  if (s.count == 0) {
    s.mean = std::nan("");
    s.std = std::nan("");
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (const auto& v : values) {
    if (v) ss += (*v - s.mean) * (*v - s.mean);
  }
  s.std = s.count > 1 ? std::sqrt(ss / static_cast<double>(s.count - 1)) : 0.0;
  return s;
}

std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> rank_frequencies(
    const std::vector<ReplicateResult>& results) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& r : results) {
    if (!r.ok) continue;
    ++counts[{r.d_hat, r.r_hat}];
    ++total;
  }
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> out;
  for (const auto& [key, c] : counts) out.emplace_back(key, static_cast<double>(c) / static_cast<double>(total));
  return out;
}

double rank_frequency(const std::vector<ReplicateResult>& results, std::size_t d, std::size_t r) {
  for (const auto& [key, f] : rank_frequencies(results)) {
    if (key.first == d && key.second == r) return f;
  }
  return 0.0;
}

}  // namespace stfm
