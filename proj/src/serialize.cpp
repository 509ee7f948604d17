#include "stfm/serialize.hpp"

#include "stfm/error.hpp"

#include <algorithm>
#include <fstream>

namespace stfm {

namespace {

using Index = Eigen::Index;

Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Vector::Map(values.data(), static_cast<Index>(values.size()));
}

Json slices_to_json(const Slices& s) {
  std::vector<double> flat;
  for (const auto& m : s) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index k = 0; k < m.cols(); ++k) flat.push_back(m(i, k));
    }
  }
  return flat;
}

Slices slices_from_json(const Json& j, std::size_t count, Index rows, Index cols) {
  const auto flat = j.get<std::vector<double>>();
  if (flat.size() != count * static_cast<std::size_t>(rows * cols)) {
    throw Error(ErrorKind::ShapeError, "stacked array has the wrong length");
  }
  Slices out(count, Matrix(rows, cols));
  std::size_t pos = 0;
  for (auto& m : out) {
    for (Index i = 0; i < rows; ++i) {
      for (Index k = 0; k < cols; ++k) m(i, k) = flat[pos++];
    }
  }
  return out;
}

Json sites_to_json(const SiteSet& sites) {
  Json out = Json::array();
  for (const auto& s : sites.sites()) out.push_back({{"id", s.id}, {"x", s.at.x}, {"y", s.at.y}});
  return out;
}

const char* to_string(BasisFamily f) { return f == BasisFamily::BSpline ? "bspline" : "polynomial"; }

const char* to_string(PartitionStrategy s) {
  return s == PartitionStrategy::Random ? "random" : "interleave";
}

const char* to_string(RankMethod m) { return m == RankMethod::Scree ? "scree" : "eigen_ratio"; }

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = 0; k < m.cols(); ++k) flat.push_back(m(i, k));
  }
  return flat;
}

Matrix matrix_from_json(const Json& j, Index rows, Index cols) {
  return slices_from_json(j, 1, rows, cols).front();
}

Json to_json(const FactorFit& fit) {
  Json spectra = Json::object();
  for (const auto& [name, values] : fit.spectra) spectra[name] = vector_to_json(values);
  Json partition = {{"idx1", fit.partition.idx1},
                    {"idx2", fit.partition.idx2},
                    {"dropped", fit.partition.dropped ? Json(*fit.partition.dropped) : Json(nullptr)},
                    {"seed", fit.partition.seed},
                    {"strategy", to_string(fit.partition.strategy)}};
  Json ranks = {{"d_hat", fit.ranks.d_hat},
                {"r_hat", fit.ranks.r_hat},
                {"method", to_string(fit.ranks.method)},
                {"k_max", fit.ranks.k_max},
                {"k_max_spatial", fit.ranks.k_max_spatial},
                {"threshold", fit.ranks.threshold},
                {"fixed", fit.ranks.fixed}};
  return {{"d", fit.d()},
          {"r", fit.r()},
          {"n", fit.n()},
          {"p", fit.p()},
          {"T", fit.T()},
          {"QA", matrix_to_json(fit.QA.Q)},
          {"QB", matrix_to_json(fit.QB.Q)},
          {"Z", slices_to_json(fit.Z.z)},
          {"QA1", matrix_to_json(fit.QA1.Q)},
          {"QA2", matrix_to_json(fit.QA2.Q)},
          {"n1", fit.QA1.Q.rows()},
          {"n2", fit.QA2.Q.rows()},
          {"center", matrix_to_json(fit.center)},
          {"spectra", spectra},
          {"partition", partition},
          {"ranks", ranks}};
}

FactorFit factor_fit_from_json(const Json& j) {
  return guarded("factor fit", [&] {
    FactorFit fit;
    const auto d = j.at("d").get<Index>();
    const auto r = j.at("r").get<Index>();
    const auto n = j.at("n").get<Index>();
    const auto p = j.at("p").get<Index>();
    const auto T = j.at("T").get<std::size_t>();
    const auto n1 = j.at("n1").get<Index>();
    const auto n2 = j.at("n2").get<Index>();
    const auto& spectra = j.at("spectra");
    auto spectrum = [&](const char* name) {
      return spectra.contains(name) ? vector_from_json(spectra.at(name)) : Vector();
    };
    for (auto it = spectra.begin(); it != spectra.end(); ++it) fit.spectra[it.key()] = vector_from_json(it.value());
    fit.QA = {matrix_from_json(j.at("QA"), n, d), spectrum("MA")};
    fit.QB = {matrix_from_json(j.at("QB"), p, r), spectrum("MB")};
    fit.QA1 = {matrix_from_json(j.at("QA1"), n1, d), spectrum("MA1")};
    fit.QA2 = {matrix_from_json(j.at("QA2"), n2, d), spectrum("MA2")};
    fit.Z.z = slices_from_json(j.at("Z"), T, d, r);
    fit.center = matrix_from_json(j.at("center"), n, p);
    const auto& part = j.at("partition");
    fit.partition.idx1 = part.at("idx1").get<std::vector<std::size_t>>();
    fit.partition.idx2 = part.at("idx2").get<std::vector<std::size_t>>();
    if (!part.at("dropped").is_null()) fit.partition.dropped = part.at("dropped").get<std::size_t>();
    fit.partition.seed = part.at("seed").get<std::uint64_t>();
    fit.partition.strategy = part.at("strategy").get<std::string>() == "random"
                                 ? PartitionStrategy::Random
                                 : PartitionStrategy::Interleave;
    const auto& ranks = j.at("ranks");
    fit.ranks.d_hat = ranks.at("d_hat").get<std::size_t>();
    fit.ranks.r_hat = ranks.at("r_hat").get<std::size_t>();
    fit.ranks.method = ranks.at("method").get<std::string>() == "scree" ? RankMethod::Scree
                                                                         : RankMethod::EigenRatio;
    fit.ranks.k_max = ranks.at("k_max").get<std::size_t>();
    fit.ranks.k_max_spatial = ranks.at("k_max_spatial").get<std::size_t>();
    fit.ranks.threshold = ranks.at("threshold").get<double>();
    fit.ranks.fixed = ranks.at("fixed").get<bool>();
    return fit;
  });
}

Json to_json(const SieveFit& fit) {
  const auto& s = fit.spec;
  return {{"family", to_string(s.family)},
          {"degree", {s.degree[0], s.degree[1]}},
          {"knots_per_axis", s.knots_per_axis},
          {"domain", {s.domain.xmin, s.domain.xmax, s.domain.ymin, s.domain.ymax}},
          {"J", fit.beta.rows()},
          {"d", fit.beta.cols()},
          {"beta", matrix_to_json(fit.beta)},
          {"residual_rms", vector_to_json(fit.residual_rms)},
          {"condition_number", fit.condition_number},
          {"ill_conditioned", fit.ill_conditioned}};
}

SieveFit sieve_fit_from_json(const Json& j) {
  return guarded("sieve fit", [&] {
    SieveFit fit;
    auto& s = fit.spec;
    const auto family = j.at("family").get<std::string>();
    if (family != "bspline" && family != "polynomial") {
      throw Error(ErrorKind::ParseError, "unknown basis family '" + family + "'");
    }
    s.family = family == "bspline" ? BasisFamily::BSpline : BasisFamily::Polynomial;
    const auto degree = j.at("degree").get<std::vector<int>>();
    if (degree.size() != 2) throw Error(ErrorKind::ParseError, "degree needs two entries");
    s.degree = {degree[0], degree[1]};
    s.knots_per_axis = j.at("knots_per_axis").get<int>();
    const auto dom = j.at("domain").get<std::vector<double>>();
    if (dom.size() != 4) throw Error(ErrorKind::ParseError, "domain needs four entries");
    s.domain = {dom[0], dom[1], dom[2], dom[3]};
    const auto d = j.at("d").get<Index>();
    if (j.at("J").get<int>() != s.size()) throw Error(ErrorKind::ShapeError, "J does not match the basis");
    fit.beta = matrix_from_json(j.at("beta"), s.size(), d);
    fit.residual_rms = vector_from_json(j.at("residual_rms"));
    fit.condition_number = j.value("condition_number", 0.0);
    fit.ill_conditioned = j.value("ill_conditioned", false);
    return fit;
  });
}

Json to_json(const VarModel& model) {
  return {{"kind", "var1"},
          {"d", model.d},
          {"r", model.r},
          {"dim", model.Phi.rows()},
          {"Phi", matrix_to_json(model.Phi)},
          {"innovation_cov", matrix_to_json(model.innovation_cov)}};
}

Json to_json(const MarModel& model) {
  return {{"kind", "mar1"},
          {"d", model.PhiR.rows()},
          {"r", model.PhiC.rows()},
          {"PhiR", matrix_to_json(model.PhiR)},
          {"PhiC", matrix_to_json(model.PhiC)},
          {"iterations", model.iterations},
          {"converged", model.converged},
          {"objective", model.objective},
          {"history", model.history}};
}

Json to_json(const TemporalModel& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

TemporalModel temporal_model_from_json(const Json& j) {
  return guarded("temporal model", [&]() -> TemporalModel {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "var1") {
      VarModel m;
      m.d = j.at("d").get<Index>();
      m.r = j.at("r").get<Index>();
      const auto dim = j.at("dim").get<Index>();
      m.Phi = matrix_from_json(j.at("Phi"), dim, dim);
      m.innovation_cov = matrix_from_json(j.at("innovation_cov"), dim, dim);
      return m;
    }
    if (kind == "mar1") {
      MarModel m;
      const auto d = j.at("d").get<Index>();
      const auto r = j.at("r").get<Index>();
      m.PhiR = matrix_from_json(j.at("PhiR"), d, d);
      m.PhiC = matrix_from_json(j.at("PhiC"), r, r);
      m.iterations = j.at("iterations").get<std::size_t>();
      m.converged = j.at("converged").get<bool>();
      m.objective = j.at("objective").get<double>();
      m.history = j.at("history").get<std::vector<double>>();
      return m;
    }
    throw Error(ErrorKind::ParseError, "unknown model kind '" + kind + "'");
  });
}

Json to_json(const ScalingParams& params) {
  return {{"n", params.mean.rows()},
          {"p", params.mean.cols()},
          {"mean", matrix_to_json(params.mean)},
          {"sd", matrix_to_json(params.sd)}};
}

ScalingParams scaling_params_from_json(const Json& j) {
  return guarded("scaling params", [&] {
    const auto n = j.at("n").get<Index>();
    const auto p = j.at("p").get<Index>();
    return ScalingParams{matrix_from_json(j.at("mean"), n, p), matrix_from_json(j.at("sd"), n, p)};
  });
}

Json to_json(const CoefficientField& field) {
  return {{"n", field.n()}, {"m", field.m()}, {"p", field.p()}, {"coef", slices_to_json(field.coef)}};
}

CoefficientField coefficient_field_from_json(const Json& j) {
  return guarded("coefficient field", [&] {
    const auto n = j.at("n").get<std::size_t>();
    const auto m = j.at("m").get<Index>();
    const auto p = j.at("p").get<Index>();
    return CoefficientField{slices_from_json(j.at("coef"), n, m, p)};
  });
}

Json to_json(const SimConfig& c) {
  return {{"n", c.n},
          {"p", c.p},
          {"T", c.T},
          {"gamma", c.gamma},
          {"seed", c.seed},
          {"burn_in", c.burn_in},
          {"new_sites", c.new_sites},
          {"horizon", c.horizon},
          {"signal_scale", c.signal_scale},
          {"noise_scale", c.noise_scale}};
}

SimConfig sim_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "simulation config must be a JSON object");
  static const std::vector<std::string> known{"n", "p", "T", "gamma", "seed", "burn_in",
                                              "new_sites", "horizon", "signal_scale", "noise_scale"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw Error(ErrorKind::ConfigError, "unknown simulation key '" + it.key() + "'");
    }
  }
  SimConfig c;
  try {
    c.n = j.value("n", c.n);
    c.p = j.value("p", c.p);
    c.T = j.value("T", c.T);
    c.gamma = j.value("gamma", c.gamma);
    c.seed = j.value("seed", c.seed);
    c.burn_in = j.value("burn_in", c.burn_in);
    c.new_sites = j.value("new_sites", c.new_sites);
    c.horizon = j.value("horizon", c.horizon);
    c.signal_scale = j.value("signal_scale", c.signal_scale);
    c.noise_scale = j.value("noise_scale", c.noise_scale);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  c.validate();
  return c;
}

Json to_json(const SimGroundTruth& g) {
  return {{"n", g.A.rows()},
          {"p", g.B.rows()},
          {"T", g.X.size()},
          {"d", g.A.cols()},
          {"r", g.B.cols()},
          {"A", matrix_to_json(g.A)},
          {"B", matrix_to_json(g.B)},
          {"PhiR", matrix_to_json(g.PhiR)},
          {"PhiC", matrix_to_json(g.PhiC)},
          {"X", slices_to_json(g.X)},
          {"new_sites", sites_to_json(g.new_sites)},
          {"A_new", matrix_to_json(g.A_new)},
          {"horizon", g.future_X.size()},
          {"future_X", slices_to_json(g.future_X)}};
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace stfm
