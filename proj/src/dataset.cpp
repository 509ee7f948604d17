#include "stfm/dataset.hpp"

#include "stfm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace stfm {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Comma split with minimal double-quote support (no embedded newlines).
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& field, std::size_t row, const char* column) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": column '" + column +
                                           "' value '" + field + "' is not a finite number");
  }
  return v;
}

// ISO dates (YYYY-MM or YYYY-MM-DD) sort chronologically, integer labels numerically, anything
// else lexicographically.
std::vector<std::string> order_times(std::vector<std::string> labels) {
  static const std::regex iso(R"(^(\d{4})-(\d{1,2})(?:-(\d{1,2}))?$)");
  static const std::regex integer(R"(^[+-]?\d+$)");
  const bool all_iso = std::all_of(labels.begin(), labels.end(),
                                   [](const std::string& s) { return std::regex_match(s, iso); });
  const bool all_int = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
    return std::regex_match(s, integer);
  });
  if (all_iso) {
    auto key = [](const std::string& s) {
      std::smatch m;
      std::regex_match(s, m, iso);
      const int day = m[3].matched ? std::stoi(m[3]) : 0;
      return std::make_tuple(std::stoi(m[1]), std::stoi(m[2]), day);
    };
    std::stable_sort(labels.begin(), labels.end(),
                     [&](const std::string& a, const std::string& b) { return key(a) < key(b); });
  } else if (all_int) {
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return std::stoll(a) < std::stoll(b);
    });
  } else {
    std::sort(labels.begin(), labels.end());
  }
  return labels;
}

// Assigns dense indices in first-appearance order.
class Indexer {
 public:
  std::size_t add(const std::string& key) {
    auto [it, inserted] = index_.emplace(key, keys_.size());
    if (inserted) keys_.push_back(key);
    return it->second;
  }
  std::size_t at(const std::string& key) const { return index_.at(key); }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> keys_;
};

struct SiteRegistry {
  Indexer ids;
  std::vector<Coord> coords;

  std::size_t add(const std::string& id, Coord at, std::size_t row) {
    const std::size_t before = ids.size();
    const std::size_t idx = ids.add(id);
    if (idx == before) {
      coords.push_back(at);
    } else if (coords[idx].x != at.x || coords[idx].y != at.y) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": site '" + id +
                                             "' has coordinates inconsistent with an earlier row");
    }
    return idx;
  }

  SiteSet build() const {
    std::vector<Site> sites;
    for (std::size_t i = 0; i < ids.size(); ++i) sites.push_back({ids.keys()[i], coords[i]});
    return SiteSet(std::move(sites));
  }
};

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want) {
  if (got.size() < want.size() || !std::equal(want.begin(), want.end(), got.begin())) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    throw Error(ErrorKind::ParseError, "row 1: header must start with " + joined);
  }
}

struct Record {
  std::string time;
  std::size_t site;
  std::size_t variable;
  double value;
  std::size_t row;
};

STDataTensor assemble(const std::vector<Record>& records, const SiteRegistry& sites,
                      const std::vector<std::string>& variables,
                      const std::vector<std::string>& time_labels) {
  const std::vector<std::string> times = order_times(time_labels);
  std::unordered_map<std::string, std::size_t> time_index;
  for (std::size_t t = 0; t < times.size(); ++t) time_index.emplace(times[t], t);

  const std::size_t T = times.size();
  const std::size_t n = sites.ids.size();
  const std::size_t p = variables.size();
  Slices slices(T, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)));
  std::vector<std::size_t> filled_by(T * n * p, 0);
  for (const auto& r : records) {
    const std::size_t t = time_index.at(r.time);
    const std::size_t cell = (t * n + r.site) * p + r.variable;
    if (filled_by[cell] != 0) {
      throw Error(ErrorKind::DuplicateRecord,
                  "row " + std::to_string(r.row) + " repeats (time '" + r.time + "', site '" +
                      sites.ids.keys()[r.site] + "', variable '" + variables[r.variable] +
                      "') first given on row " + std::to_string(filled_by[cell]));
    }
    filled_by[cell] = r.row;
    slices[t](static_cast<Eigen::Index>(r.site), static_cast<Eigen::Index>(r.variable)) = r.value;
  }
  for (std::size_t cell = 0; cell < filled_by.size(); ++cell) {
    if (filled_by[cell] == 0) {
      const std::size_t v = cell % p;
      const std::size_t s = (cell / p) % n;
      const std::size_t t = cell / (n * p);
      throw Error(ErrorKind::IncompleteGrid, "no value for (time '" + times[t] + "', site '" +
                                                 sites.ids.keys()[s] + "', variable '" +
                                                 variables[v] + "')");
    }
  }
  return STDataTensor(std::move(slices), sites.build(), variables, times);
}

}  // namespace

STDataTensor read_csv(std::istream& in, CsvLayout layout) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "row 1: empty file");
  const auto header = split_csv(line);

  SiteRegistry sites;
  Indexer variables;
  Indexer times;
  std::vector<Record> records;

  if (layout == CsvLayout::Long) {
    expect_header(header, {"time", "site_id", "x", "y", "variable", "value"});
    if (header.size() != 6) {
      throw Error(ErrorKind::ParseError, "row 1: long layout has exactly six columns");
    }
  } else {
    expect_header(header, {"time", "site_id", "x", "y"});
    if (header.size() < 5) throw Error(ErrorKind::ParseError, "row 1: no variable columns");
    for (std::size_t c = 4; c < header.size(); ++c) {
      if (variables.add(header[c]) != c - 4) {
        throw Error(ErrorKind::ParseError, "row 1: duplicate variable column '" + header[c] + "'");
      }
    }
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty()) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": empty time or site_id");
    }
    const Coord at{parse_number(f[2], row, "x"), parse_number(f[3], row, "y")};
    const std::size_t site = sites.add(f[1], at, row);
    times.add(f[0]);
    if (layout == CsvLayout::Long) {
      if (f[4].empty()) {
        throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": empty variable");
      }
      records.push_back({f[0], site, variables.add(f[4]), parse_number(f[5], row, "value"), row});
    } else {
      for (std::size_t c = 4; c < f.size(); ++c) {
        records.push_back({f[0], site, c - 4, parse_number(f[c], row, header[c].c_str()), row});
      }
    }
  }
  if (records.empty()) throw Error(ErrorKind::IncompleteGrid, "file has no data rows");
  return assemble(records, sites, variables.keys(), times.keys());
}

STDataTensor load_csv(const std::filesystem::path& path, CsvLayout layout) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_csv(in, layout);
}

void write_long_csv(std::ostream& out, const STDataTensor& data) {
  out << "time,site_id,x,y,variable,value\n";
  out.precision(17);
  for (std::size_t t = 0; t < data.T(); ++t) {
    for (std::size_t i = 0; i < data.n(); ++i) {
      const Site& s = data.sites()[i];
      for (std::size_t j = 0; j < data.p(); ++j) {
        out << data.times()[t] << ',' << s.id << ',' << s.at.x << ',' << s.at.y << ','
            << data.variables()[j] << ','
            << data[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
      }
    }
  }
}

void write_long_csv(const std::filesystem::path& path, const STDataTensor& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_long_csv(out, data);
}

SiteSet read_sites_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "row 1: empty file");
  expect_header(split_csv(line), {"site_id", "x", "y"});
  std::vector<Site> sites;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 3) throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": expected 3 fields");
    sites.push_back({f[0], {parse_number(f[1], row, "x"), parse_number(f[2], row, "y")}});
  }
  return SiteSet(std::move(sites));
}

SiteSet load_sites_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_sites_csv(in);
}

void write_sites_csv(std::ostream& out, const SiteSet& sites) {
  out << "site_id,x,y\n";
  out.precision(17);
  for (const auto& s : sites.sites()) out << s.id << ',' << s.at.x << ',' << s.at.y << '\n';
}

STDataTensor deseasonalize_monthly(const STDataTensor& data, std::size_t period) {
  if (period == 0) throw Error(ErrorKind::InvalidArgument, "period must be positive");
  if (data.T() <= period) {
    throw Error(ErrorKind::SeriesTooShort, "T = " + std::to_string(data.T()) +
                                               " is not longer than period " +
                                               std::to_string(period));
  }
  Slices out;
  out.reserve(data.T() - period);
  for (std::size_t t = 0; t + period < data.T(); ++t) out.push_back(data[t + period] - data[t]);
  std::vector<std::string> times(data.times().begin() + static_cast<std::ptrdiff_t>(period),
                                 data.times().end());
  return STDataTensor(std::move(out), data.sites(), data.variables(), std::move(times));
}

std::pair<STDataTensor, ScalingParams> standardize(const STDataTensor& data) {
  if (data.T() < 2) throw Error(ErrorKind::SeriesTooShort, "standardize needs T >= 2");
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  const double T = static_cast<double>(data.T());

  ScalingParams params{Matrix::Zero(n, p), Matrix::Zero(n, p)};
  for (const auto& y : data.slices()) params.mean += y;
  params.mean /= T;
  for (const auto& y : data.slices()) params.sd.array() += (y - params.mean).array().square();
  params.sd = (params.sd / (T - 1.0)).cwiseSqrt();

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double sd = params.sd(i, j);
      if (!(sd > 1e-12 * std::max(1.0, std::abs(params.mean(i, j))))) {
        throw Error(ErrorKind::DegenerateSeries,
                    "series (site '" + data.sites()[static_cast<std::size_t>(i)].id +
                        "', variable '" + data.variables()[static_cast<std::size_t>(j)] +
                        "') has zero variance");
      }
    }
  }

  Slices out;
  out.reserve(data.T());
  for (const auto& y : data.slices()) {
    out.push_back(((y - params.mean).array() / params.sd.array()).matrix());
  }
  return {data.with_slices(std::move(out)), std::move(params)};
}

STDataTensor ScalingParams::invert(const STDataTensor& standardized) const {
  if (standardized.n() != static_cast<std::size_t>(mean.rows()) ||
      standardized.p() != static_cast<std::size_t>(mean.cols())) {
    throw Error(ErrorKind::ShapeError, "scaling parameters do not match tensor shape");
  }
  Slices out;
  out.reserve(standardized.T());
  for (const auto& z : standardized.slices()) {
    out.push_back((z.array() * sd.array() + mean.array()).matrix());
  }
  return standardized.with_slices(std::move(out));
}

std::pair<STDataTensor, CoefficientField> remove_covariate_mean(const STDataTensor& data,
                                                                const Slices& covariates) {
  if (covariates.size() != data.T()) {
    throw Error(ErrorKind::ShapeError, "covariates have " + std::to_string(covariates.size()) +
                                           " time points, data has " + std::to_string(data.T()));
  }
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  const auto T = static_cast<Eigen::Index>(data.T());
  const Eigen::Index m = covariates.empty() ? 0 : covariates[0].cols();
  for (const auto& z : covariates) {
    if (z.rows() != n || z.cols() != m) {
      throw Error(ErrorKind::ShapeError, "covariate slices must all be n x m");
    }
  }
  if (m == 0) throw Error(ErrorKind::ShapeError, "at least one covariate is required");

  CoefficientField field;
  field.coef.resize(static_cast<std::size_t>(n));
  Slices residuals(data.slices());

  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix design(T, m);
    Matrix target(T, p);
    for (Eigen::Index t = 0; t < T; ++t) {
      design.row(t) = covariates[static_cast<std::size_t>(t)].row(i);
      target.row(t) = data[static_cast<std::size_t>(t)].row(i);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (T < m || qr.rank() < m) {
      throw Error(ErrorKind::SingularDesign,
                  "covariates at site '" + data.sites()[static_cast<std::size_t>(i)].id +
                      "' do not have full column rank");
    }
    Matrix coef = qr.solve(target);
    const Matrix resid = target - design * coef;
    for (Eigen::Index t = 0; t < T; ++t) residuals[static_cast<std::size_t>(t)].row(i) = resid.row(t);
    field.coef[static_cast<std::size_t>(i)] = std::move(coef);
  }
  return {data.with_slices(std::move(residuals)), std::move(field)};
}

}  // namespace stfm
