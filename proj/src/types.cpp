#include "stfm/types.hpp"

#include "stfm/error.hpp"

#include <cmath>
#include <unordered_set>

namespace stfm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IncompleteGrid: return "IncompleteGrid";
    case ErrorKind::DuplicateRecord: return "DuplicateRecord";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::TooFewSites: return "TooFewSites";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::RankTooLarge: return "RankTooLarge";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::SingularInput: return "SingularInput";
    case ErrorKind::Underdetermined: return "Underdetermined";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
  }
  return "Unknown";
}

ErrorClass classify(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IncompleteGrid:
    case ErrorKind::DuplicateRecord:
    case ErrorKind::ParseError:
    case ErrorKind::SeriesTooShort:
    case ErrorKind::DegenerateSeries:
    case ErrorKind::ShapeError:
    case ErrorKind::MissingValue:
    case ErrorKind::IoError:
      return ErrorClass::Data;
    case ErrorKind::InvalidArgument:
    case ErrorKind::ConfigError:
    case ErrorKind::TooFewSites:
    case ErrorKind::InvalidPartition:
    case ErrorKind::RankTooLarge:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::OutOfDomain:
      return ErrorClass::Config;
    case ErrorKind::SingularDesign:
    case ErrorKind::SingularInput:
    case ErrorKind::Underdetermined:
    case ErrorKind::DegenerateSpectrum:
      return ErrorClass::Numerical;
  }
  return ErrorClass::Numerical;
}

SiteSet::SiteSet(std::vector<Site> sites) : sites_(std::move(sites)) {
  std::unordered_set<std::string> seen;
  for (const auto& s : sites_) {
    if (!seen.insert(s.id).second) {
      throw Error(ErrorKind::DuplicateRecord, "site id '" + s.id + "' appears twice");
    }
  }
}

SiteSet SiteSet::from_coords(const std::vector<Coord>& coords, const std::string& prefix) {
  std::vector<Site> sites;
  sites.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    sites.push_back({prefix + std::to_string(i), coords[i]});
  }
  return SiteSet(std::move(sites));
}

std::vector<Coord> SiteSet::coords() const {
  std::vector<Coord> out;
  out.reserve(sites_.size());
  for (const auto& s : sites_) out.push_back(s.at);
  return out;
}

STDataTensor::STDataTensor(Slices slices, SiteSet sites, std::vector<std::string> variables,
                           std::vector<std::string> times)
    : slices_(std::move(slices)),
      sites_(std::move(sites)),
      variables_(std::move(variables)),
      times_(std::move(times)) {
  validate();
}

STDataTensor STDataTensor::from_slices(Slices slices, SiteSet sites) {
  const std::size_t p = slices.empty() ? 0 : static_cast<std::size_t>(slices[0].cols());
  std::vector<std::string> vars;
  for (std::size_t j = 0; j < p; ++j) vars.push_back("v" + std::to_string(j));
  std::vector<std::string> times;
  for (std::size_t t = 0; t < slices.size(); ++t) times.push_back(std::to_string(t));
  return STDataTensor(std::move(slices), std::move(sites), std::move(vars), std::move(times));
}

Vector STDataTensor::series(std::size_t site, std::size_t variable) const {
  Vector out(static_cast<Eigen::Index>(T()));
  for (std::size_t t = 0; t < T(); ++t) {
    out(static_cast<Eigen::Index>(t)) =
        slices_[t](static_cast<Eigen::Index>(site), static_cast<Eigen::Index>(variable));
  }
  return out;
}

STDataTensor STDataTensor::with_slices(Slices slices) const {
  if (slices.size() != times_.size()) {
    throw Error(ErrorKind::ShapeError, "expected " + std::to_string(times_.size()) +
                                           " slices, got " + std::to_string(slices.size()));
  }
  return STDataTensor(std::move(slices), sites_, variables_, times_);
}

void STDataTensor::validate() const {
  if (times_.size() != slices_.size()) {
    throw Error(ErrorKind::ShapeError, "time labels (" + std::to_string(times_.size()) +
                                           ") do not match slice count (" +
                                           std::to_string(slices_.size()) + ")");
  }
  for (std::size_t t = 0; t < slices_.size(); ++t) {
    const auto& y = slices_[t];
    if (static_cast<std::size_t>(y.rows()) != sites_.size() ||
        static_cast<std::size_t>(y.cols()) != variables_.size()) {
      throw Error(ErrorKind::ShapeError,
                  "slice " + std::to_string(t) + " is " + std::to_string(y.rows()) + "x" +
                      std::to_string(y.cols()) + ", expected " + std::to_string(sites_.size()) +
                      "x" + std::to_string(variables_.size()));
    }
    if (!y.allFinite()) {
      throw Error(ErrorKind::MissingValue, "slice " + std::to_string(t) + " has non-finite entries");
    }
  }
}

}  // namespace stfm
