#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stfm {

enum class ErrorKind {
  // input / data
  IncompleteGrid,
  DuplicateRecord,
  ParseError,
  SeriesTooShort,
  DegenerateSeries,
  ShapeError,
  MissingValue,
  IoError,
  // configuration / arguments
  InvalidArgument,
  ConfigError,
  TooFewSites,
  InvalidPartition,
  RankTooLarge,
  IndexOutOfRange,
  OutOfDomain,
  // numerical
  SingularDesign,
  SingularInput,
  Underdetermined,
  DegenerateSpectrum,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class ErrorClass { Config, Data, Numerical };

/// Coarse grouping used by the CLI to choose an exit code.
ErrorClass classify(ErrorKind kind);

}  // namespace stfm
