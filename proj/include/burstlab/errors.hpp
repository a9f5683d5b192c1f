#pragma once

#include <stdexcept>
#include <string>

namespace burstlab {

/// Base class for all burstlab errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mismatched channel counts or grid sizes between operands.
struct ShapeError : Error {
  using Error::Error;
};

/// Dimensions violate a structural requirement (odd size, non-divisible, ...).
struct DimensionError : Error {
  using Error::Error;
};

/// Invalid parameter value (non-positive gamma, bad schedule range, ...).
struct ParamError : Error {
  using Error::Error;
};

/// Unparseable or contract-violating file content.
struct FormatError : Error {
  using Error::Error;
};

/// Numerical failure: divergence, weight overflow, singular matrix.
struct NumericError : Error {
  using Error::Error;
};

/// Registration input has no usable intensity structure.
struct FlatImageError : Error {
  using Error::Error;
};

/// Fusion produced a channel with no observed samples at all.
struct CoverageError : Error {
  using Error::Error;
};

/// Request exceeds the dense-oracle size cap.
struct OracleScaleError : Error {
  using Error::Error;
};

}  // namespace burstlab
