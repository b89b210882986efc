#pragma once

#include <stdexcept>
#include <string>

namespace appeval {

/// Base for every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: missing column, unparsable field, dangling reference, duplicate id.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Detection-function fitting failed (too few observations, non-convergence).
class FitError : public Error {
 public:
  using Error::Error;
};

/// Density estimation could not be carried out (no detections, unstable bootstrap).
class EstimateError : public Error {
 public:
  using Error::Error;
};

/// Triangulation failure: too few views or degenerate camera geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Head keypoints do not span a frame.
class DegenerateFrameError : public Error {
 public:
  using Error::Error;
};

/// Metric is undefined for the given input (no positives, no matched pairs).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Bad command line or configuration. The CLI maps this to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace appeval
