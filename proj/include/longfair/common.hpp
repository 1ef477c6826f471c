#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace longfair {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base class for all structured errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Thrown when an exact enumeration would exceed the configured work cap.
class EnumerationCapError : public Error {
 public:
  explicit EnumerationCapError(const std::string& msg) : Error(msg) {}
};

class NumericsError : public Error {
 public:
  explicit NumericsError(const std::string& msg) : Error(msg) {}
};

// Kahan compensated accumulator. Loss reductions use it so results do not
// depend on how work is batched.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Axis-aligned bounding box. Sensitivity estimation clips samples into one of
// these so the ground-distance diameter m is finite.
struct ClipBox {
  Vec lo;
  Vec hi;

  bool valid() const {
    if (lo.size() != hi.size() || lo.size() == 0) return false;
    return (hi.array() >= lo.array()).all();
  }
  // Euclidean diameter, the maximum ground distance between two points.
  double diameter() const { return (hi - lo).norm(); }
  Vec clip(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
};

}  // namespace longfair
