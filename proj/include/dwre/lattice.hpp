#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwre {

inline constexpr std::size_t kMaxDimension = 8;

// Coordinates must satisfy |z_i| < 2^31 so that site keys pack injectively.
inline constexpr std::int64_t kCoordinateLimit = std::int64_t{1} << 31;

class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point of Z^d with d <= kMaxDimension, stored inline.
class LatticeVector {
 public:
  LatticeVector() = default;
  explicit LatticeVector(std::size_t dim) : dim_(static_cast<std::uint8_t>(dim)) {
    if (dim == 0 || dim > kMaxDimension) {
      throw DimensionError("lattice dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
    }
  }
  LatticeVector(std::initializer_list<std::int64_t> coords) : LatticeVector(coords.size()) {
    std::size_t i = 0;
    for (auto c : coords) c_[i++] = c;
  }
  explicit LatticeVector(std::span<const std::int64_t> coords) : LatticeVector(coords.size()) {
    for (std::size_t i = 0; i < coords.size(); ++i) c_[i] = coords[i];
  }

  std::size_t dim() const { return dim_; }
  std::int64_t operator[](std::size_t i) const { return c_[i]; }
  std::int64_t& operator[](std::size_t i) { return c_[i]; }
  std::span<const std::int64_t> coords() const { return {c_.data(), dim_}; }

  bool is_zero() const {
    for (std::size_t i = 0; i < dim_; ++i)
      if (c_[i] != 0) return false;
    return true;
  }

  std::int64_t norm2() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < dim_; ++i) s += c_[i] * c_[i];
    return s;
  }
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }

  std::int64_t dot(const LatticeVector& o) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < dim_; ++i) s += c_[i] * o.c_[i];
    return s;
  }
  double dot(std::span<const double> l) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += static_cast<double>(c_[i]) * l[i];
    return s;
  }

  LatticeVector& operator+=(const LatticeVector& o) {
    for (std::size_t i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  LatticeVector& operator-=(const LatticeVector& o) {
    for (std::size_t i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend LatticeVector operator+(LatticeVector a, const LatticeVector& b) { return a += b; }
  friend LatticeVector operator-(LatticeVector a, const LatticeVector& b) { return a -= b; }
  friend LatticeVector operator*(std::int64_t s, LatticeVector a) {
    for (std::size_t i = 0; i < a.dim_; ++i) a.c_[i] *= s;
    return a;
  }

  friend bool operator==(const LatticeVector& a, const LatticeVector& b) {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

  bool in_coordinate_range() const {
    for (std::size_t i = 0; i < dim_; ++i)
      if (c_[i] <= -kCoordinateLimit || c_[i] >= kCoordinateLimit) return false;
    return true;
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < dim_; ++i) {
      if (i) s += ",";
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

 private:
  std::array<std::int64_t, kMaxDimension> c_{};
  std::uint8_t dim_ = 0;
};

struct LatticeVectorHash {
  std::size_t operator()(const LatticeVector& v) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL ^ v.dim();
    for (std::size_t i = 0; i < v.dim(); ++i) {
      h ^= static_cast<std::uint64_t>(v[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

/// Unit vector in R^d; normalizes on construction.
class Direction {
 public:
  Direction() = default;
  explicit Direction(std::vector<double> v) : v_(std::move(v)) {
    double n = 0.0;
    for (double x : v_) n += x * x;
    n = std::sqrt(n);
    if (v_.empty() || !(n > 0.0)) throw std::invalid_argument("direction must be a nonzero vector");
    for (double& x : v_) x /= n;
  }
  Direction(std::initializer_list<double> v) : Direction(std::vector<double>(v)) {}

  std::size_t dim() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> span() const { return v_; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::vector<double> v_;
};

// Comparison slack for dot products against levels; lattice dots are exact up
// to binary64 rounding of the direction.
inline constexpr double kLevelTolerance = 1e-9;

inline bool reaches_level(double dot, double level) {
  return dot >= level - kLevelTolerance * std::max(1.0, std::abs(level));
}
inline bool strictly_negative(double dot) { return dot < -kLevelTolerance; }

}  // namespace dwre
