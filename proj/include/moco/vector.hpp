#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace moco {

/// Dense real vector with a fixed dimension. Carries inputs, perturbations
/// and gradients. Arithmetic between vectors of different dimension throws
/// ContractViolation.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  Vector(std::initializer_list<double> values) : values_(values) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& raw() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale);

  bool operator==(const Vector& other) const = default;

 private:
  std::vector<double> values_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double scale, Vector v);

double dot(const Vector& a, const Vector& b);

// y += a * x
void axpy(double a, const Vector& x, Vector& y);

double max_abs_diff(const Vector& a, const Vector& b);

void require_same_dim(const Vector& a, const Vector& b, const char* where);

}  // namespace moco
