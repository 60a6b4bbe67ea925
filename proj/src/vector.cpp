#include "moco/vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moco/error.hpp"

namespace moco {

void require_same_dim(const Vector& a, const Vector& b, const char* where) {
  if (a.dim() != b.dim()) {
    throw ContractViolation(std::string(where) + ": dimension mismatch (" +
                            std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

bool Vector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(*this, other, "Vector::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dim(*this, other, "Vector::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Vector& Vector::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double scale, Vector v) { return v *= scale; }

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double a, const Vector& x, Vector& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.dim(); ++i) y[i] += a * x[i];
}

double max_abs_diff(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace moco
