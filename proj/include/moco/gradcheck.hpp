#pragma once

#include <functional>

#include "moco/vector.hpp"

namespace moco {

using ScalarFunction = std::function<double(const Vector&)>;

/// Central differences: g_i = (f(x + h e_i) - f(x - h e_i)) / 2h.
/// Throws FormatError if f returns a non-finite value.
Vector finite_diff_grad(const ScalarFunction& f, const Vector& x, double h);

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|); 0 when both are zero.
double max_relative_error(const Vector& a, const Vector& b);

}  // namespace moco
