#pragma once

#include <array>
#include <string>
#include <string_view>

namespace moco {

enum class Norm { Linf, L2, L1 };

inline constexpr std::array<Norm, 3> kAllNorms{Norm::Linf, Norm::L2, Norm::L1};

std::string_view norm_name(Norm norm);
Norm parse_norm(std::string_view text);

/// Feasible perturbation set { d : ||d||_p <= epsilon }. A zero radius is
/// accepted as the degenerate ball.
struct Budget {
  Budget(Norm norm, double epsilon);

  Norm norm;
  double epsilon;
};

}  // namespace moco
