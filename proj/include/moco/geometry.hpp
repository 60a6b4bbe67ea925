#pragma once

#include "moco/budget.hpp"
#include "moco/vector.hpp"

namespace moco {

double norm_p(const Vector& v, Norm norm);

/// Euclidean projection onto the budget ball. Identity for feasible inputs.
Vector project(const Vector& v, const Budget& budget);

/// grad^T J, where J is the Jacobian of project() at v. Identity inside the
/// ball; outside it drops the directions the projection cannot move along.
Vector project_vjp(const Vector& v, const Vector& grad, const Budget& budget);

Vector project_linf(const Vector& v, double epsilon);
Vector project_l2(const Vector& v, double epsilon);
/// Sort-and-threshold projection onto the l1 ball.
Vector project_l1(const Vector& v, double epsilon);

bool within_budget(const Vector& v, const Budget& budget, double rel_tol = 1e-9);

Vector clip_box(const Vector& v, double lo = 0.0, double hi = 1.0);

/// clip_box(x + delta) into [0, 1]; the input a deployed classifier sees.
Vector perturbed_input(const Vector& x, const Vector& delta);

/// Zeroes ascent-gradient coordinates that push an input already at the
/// [0, 1] boundary further outward.
void mask_box_blocked(Vector& ascent_grad, const Vector& input);

}  // namespace moco
