#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's geometry or model code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

using Point = std::vector<double>;

inline double lp_norm(const Point& v, int p) {
  double acc = 0.0;
  for (double x : v) {
    if (p == 0) acc = std::max(acc, std::abs(x));
    else if (p == 1) acc += std::abs(x);
    else acc += x * x;
  }
  return p == 2 ? std::sqrt(acc) : acc;
}

inline double euclid(const Point& a, const Point& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

// Unit direction from hyperspherical angles (dim - 1 of them).
inline Point direction(const std::vector<double>& angles) {
  const std::size_t dim = angles.size() + 1;
  Point u(dim, 1.0);
  double sin_prod = 1.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    u[i] = sin_prod * std::cos(angles[i]);
    sin_prod *= std::sin(angles[i]);
  }
  u[dim - 1] = sin_prod;
  return u;
}

// Radial grid-and-refine search over the boundary of the p-ball.
inline double sphere_search_distance(const Point& v, int p, double eps) {
  const std::size_t k = v.size() - 1;
  const double pi = std::acos(-1.0);
  auto dist = [&](const std::vector<double>& a) {
    const Point u = direction(a);
    const double s = eps / lp_norm(u, p);
    Point q(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) q[i] = s * u[i];
    return euclid(v, q);
  };

  // Angles 0..k-2 range over [0, pi], the last over [0, 2 pi).
  const int grid = k == 1 ? 3600 : (k == 2 ? 240 : 64);
  struct Start {
    double d;
    std::vector<double> a;
  };
  std::vector<Start> starts;
  std::vector<int> idx(k, 0);
  for (;;) {
    std::vector<double> a(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double span = i + 1 == k ? 2.0 * pi : pi;
      a[i] = span * (idx[i] + (i + 1 == k ? 0.0 : 0.5)) / grid;
    }
    starts.push_back({dist(a), a});
    std::size_t c = 0;
    while (c < k && ++idx[c] == grid) idx[c++] = 0;
    if (c == k) break;
  }
  std::partial_sort(starts.begin(), starts.begin() + 4, starts.end(),
                    [](const Start& x, const Start& y) { return x.d < y.d; });

  std::vector<std::vector<int>> moves;
  std::vector<int> m(k, -1);
  for (;;) {
    if (std::any_of(m.begin(), m.end(), [](int s) { return s != 0; })) moves.push_back(m);
    std::size_t c = 0;
    while (c < k && ++m[c] == 2) m[c++] = -1;
    if (c == k) break;
  }

  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 4; ++s) {
    std::vector<double> a = starts[s].a;
    double d = starts[s].d;
    double h = 2.0 * pi / grid;
    while (h > 1e-13) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (const auto& mv : moves) {
          std::vector<double> b = a;
          for (std::size_t i = 0; i < k; ++i) b[i] += h * mv[i];
          const double db = dist(b);
          if (db < d) {
            d = db;
            a = std::move(b);
            moved = true;
          }
        }
      }
      h *= 0.5;
    }
    best = std::min(best, d);
  }
  return best;
}

// Polytope balls (p = 0 or 1): enumerate every face by a pattern in
// {-1, 0, +1}^n, solve the nearest-point problem on that face's affine hull in
// closed form and keep the best candidate that lies in the ball. The nearest
// point sits in the relative interior of some face, so the minimum is exact.
inline double polytope_distance(const Point& v, int p, double eps) {
  const std::size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> s(n, -1);
  for (;;) {
    Point u(n);
    bool ok = true;
    if (p == 0) {
      // s_i = +-1 pins u_i to +-eps; s_i = 0 leaves u_i = v_i, which must fit.
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = s[i] == 0 ? v[i] : s[i] * eps;
        ok = ok && std::abs(u[i]) <= eps;
      }
    } else {
      // Support {s_i != 0} with sum s_i u_i = eps: u_i = v_i - lambda s_i.
      double support = 0.0, proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        support += s[i] != 0;
        proj += s[i] * v[i];
      }
      ok = support > 0;
      const double lambda = ok ? (proj - eps) / support : 0.0;
      for (std::size_t i = 0; ok && i < n; ++i) {
        u[i] = s[i] == 0 ? 0.0 : v[i] - lambda * s[i];
        ok = s[i] * u[i] >= 0.0;
      }
    }
    if (ok) best = std::min(best, euclid(v, u));
    std::size_t c = 0;
    while (c < n && ++s[c] == 2) s[c++] = -1;
    if (c == n) break;
  }
  return best;
}

// Smallest Euclidean distance from v to the ball {u : ||u||_p <= eps}, p in
// {0 (= inf), 1, 2}, for dim 2..4. Polytope balls use face enumeration. The
// l2 boundary is swept radially: a coarse angle grid picks starting points,
// then a pattern search over all 3^k - 1 sign directions shrinks the step to
// 1e-13.
inline double ball_distance(const Point& v, int p, double eps) {
  if (lp_norm(v, p) <= eps) return 0.0;
  if (p != 2) return polytope_distance(v, p, eps);
  return sphere_search_distance(v, p, eps);
}
// Softmax and cross-entropy in long double, written out directly.
inline std::vector<long double> softmax(const std::vector<double>& logits) {
  long double mx = logits[0];
  for (double z : logits) mx = std::max<long double>(mx, z);
  long double sum = 0.0L;
  std::vector<long double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) sum += p[i] = std::exp(static_cast<long double>(logits[i]) - mx);
  for (auto& x : p) x /= sum;
  return p;
}

inline double cross_entropy(const std::vector<double>& logits, std::size_t label) {
  return static_cast<double>(-std::log(softmax(logits)[label]));
}

// Bias-corrected Adam on a scalar, iterated by hand.
inline double adam_scalar(double param, const std::vector<double>& grads, double lr = 0.01, double b1 = 0.9,
                          double b2 = 0.999, double eps = 1e-8) {
  double m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(b2, static_cast<double>(t)));
    param -= lr * mh / (std::sqrt(vh) + eps);
  }
  return param;
}

// Quadratic Bezier point by de Casteljau, a different evaluation order from
// the Bernstein form.
inline Point de_casteljau(const Point& d1, const Point& c, const Point& d2, double t) {
  Point out(d1.size());
  for (std::size_t i = 0; i < d1.size(); ++i) {
    const double a = d1[i] + t * (c[i] - d1[i]);
    const double b = c[i] + t * (d2[i] - c[i]);
    out[i] = a + t * (b - a);
  }
  return out;
}

// Sample mean and (n - 1) standard deviation.
inline std::array<double, 2> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace oracle
