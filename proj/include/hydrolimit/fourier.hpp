#pragma once

#include <cstddef>
#include <vector>

namespace hydrolimit {

/// Real trigonometric polynomial on the unit torus:
///   f(x) = c0 + sum_m a_m cos(2 pi m x) + b_m sin(2 pi m x),  m = 1..modes().
struct FourierSeries {
  double constant = 0.0;
  std::vector<double> cos_coeffs;  // a_1, a_2, ...
  std::vector<double> sin_coeffs;  // b_1, b_2, ...

  [[nodiscard]] std::size_t modes() const noexcept;

  /// d^order f / dx^order at x (order 0 is the value).
  [[nodiscard]] double derivative(double x, int order) const;
  [[nodiscard]] double operator()(double x) const { return derivative(x, 0); }

  /// Exact average of f over [a, b].
  [[nodiscard]] double average(double a, double b) const;

  /// max |f| bound from the coefficients (triangle inequality).
  [[nodiscard]] double sup_bound() const noexcept;

  friend bool operator==(const FourierSeries&, const FourierSeries&) = default;
};

/// c0 + a1 cos(2 pi x)
FourierSeries cosine_profile(double mean, double amplitude, int mode = 1);

}  // namespace hydrolimit
