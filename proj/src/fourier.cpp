#include "hydrolimit/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hydrolimit {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::size_t FourierSeries::modes() const noexcept {
  return std::max(cos_coeffs.size(), sin_coeffs.size());
}

double FourierSeries::derivative(double x, int order) const {
  double value = order == 0 ? constant : 0.0;
  for (std::size_t m = 1; m <= modes(); ++m) {
    const double a = m <= cos_coeffs.size() ? cos_coeffs[m - 1] : 0.0;
    const double b = m <= sin_coeffs.size() ? sin_coeffs[m - 1] : 0.0;
    if (a == 0.0 && b == 0.0) continue;
    const double k = kTwoPi * static_cast<double>(m);
    const double c = std::cos(k * x);
    const double s = std::sin(k * x);
    // derivatives of (a cos + b sin) cycle with period 4
    const double scale = std::pow(k, order);
    switch (order % 4) {
      case 0: value += scale * (a * c + b * s); break;
      case 1: value += scale * (-a * s + b * c); break;
      case 2: value += scale * (-a * c - b * s); break;
      default: value += scale * (a * s - b * c); break;
    }
  }
  return value;
}

double FourierSeries::average(double a, double b) const {
  if (b == a) return derivative(a, 0);
  double integral = constant * (b - a);
  for (std::size_t m = 1; m <= modes(); ++m) {
    const double ca = m <= cos_coeffs.size() ? cos_coeffs[m - 1] : 0.0;
    const double sb = m <= sin_coeffs.size() ? sin_coeffs[m - 1] : 0.0;
    const double k = kTwoPi * static_cast<double>(m);
    integral += ca * (std::sin(k * b) - std::sin(k * a)) / k;
    integral -= sb * (std::cos(k * b) - std::cos(k * a)) / k;
  }
  return integral / (b - a);
}

double FourierSeries::sup_bound() const noexcept {
  double bound = std::abs(constant);
  for (double a : cos_coeffs) bound += std::abs(a);
  for (double b : sin_coeffs) bound += std::abs(b);
  return bound;
}

FourierSeries cosine_profile(double mean, double amplitude, int mode) {
  FourierSeries f;
  f.constant = mean;
  f.cos_coeffs.assign(static_cast<std::size_t>(mode), 0.0);
  f.cos_coeffs.back() = amplitude;
  return f;
}

}  // namespace hydrolimit
