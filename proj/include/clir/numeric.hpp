#pragma once

#include <cmath>
#include <string>

namespace clir {

/// Default probability floor; stored evidence lives in [kEpsilon, 1 - kEpsilon].
inline constexpr double kEpsilon = 1e-6;

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// log(sigmoid(z)) without overflow.
template <typename Scalar>
Scalar log_sigmoid(Scalar z) {
  if (z >= Scalar(0)) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar clamp_prob(Scalar p, Scalar eps) {
  if (!(p >= eps)) return eps;  // also catches NaN
  if (p > Scalar(1) - eps) return Scalar(1) - eps;
  return p;
}

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Like format_double but always shows a decimal point ("1.0", not "1").
std::string format_decimal(double v);

/// Strict parse of a whole field as a double; throws std::invalid_argument.
double parse_double(const std::string& s);

/// Strict parse of a whole field as a non-negative integer.
std::size_t parse_index(const std::string& s);

}  // namespace clir
