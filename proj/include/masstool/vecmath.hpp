#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "masstool/errors.hpp"

namespace masstool {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Training-time math runs in 64-bit;
/// only on-disk formats use 32-bit storage.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }
  std::span<const double> row_span(std::size_t i) const { return {row(i), cols}; }
  Vec row_vec(std::size_t i) const { return Vec(row(i), row(i) + cols); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) raise(Errc::dim_mismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

constexpr double kZeroNormEps = 1e-12;

inline Vec l2_normalize(std::span<const double> x) {
  double n = norm2(x);
  if (n <= kZeroNormEps) raise(Errc::zero_norm, "l2_normalize: norm below 1e-12");
  Vec out(x.begin(), x.end());
  for (double& v : out) v /= n;
  return out;
}

/// Cosine similarity; zero when either vector is (numerically) zero.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  double na = norm2(a), nb = norm2(b);
  if (na <= kZeroNormEps || nb <= kZeroNormEps) return 0.0;
  return dot(a, b) / (na * nb);
}

/// Max-subtraction softmax, stable for any finite input.
inline Vec softmax(std::span<const double> x) {
  Vec out(x.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logsumexp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  double z = 0.0;
  for (double v : x) z += std::exp(v - m);
  return m + std::log(z);
}

}  // namespace masstool
