#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace linforms {

using BigInt = mpz_class;
using Rational = mpq_class;
using Complex = std::complex<double>;
using IntVector = std::vector<BigInt>;

// e(theta) = exp(2 pi i theta)
inline Complex expi(double theta) {
  const double a = 2.0 * std::numbers::pi * theta;
  return {std::cos(a), std::sin(a)};
}

inline double frac(double x) { return x - std::floor(x); }

// Distance from x to the nearest integer.
inline double circle_dist(double x) { return std::abs(x - std::nearbyint(x)); }

// Neumaier-compensated accumulator.
template <class T>
class KahanSum {
 public:
  void add(T x) {
    T t = sum_ + x;
    if (magnitude(sum_) >= magnitude(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const KahanSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  T value() const { return sum_ + comp_; }

 private:
  static double magnitude(double x) { return std::abs(x); }
  static double magnitude(const Complex& z) {
    return std::abs(z.real()) + std::abs(z.imag());
  }
  T sum_{};
  T comp_{};
};

// Checked narrowing of an exact integer.
std::int64_t to_int64(const BigInt& x);

}  // namespace linforms
