/* Copyright 2026 The qrobust Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef QROBUST_INTERVAL_HPP_
#define QROBUST_INTERVAL_HPP_

#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>

#include <Eigen/Core>

namespace qrobust {

/// Closed real interval [lo, hi] with outward-rounded arithmetic.
///
/// Every arithmetic and transcendental result is widened outward by at least
/// one ulp, so the true real-valued range of an operation on the operands is
/// always contained in the result. An interval with lo > hi (or NaN bounds)
/// is empty; empty intervals only appear as the result of `intersect`.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  // Implicit so that Eigen can form Scalar(0) and Scalar(1).
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static constexpr Interval entire() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  }

  bool is_empty() const { return !(lo <= hi); }
  double width() const { return hi - lo; }
  double mid() const;
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
  bool is_point() const { return lo == hi; }

  Interval& operator+=(const Interval& o);
  Interval& operator-=(const Interval& o);
  Interval& operator*=(const Interval& o);
  Interval& operator/=(const Interval& o);
};

inline double round_down(double x) {
  return std::nextafter(x, -std::numeric_limits<double>::infinity());
}
inline double round_up(double x) {
  return std::nextafter(x, std::numeric_limits<double>::infinity());
}

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
// Entire line when the divisor contains zero.
Interval operator/(const Interval& a, const Interval& b);

inline bool operator==(const Interval& a, const Interval& b) {
  return a.lo == b.lo && a.hi == b.hi;
}
inline bool operator!=(const Interval& a, const Interval& b) { return !(a == b); }
// Certainly-less ordering; needed by a few Eigen reductions.
inline bool operator<(const Interval& a, const Interval& b) { return a.hi < b.lo; }
inline bool operator>(const Interval& a, const Interval& b) { return b < a; }

Interval abs(const Interval& a);
Interval max(const Interval& a, const Interval& b);
Interval exp(const Interval& a);
Interval sigmoid(const Interval& a);
Interval tanh(const Interval& a);
Interval relu(const Interval& a);

Interval hull(const Interval& a, const Interval& b);
Interval intersect(const Interval& a, const Interval& b);

// Inverse images used by backward contraction; each result encloses the
// preimage of `y` under the corresponding monotone function.
Interval log_preimage(const Interval& y);
Interval logit_preimage(const Interval& y);
Interval atanh_preimage(const Interval& y);

std::ostream& operator<<(std::ostream& os, const Interval& x);

double sigmoid(double z);
inline double relu(double z) { return z > 0.0 ? z : 0.0; }

// Axis-aligned box: one closed interval per variable.
using Box = Eigen::Matrix<Interval, Eigen::Dynamic, 1>;

Box point_box(const Eigen::VectorXd& p);
Eigen::VectorXd midpoint(const Box& box);
Eigen::VectorXd lower(const Box& box);
Eigen::VectorXd upper(const Box& box);
bool contains(const Box& box, const Eigen::VectorXd& p);
bool subset_of(const Box& inner, const Box& outer);
Box hull(const Box& a, const Box& b);
// Empty optional when some coordinate becomes empty.
std::optional<Box> intersect(const Box& a, const Box& b);
Box make_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

}  // namespace qrobust

namespace Eigen {

template <>
struct NumTraits<qrobust::Interval> : GenericNumTraits<double> {
  using Real = qrobust::Interval;
  using NonInteger = qrobust::Interval;
  using Nested = qrobust::Interval;
  using Literal = qrobust::Interval;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 4,
    MulCost = 8
  };
};

}  // namespace Eigen

#endif  // QROBUST_INTERVAL_HPP_
