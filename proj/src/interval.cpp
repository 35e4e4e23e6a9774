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

#include "qrobust/interval.hpp"

#include <algorithm>
#include <ostream>

namespace qrobust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// NaN lower bounds come from inf - inf; they can only mean "unbounded".
double fix_lo(double v) { return std::isnan(v) ? -kInf : v; }
double fix_hi(double v) { return std::isnan(v) ? kInf : v; }

Interval outward(double lo, double hi) {
  return {round_down(fix_lo(lo)), round_up(fix_hi(hi))};
}

// Library transcendentals are accurate to a couple of ulps; widen by a
// relative margin plus one ulp.
double slack_down(double v) {
  if (std::isinf(v)) return v;
  return round_down(v - 4.0 * kEps * std::abs(v));
}
double slack_up(double v) {
  if (std::isinf(v)) return v;
  return round_up(v + 4.0 * kEps * std::abs(v));
}

// For inverse images near zero the absolute error dominates.
double abs_slack_down(double v) {
  if (std::isinf(v)) return v;
  return round_down(v - 8.0 * kEps * std::max(1.0, std::abs(v)));
}
double abs_slack_up(double v) {
  if (std::isinf(v)) return v;
  return round_up(v + 8.0 * kEps * std::max(1.0, std::abs(v)));
}

// 0 * inf is 0 for bound arithmetic.
double mul_bound(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

}  // namespace

double Interval::mid() const {
  if (std::isinf(lo) || std::isinf(hi)) {
    if (std::isinf(lo) && std::isinf(hi)) return 0.0;
    return std::isinf(lo) ? hi : lo;
  }
  return lo + 0.5 * (hi - lo);
}

Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }
Interval& Interval::operator/=(const Interval& o) { return *this = *this / o; }

Interval operator+(const Interval& a, const Interval& b) {
  return outward(a.lo + b.lo, a.hi + b.hi);
}

Interval operator-(const Interval& a, const Interval& b) {
  return outward(a.lo - b.hi, a.hi - b.lo);
}

Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = mul_bound(a.lo, b.lo);
  const double p2 = mul_bound(a.lo, b.hi);
  const double p3 = mul_bound(a.hi, b.lo);
  const double p4 = mul_bound(a.hi, b.hi);
  return outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains(0.0)) return Interval::entire();
  const double q1 = a.lo / b.lo;
  const double q2 = a.lo / b.hi;
  const double q3 = a.hi / b.lo;
  const double q4 = a.hi / b.hi;
  return outward(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}));
}

Interval abs(const Interval& a) {
  if (a.lo >= 0.0) return a;
  if (a.hi <= 0.0) return -a;
  return {0.0, std::max(-a.lo, a.hi)};
}

Interval max(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
}

Interval relu(const Interval& a) { return max(a, Interval(0.0)); }

Interval exp(const Interval& a) {
  return {std::max(0.0, slack_down(std::exp(a.lo))), slack_up(std::exp(a.hi))};
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Interval sigmoid(const Interval& a) {
  return {std::max(0.0, slack_down(sigmoid(a.lo))),
          std::min(1.0, slack_up(sigmoid(a.hi)))};
}

Interval tanh(const Interval& a) {
  return {std::max(-1.0, slack_down(std::tanh(a.lo))),
          std::min(1.0, slack_up(std::tanh(a.hi)))};
}

Interval hull(const Interval& a, const Interval& b) {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

Interval log_preimage(const Interval& y) {
  const Interval pos = intersect(y, Interval(0.0, kInf));
  if (pos.is_empty()) return pos;
  const double lo = pos.lo <= 0.0 ? -kInf : abs_slack_down(std::log(pos.lo));
  const double hi = std::isinf(pos.hi) ? kInf : abs_slack_up(std::log(pos.hi));
  return {lo, hi};
}

namespace {
double logit(double y) { return std::log(y) - std::log1p(-y); }
}  // namespace

Interval logit_preimage(const Interval& y) {
  const Interval unit = intersect(y, Interval(0.0, 1.0));
  if (unit.is_empty()) return unit;
  const double lo = unit.lo <= 0.0 ? -kInf
                    : unit.lo >= 1.0 ? abs_slack_down(logit(round_down(1.0)))
                                     : abs_slack_down(logit(unit.lo));
  const double hi = unit.hi >= 1.0 ? kInf
                    : unit.hi <= 0.0 ? abs_slack_up(logit(round_up(0.0)))
                                     : abs_slack_up(logit(unit.hi));
  return {lo, hi};
}

Interval atanh_preimage(const Interval& y) {
  const Interval unit = intersect(y, Interval(-1.0, 1.0));
  if (unit.is_empty()) return unit;
  const double lo = unit.lo <= -1.0 ? -kInf : abs_slack_down(std::atanh(unit.lo));
  const double hi = unit.hi >= 1.0 ? kInf : abs_slack_up(std::atanh(unit.hi));
  return {lo, hi};
}

std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo << ", " << x.hi << ']';
}

Box point_box(const Eigen::VectorXd& p) {
  Box b(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) b[i] = Interval(p[i]);
  return b;
}

Eigen::VectorXd midpoint(const Box& box) {
  Eigen::VectorXd m(box.size());
  for (Eigen::Index i = 0; i < box.size(); ++i) m[i] = box[i].mid();
  return m;
}

Eigen::VectorXd lower(const Box& box) {
  Eigen::VectorXd v(box.size());
  for (Eigen::Index i = 0; i < box.size(); ++i) v[i] = box[i].lo;
  return v;
}

Eigen::VectorXd upper(const Box& box) {
  Eigen::VectorXd v(box.size());
  for (Eigen::Index i = 0; i < box.size(); ++i) v[i] = box[i].hi;
  return v;
}

bool contains(const Box& box, const Eigen::VectorXd& p) {
  if (box.size() != p.size()) return false;
  for (Eigen::Index i = 0; i < box.size(); ++i) {
    if (!box[i].contains(p[i])) return false;
  }
  return true;
}

bool subset_of(const Box& inner, const Box& outer) {
  if (inner.size() != outer.size()) return false;
  for (Eigen::Index i = 0; i < inner.size(); ++i) {
    if (!inner[i].subset_of(outer[i])) return false;
  }
  return true;
}

Box hull(const Box& a, const Box& b) {
  Box h(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) h[i] = hull(a[i], b[i]);
  return h;
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  Box r(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    r[i] = intersect(a[i], b[i]);
    if (r[i].is_empty()) return std::nullopt;
  }
  return r;
}

Box make_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Box b(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) b[i] = Interval(lo[i], hi[i]);
  return b;
}

}  // namespace qrobust
