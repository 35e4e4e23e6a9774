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

#include "qrobust/quantization.hpp"

#include <cfenv>
#include <cmath>
#include <stdexcept>

namespace qrobust {

namespace {

void check_bits(int f) {
  if (f < 0 || f > kMaxFracBits) {
    throw std::invalid_argument("frac_bits must lie in [0, " + std::to_string(kMaxFracBits) + "]");
  }
}

}  // namespace

double quantize_value(double v, int frac_bits) {
  check_bits(frac_bits);
  // nearbyint follows the current mode; pin it to nearest-even.
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double k = std::nearbyint(std::ldexp(v, frac_bits));
  std::fesetround(saved);
  return std::ldexp(k, -frac_bits);
}

double derive_delta(const QuantScheme& scheme) {
  check_bits(scheme.frac_bits);
  return std::ldexp(1.0, -(scheme.frac_bits + 1));
}

QuantReport quantize(const ParamVector& p0, const QuantScheme& scheme) {
  QuantReport r;
  r.quantized = p0;
  r.errors.resize(p0.size());
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    const double q = quantize_value(p0.values[i], scheme.frac_bits);
    r.quantized.values[i] = q;
    r.errors[i] = std::abs(q - p0.values[i]);
  }
  r.max_error = p0.size() > 0 ? r.errors.maxCoeff() : 0.0;
  r.delta_bound = derive_delta(scheme);
  return r;
}

QuantVerification verify_quantized(const RobustnessQuery& query_template,
                                   const QuantScheme& scheme, const SolverConfig& config) {
  RobustnessQuery q = query_template;
  q.delta = derive_delta(scheme);
  QuantReport report = quantize(q.p0, scheme);
  Verdict box = decide(encode(q), config);
  Verdict point = decide(encode(q, point_box(report.quantized.values)), config);
  return {std::move(report), std::move(box), std::move(point)};
}

SafeBitsResult safe_bits_search(const RobustnessQuery& query_template,
                                const SolverConfig& config) {
  SafeBitsResult out;
  auto verifies = [&](int f) {
    RobustnessQuery q = query_template;
    q.delta = derive_delta(QuantScheme{f});
    Verdict v = decide(encode(q), config);
    const bool ok = is_unsat(v);
    out.trail.emplace_back(f, std::move(v));
    return ok;
  };
  if (!verifies(kMaxFracBits)) return out;
  int lo = -1;  // largest f known (or assumed) not to verify
  int hi = kMaxFracBits;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (verifies(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.frac_bits = hi;
  return out;
}

}  // namespace qrobust
