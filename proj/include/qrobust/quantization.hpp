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

// Fixed-point parameter quantization and the search for the fewest safe
// fractional bits.

#ifndef QROBUST_QUANTIZATION_HPP_
#define QROBUST_QUANTIZATION_HPP_

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "qrobust/encoder.hpp"
#include "qrobust/solver.hpp"

namespace qrobust {

inline constexpr int kMaxFracBits = 52;

/// Uniform grid {k / 2^frac_bits}, round half to even.
struct QuantScheme {
  int frac_bits = 8;
};

struct QuantReport {
  ParamVector quantized;
  Eigen::VectorXd errors;  // |q_i - p_i|
  double max_error = 0.0;
  double delta_bound = 0.0;
};

QuantReport quantize(const ParamVector& p0, const QuantScheme& scheme);
double quantize_value(double v, int frac_bits);

/// Half-ulp bound 2^-(f+1).
double derive_delta(const QuantScheme& scheme);

struct QuantVerification {
  QuantReport report;
  Verdict box;    // all parameters within derive_delta of p0
  Verdict point;  // the actual quantized parameters
};

/// `query_template.delta` is ignored.
QuantVerification verify_quantized(const RobustnessQuery& query_template,
                                   const QuantScheme& scheme, const SolverConfig& config = {});

struct SafeBitsResult {
  std::optional<int> frac_bits;  // smallest verifying f; empty when none <= kMaxFracBits
  std::vector<std::pair<int, Verdict>> trail;  // box verdicts in probe order
};

/// Binary search over f in [0, kMaxFracBits], relying on verification being
/// monotone in f.
SafeBitsResult safe_bits_search(const RobustnessQuery& query_template,
                                const SolverConfig& config = {});

}  // namespace qrobust

#endif  // QROBUST_QUANTIZATION_HPP_
