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

// Query configuration files.
//
//   {
//     "kind": "global_eps",          // local_eps | global_eps | local_flip |
//                                    // global_flip | sigma_flip
//     "delta": 0.005,
//     "epsilon": 0.01,               // eps kinds (optional when estimating)
//     "sigma": 0.02,                 // sigma_flip (optional when estimating)
//     "side": "above",               // sigma estimation: above | below | both
//     "x0": [0.0, 0.0],              // local kinds
//     "domain": {"lo": [..], "hi": [..]}
//            or {"dataset": "cats.csv", "features": ["Hwt", "Bwt"], "label": "male"},
//     "model": "cat.json",           // relative to the query file
//     "quant": {"frac_bits": 8},
//     "reference": 0.00691           // optional, echoed next to estimates
//   }

#ifndef QROBUST_QUERY_IO_HPP_
#define QROBUST_QUERY_IO_HPP_

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "qrobust/encoder.hpp"

namespace qrobust {

struct QuerySpec {
  QueryKind kind = QueryKind::kLocalEps;
  double delta = 0.0;
  std::optional<double> epsilon;
  std::optional<double> sigma;
  Side side = Side::kBoth;
  std::optional<Eigen::VectorXd> x0;
  std::optional<Box> domain;
  std::string model;  // resolved against the query file's directory; may be empty
  std::optional<int> frac_bits;
  std::optional<double> reference;  // published value echoed by `estimate`
};

/// `base_dir` resolves relative model and dataset paths.
QuerySpec parse_query(std::string_view json_text, const std::string& base_dir = ".");
QuerySpec load_query(const std::string& path);

/// Verification query; throws std::invalid_argument when fields are missing.
RobustnessQuery to_query(const QuerySpec& spec, const Network& net);

std::string resolve_path(const std::string& base_dir, const std::string& path);

}  // namespace qrobust

#endif  // QROBUST_QUERY_IO_HPP_
