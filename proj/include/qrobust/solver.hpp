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

// Delta-complete decision procedure: interval constraint propagation
// (forward-backward contraction on a shared tape) plus branch and prune.

#ifndef QROBUST_SOLVER_HPP_
#define QROBUST_SOLVER_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "qrobust/expr.hpp"
#include "qrobust/interval.hpp"

namespace qrobust {

enum class Branching {
  kLookahead,     // trial-split the highest-smear dimensions, keep the best
  kWidestScaled,  // widest width relative to the initial domain
  kSmear,         // largest gradient-times-width contribution
};

std::string_view to_string(Branching b);
Branching parse_branching(std::string_view s);

struct SolverConfig {
  double precision = 1e-4;
  std::int64_t max_splits = 1'000'000;
  Branching branching = Branching::kSmear;
  bool deterministic = false;  // forces a single worker
  int workers = 1;

  // Throws std::invalid_argument on a non-positive precision, budget or
  // worker count.
  void validate() const;
};

struct Unsat {};
struct DeltaSat {
  Eigen::VectorXd witness;
  Box box;
};
struct Unknown {
  std::string reason;
};
using Verdict = std::variant<Unsat, DeltaSat, Unknown>;

inline bool is_unsat(const Verdict& v) { return std::holds_alternative<Unsat>(v); }
inline bool is_delta_sat(const Verdict& v) { return std::holds_alternative<DeltaSat>(v); }
inline bool is_unknown(const Verdict& v) { return std::holds_alternative<Unknown>(v); }
std::string_view verdict_name(const Verdict& v);

/// A formula (and optionally an objective) lowered to one tape. Every atom
/// becomes a root holding lhs - rhs.
class CompiledFormula {
 public:
  explicit CompiledFormula(const Formula& f, const Expr* objective = nullptr);

  struct AtomRef {
    int root;  // tape node
    Relation rel;
  };
  // A unit equality `v = e` with e free of v and of other defined variables;
  // v is computed from e instead of being searched.
  struct Definition {
    int var;
    int root;  // tape node of e
  };

  const Tape& tape() const { return tape_; }
  const std::vector<std::vector<AtomRef>>& clauses() const { return clauses_; }
  const std::vector<Definition>& definitions() const { return definitions_; }
  // Variables the search splits on (all except defined ones).
  const std::vector<int>& branch_vars() const { return branch_vars_; }
  const Box& domain() const { return domain_; }
  int objective_node() const { return objective_; }  // -1 when absent
  Eigen::Index num_variables() const { return domain_.size(); }

 private:
  Tape tape_;
  std::vector<std::vector<AtomRef>> clauses_;
  std::vector<Definition> definitions_;
  std::vector<int> branch_vars_;
  Box domain_;
  int objective_ = -1;
};

// Values an atom's lhs - rhs may take, relaxed by `slack` (strict relations
// are treated as non-strict).
Interval relation_target(Relation rel, double slack);

/// HC4-style contractor. Forward enclosures are the natural extension
/// intersected with the mean-value form (interval gradients by forward-mode
/// differentiation), which removes most of the dependency between repeated
/// variables on small boxes. Not thread-safe; use one per worker.
class Contractor {
 public:
  explicit Contractor(const CompiledFormula& cf, int max_passes = 8, bool mean_value = true);

  // Narrows `box` in place. Returns false when the box provably holds no
  // solution (with objective <= objective_cap when an objective exists).
  bool contract(Box& box, double objective_cap = std::numeric_limits<double>::infinity());

  // Valid after a successful contract(): every point of the box is a solution.
  bool entailed() const { return entailed_; }
  // Valid after a successful contract(): enclosure of the objective over
  // solutions in the box.
  Interval objective() const { return objective_range_; }

  // Per-variable smear |df/dx_v| * width(x_v), maximized over the atoms and
  // definitions, on `box`. Zero for every variable without mean-value mode.
  std::vector<double> smear(const Box& box);

 private:
  void evaluate(const Box& box);
  bool backward(std::vector<Interval>& vals, std::vector<char>& changed) const;
  bool narrow(std::vector<Interval>& vals, std::vector<char>& changed, int node,
              const Interval& with) const;

  const CompiledFormula& cf_;
  int max_passes_;
  bool mean_value_;
  std::vector<int> dim_of_node_;      // var node -> gradient slot, else -1
  std::vector<Interval> vals_;
  std::vector<Interval> centre_;      // enclosures at the box midpoint
  std::vector<Interval> grad_;        // nodes x dims
  std::vector<Interval> offset_;      // box - midpoint, per dim
  std::vector<Interval> scratch_;
  std::vector<char> changed_;
  std::vector<char> scratch_changed_;
  bool entailed_ = false;
  Interval objective_range_ = Interval::entire();
};

/// Point search inside a box: midpoint, then greedy coordinate moves to box
/// faces driven by constraint violation (and objective when present).
class Prober {
 public:
  explicit Prober(const CompiledFormula& cf);

  struct Probe {
    Eigen::VectorXd point;
    double objective = 0.0;
  };
  // A point satisfying every clause within `slack`, preferring low objective.
  std::optional<Probe> probe(const Box& box, double slack);

  // Fills defined variables; false when one leaves its domain.
  bool complete(Eigen::VectorXd& point);
  // Largest clause violation at a completed point (<= 0 means satisfied).
  double violation(const Eigen::VectorXd& point, double slack);
  double objective_at(const Eigen::VectorXd& point);

 private:
  double score(Eigen::VectorXd& point, double slack, double* objective);

  const CompiledFormula& cf_;
  std::vector<double> vals_;
};

struct Split {
  int var = -1;
  Box lower;
  Box upper;
  bool lower_alive = true;
  bool upper_alive = true;
};

/// Bisects `box` at the midpoint of the coordinate chosen by `rule`.
/// Lookahead contracts both halves (a dead half provably holds no solution);
/// nullopt when no branchable coordinate can be split further.
std::optional<Split> split_box(const CompiledFormula& cf, Contractor& contractor, const Box& box,
                               Branching rule,
                               double objective_cap = std::numeric_limits<double>::infinity());

/// Sub-box of `box` keeping every solution in it; nullopt when the box
/// provably contains none.
std::optional<Box> contract(const Formula& f, const Box& box);

/// Delta-complete decision over the variable domains.
Verdict decide(const Formula& f, const SolverConfig& config = {});

/// True iff every clause has an atom holding at `point` within `slack`.
bool check_point(const Formula& f, const Eigen::VectorXd& point, double slack);

}  // namespace qrobust

#endif  // QROBUST_SOLVER_HPP_
