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

#include "qrobust/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <mutex>
#include <queue>
#include <thread>

namespace qrobust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  double lb;
  std::int64_t seq;
  Box box;
};

struct WorseFirst {
  bool operator()(const Node& a, const Node& b) const {
    return a.lb != b.lb ? a.lb > b.lb : a.seq > b.seq;
  }
};

struct BnbState {
  std::mutex mu;
  std::condition_variable cv;
  std::priority_queue<Node, std::vector<Node>, WorseFirst> open;
  std::int64_t seq = 0;
  int active = 0;
  bool done = false;
  bool budget_hit = false;
  std::int64_t splits = 0;
  double upper = kInf;
  Eigen::VectorXd witness;
  double settled = kInf;  // min lower bound over discarded or unresolved boxes
  bool unresolved = false;
};

bool tiny(const CompiledFormula& cf, const Box& box, double precision) {
  for (int v : cf.branch_vars()) {
    if (box[v].width() >= precision) return false;
  }
  return true;
}

void bnb_worker(const CompiledFormula& cf, const SolverConfig& cfg, double tol, BnbState& st) {
  Contractor c(cf);
  Prober p(cf);
  for (;;) {
    Box box;
    double cap = kInf;
    {
      std::unique_lock lock(st.mu);
      for (;;) {
        // Everything left is within tolerance of the incumbent.
        if (!st.open.empty() && st.open.top().lb >= st.upper - tol) {
          st.settled = std::min(st.settled, st.open.top().lb);
          st.open = {};
        }
        if (st.done || (st.open.empty() && st.active == 0)) {
          st.done = true;
          st.cv.notify_all();
          return;
        }
        if (!st.open.empty()) break;
        st.cv.wait(lock);
      }
      box = st.open.top().box;
      st.open.pop();
      cap = st.upper;
      ++st.active;
    }

    std::optional<Split> split;
    std::optional<Prober::Probe> hit;
    double lb = kInf;
    bool alive = c.contract(box, cap);
    bool unresolved = false;
    if (alive) {
      lb = c.objective().lo;
      const double slack = tiny(cf, box, cfg.precision) ? cfg.precision : 0.0;
      hit = p.probe(box, slack);
      const double best = hit ? std::min(cap, hit->objective) : cap;
      if (lb < best - tol) {
        split = split_box(cf, c, box, cfg.branching, best);
        if (!split) unresolved = true;
      }
    }

    std::lock_guard lock(st.mu);
    --st.active;
    if (hit && hit->objective < st.upper) {
      st.upper = hit->objective;
      st.witness = hit->point;
    }
    if (alive && !split) st.settled = std::min(st.settled, lb);
    if (unresolved) st.unresolved = true;
    if (split && !st.done) {
      if (st.splits >= cfg.max_splits) {
        st.budget_hit = true;
        st.done = true;
        st.settled = std::min(st.settled, lb);
      } else {
        ++st.splits;
        // A dead half has no solution; an alive half keeps its parent's
        // bound until it is processed.
        if (split->lower_alive) st.open.push({lb, st.seq++, std::move(split->lower)});
        if (split->upper_alive) st.open.push({lb, st.seq++, std::move(split->upper)});
      }
    }
    st.cv.notify_all();
  }
}

}  // namespace

bool OptResult::infeasible() const { return std::isinf(lower) && lower > 0.0; }

OptResult minimize(const OptProblem& problem, const SolverConfig& config, double tolerance) {
  config.validate();
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  CompiledFormula cf(problem.constraints, &problem.objective);

  BnbState st;
  st.open.push({-kInf, st.seq++, cf.domain()});
  const int workers = config.deterministic ? 1 : config.workers;
  if (workers == 1) {
    bnb_worker(cf, config, tolerance, st);
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back([&] { bnb_worker(cf, config, tolerance, st); });
    }
  }

  OptResult r;
  r.splits_used = st.splits;
  double lower = st.settled;
  while (!st.open.empty()) {
    lower = std::min(lower, st.open.top().lb);
    st.open.pop();
  }
  r.upper = st.upper;
  r.lower = std::min(lower, st.upper);
  r.witness = st.witness;
  r.converged = !st.budget_hit && (std::isinf(r.upper) || r.upper - r.lower <= tolerance);
  return r;
}

namespace {

// The problems minimize -q for q in [0, q_max].
Estimate to_estimate(const OptResult& r, double q_max) {
  Estimate e;
  e.splits_used = r.splits_used;
  e.converged = r.converged;
  e.witness = r.witness;
  if (r.infeasible()) return e;  // nothing feasible: zero enclosure
  e.lower = std::isinf(r.upper) ? 0.0 : std::max(0.0, -r.upper);
  e.upper = std::min(q_max, -r.lower);
  return e;
}

}  // namespace

Estimate estimate_eps_local(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0,
                            double delta, const SolverConfig& config, double tolerance) {
  const OptProblem prob = opt_local_eps(net, p0, x0, delta);
  return to_estimate(minimize(prob, config, tolerance), prob.objective_range.hi);
}

Estimate estimate_eps_global(const Network& net, const ParamVector& p0, const Box& domain,
                             double delta, const SolverConfig& config, double tolerance) {
  const OptProblem prob = opt_global_eps(net, p0, domain, delta);
  return to_estimate(minimize(prob, config, tolerance), prob.objective_range.hi);
}

Estimate estimate_sigma(const Network& net, const ParamVector& p0, const Box& domain,
                        double delta, Side side, const SolverConfig& config, double tolerance) {
  const OptProblem prob = opt_sigma(net, p0, domain, delta, side);
  return to_estimate(minimize(prob, config, tolerance), prob.objective_range.hi);
}

}  // namespace qrobust
