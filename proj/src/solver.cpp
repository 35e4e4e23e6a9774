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

#include "qrobust/solver.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <set>
#include <thread>

namespace qrobust {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Lookahead cost grows with the dimension; beyond this fall back to widest.
constexpr std::size_t kMaxLookaheadDims = 24;
// Lookahead only trial-splits this many dimensions with the largest smear.
constexpr std::size_t kLookaheadShortlist = 3;
}  // namespace

std::string_view to_string(Branching b) {
  switch (b) {
    case Branching::kLookahead: return "lookahead";
    case Branching::kWidestScaled: return "widest";
    case Branching::kSmear: return "smear";
  }
  return "lookahead";
}

Branching parse_branching(std::string_view s) {
  if (s == "lookahead") return Branching::kLookahead;
  if (s == "widest") return Branching::kWidestScaled;
  if (s == "smear") return Branching::kSmear;
  throw std::invalid_argument("unknown branching rule '" + std::string(s) + "'");
}

void SolverConfig::validate() const {
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    throw std::invalid_argument("precision must be positive");
  }
  if (max_splits < 1) throw std::invalid_argument("max_splits must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

std::string_view verdict_name(const Verdict& v) {
  if (is_unsat(v)) return "unsat";
  if (is_delta_sat(v)) return "delta-sat";
  return "unknown";
}

Interval relation_target(Relation rel, double slack) {
  switch (rel) {
    case Relation::kLe:
    case Relation::kLt: return {-kInf, slack};
    case Relation::kGe:
    case Relation::kGt: return {-slack, kInf};
    case Relation::kEq: return {-slack, slack};
  }
  return Interval::entire();
}

// ---------------------------------------------------------------------------
// CompiledFormula

CompiledFormula::CompiledFormula(const Formula& f, const Expr* objective) {
  f.validate();
  domain_ = f.domain_box();

  std::vector<Expr> roots;
  for (const Clause& c : f.clauses()) {
    for (const Atom& a : c) roots.push_back(a.lhs - a.rhs);
  }

  // Candidate definitions first, then keep those independent of each other.
  struct Candidate {
    int var;
    Expr rhs;
  };
  std::vector<Candidate> cands;
  std::set<int> cand_vars;
  for (const Clause& c : f.clauses()) {
    if (c.size() != 1 || c[0].rel != Relation::kEq || !c[0].lhs.is_var()) continue;
    const int v = c[0].lhs.var_id();
    if (cand_vars.count(v)) continue;
    cands.push_back({v, c[0].rhs});
    cand_vars.insert(v);
  }
  std::vector<Candidate> defs;
  for (const Candidate& c : cands) {
    const std::vector<int> used = variables_of(c.rhs);
    const bool independent = std::none_of(used.begin(), used.end(),
                                          [&](int u) { return cand_vars.count(u) > 0; });
    if (independent) defs.push_back(c);
  }
  const std::size_t def_base = roots.size();
  for (const Candidate& d : defs) roots.push_back(d.rhs);
  if (objective) roots.push_back(*objective);

  tape_ = Tape(roots);
  const std::vector<int>& r = tape_.roots();
  std::size_t k = 0;
  for (const Clause& c : f.clauses()) {
    std::vector<AtomRef> refs;
    for (const Atom& a : c) refs.push_back({r[k++], a.rel});
    clauses_.push_back(std::move(refs));
  }
  std::set<int> defined;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    definitions_.push_back({defs[i].var, r[def_base + i]});
    defined.insert(defs[i].var);
  }
  if (objective) objective_ = r.back();
  for (Eigen::Index v = 0; v < domain_.size(); ++v) {
    if (!defined.count(static_cast<int>(v)) && domain_[v].width() > 0.0) {
      branch_vars_.push_back(static_cast<int>(v));
    }
  }
}

// ---------------------------------------------------------------------------
// Contractor

namespace {

Interval square_preimage(const Interval& r, const Interval& x) {
  const Interval sq = intersect(r, Interval(0.0, kInf));
  if (sq.is_empty()) return sq;
  const double hi = std::isinf(sq.hi) ? kInf : round_up(std::sqrt(sq.hi));
  const double lo = sq.lo > 0.0 ? std::max(0.0, round_down(std::sqrt(sq.lo))) : 0.0;
  const Interval pos = intersect(x, Interval(lo, hi));
  const Interval neg = intersect(x, Interval(-hi, -lo));
  if (pos.is_empty()) return neg;
  if (neg.is_empty()) return pos;
  return hull(pos, neg);
}

}  // namespace

Contractor::Contractor(const CompiledFormula& cf, int max_passes, bool mean_value)
    : cf_(cf), max_passes_(max_passes), mean_value_(mean_value) {
  dim_of_node_.assign(cf.tape().nodes().size(), -1);
  int d = 0;
  for (const auto& vn : cf.tape().var_nodes()) dim_of_node_[vn.second] = d++;
}

namespace {

Interval apply_op(const TapeNode& n, const std::vector<Interval>& v) {
  switch (n.op) {
    case Op::kVar: return Interval::entire();
    case Op::kConst: return Interval(n.value);
    case Op::kAdd: return v[n.a] + v[n.b];
    case Op::kMul: return n.a == n.b ? abs(v[n.a]) * abs(v[n.a]) : v[n.a] * v[n.b];
    case Op::kNeg: return -v[n.a];
    case Op::kAbs: return abs(v[n.a]);
    case Op::kMax: return max(v[n.a], v[n.b]);
    case Op::kExp: return exp(v[n.a]);
    case Op::kSigmoid: return sigmoid(v[n.a]);
    case Op::kTanh: return tanh(v[n.a]);
  }
  return Interval::entire();
}

double magnitude(const Interval& x) { return std::max(std::fabs(x.lo), std::fabs(x.hi)); }

Interval sign_of(const Interval& x) {
  if (x.lo >= 0.0) return Interval(1.0);
  if (x.hi <= 0.0) return Interval(-1.0);
  return Interval(-1.0, 1.0);
}

}  // namespace

void Contractor::evaluate(const Box& box) {
  const std::vector<TapeNode>& nodes = cf_.tape().nodes();
  const std::size_t n = nodes.size();
  vals_.resize(n);
  if (!mean_value_) {
    for (std::size_t i = 0; i < n; ++i) {
      vals_[i] = nodes[i].op == Op::kVar ? box[nodes[i].var] : apply_op(nodes[i], vals_);
    }
    return;
  }
  const std::size_t dims = cf_.tape().var_nodes().size();
  centre_.resize(n);
  grad_.assign(n * dims, Interval(0.0));
  offset_.resize(dims);
  for (std::size_t i = 0; i < n; ++i) {
    const TapeNode& t = nodes[i];
    Interval* g = &grad_[i * dims];
    const Interval* ga = t.a >= 0 ? &grad_[static_cast<std::size_t>(t.a) * dims] : nullptr;
    const Interval* gb = t.b >= 0 ? &grad_[static_cast<std::size_t>(t.b) * dims] : nullptr;
    switch (t.op) {
      case Op::kVar: {
        const Interval x = box[t.var];
        const double c = x.mid();
        const int d = dim_of_node_[i];
        vals_[i] = x;
        centre_[i] = Interval(c);
        offset_[d] = x - Interval(c);
        g[d] = Interval(1.0);
        continue;
      }
      case Op::kConst:
        vals_[i] = centre_[i] = Interval(t.value);
        continue;
      case Op::kAdd:
        for (std::size_t j = 0; j < dims; ++j) g[j] = ga[j] + gb[j];
        break;
      case Op::kMul:
        if (t.a == t.b) {
          const Interval two_a = Interval(2.0) * vals_[t.a];
          for (std::size_t j = 0; j < dims; ++j) g[j] = two_a * ga[j];
        } else {
          for (std::size_t j = 0; j < dims; ++j) g[j] = ga[j] * vals_[t.b] + vals_[t.a] * gb[j];
        }
        break;
      case Op::kNeg:
        for (std::size_t j = 0; j < dims; ++j) g[j] = -ga[j];
        break;
      case Op::kAbs: {
        const Interval s = sign_of(vals_[t.a]);
        for (std::size_t j = 0; j < dims; ++j) g[j] = s * ga[j];
        break;
      }
      case Op::kMax: {
        const Interval& a = vals_[t.a];
        const Interval& b = vals_[t.b];
        for (std::size_t j = 0; j < dims; ++j) {
          g[j] = a.lo >= b.hi ? ga[j] : b.lo >= a.hi ? gb[j] : hull(ga[j], gb[j]);
        }
        break;
      }
      case Op::kExp:
      case Op::kSigmoid:
      case Op::kTanh:
        break;  // needs the node's own value, below
    }
    Interval nat = apply_op(t, vals_);
    if (t.op == Op::kExp || t.op == Op::kSigmoid || t.op == Op::kTanh) {
      Interval d;
      if (t.op == Op::kExp) {
        d = nat;
      } else if (t.op == Op::kSigmoid) {
        d = intersect(nat * (Interval(1.0) - nat), Interval(0.0, 0.25));
      } else {
        const Interval m = abs(nat);
        d = intersect(Interval(1.0) - m * m, Interval(0.0, 1.0));
      }
      for (std::size_t j = 0; j < dims; ++j) g[j] = d * ga[j];
    }
    centre_[i] = apply_op(t, centre_);
    Interval mv = centre_[i];
    for (std::size_t j = 0; j < dims; ++j) {
      if (g[j].lo != 0.0 || g[j].hi != 0.0) mv += g[j] * offset_[j];
    }
    const Interval both = intersect(nat, mv);
    vals_[i] = both.is_empty() ? nat : both;
  }
}

bool Contractor::narrow(std::vector<Interval>& vals, std::vector<char>& changed, int node,
                        const Interval& with) const {
  const Interval v = intersect(vals[node], with);
  if (v.is_empty()) return false;
  if (v != vals[node]) {
    vals[node] = v;
    changed[node] = 1;
  }
  return true;
}

bool Contractor::backward(std::vector<Interval>& vals, std::vector<char>& changed) const {
  const std::vector<TapeNode>& nodes = cf_.tape().nodes();
  for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; --i) {
    if (!changed[i]) continue;
    const TapeNode& n = nodes[i];
    const Interval r = vals[i];
    bool ok = true;
    switch (n.op) {
      case Op::kVar:
      case Op::kConst: break;
      case Op::kAdd:
        ok = narrow(vals, changed, n.a, r - vals[n.b]) && narrow(vals, changed, n.b, r - vals[n.a]);
        break;
      case Op::kMul:
        if (n.a == n.b) {
          ok = narrow(vals, changed, n.a, square_preimage(r, vals[n.a]));
        } else {
          if (!vals[n.b].contains(0.0)) ok = narrow(vals, changed, n.a, r / vals[n.b]);
          if (ok && !vals[n.a].contains(0.0)) ok = narrow(vals, changed, n.b, r / vals[n.a]);
        }
        break;
      case Op::kNeg: ok = narrow(vals, changed, n.a, -r); break;
      case Op::kAbs: {
        const Interval m = intersect(r, Interval(0.0, kInf));
        if (m.is_empty()) return false;
        const Interval pos = intersect(vals[n.a], m);
        const Interval neg = intersect(vals[n.a], -m);
        if (pos.is_empty() && neg.is_empty()) return false;
        ok = narrow(vals, changed, n.a,
                    pos.is_empty() ? neg : neg.is_empty() ? pos : hull(pos, neg));
        break;
      }
      case Op::kMax: {
        const Interval cap(-kInf, r.hi);
        ok = narrow(vals, changed, n.a, cap) && narrow(vals, changed, n.b, cap);
        if (ok && vals[n.a].hi < r.lo) ok = narrow(vals, changed, n.b, r);
        if (ok && vals[n.b].hi < r.lo) ok = narrow(vals, changed, n.a, r);
        break;
      }
      case Op::kExp: ok = narrow(vals, changed, n.a, log_preimage(r)); break;
      case Op::kSigmoid: ok = narrow(vals, changed, n.a, logit_preimage(r)); break;
      case Op::kTanh: ok = narrow(vals, changed, n.a, atanh_preimage(r)); break;
    }
    if (!ok) return false;
  }
  return true;
}

bool Contractor::contract(Box& box, double objective_cap) {
  const std::size_t n = cf_.tape().nodes().size();
  const auto& var_nodes = cf_.tape().var_nodes();
  std::vector<int> multi;
  std::vector<Interval> hulls(var_nodes.size());
  for (int pass = 0; pass < max_passes_; ++pass) {
    evaluate(box);
    changed_.assign(n, 0);
    entailed_ = true;
    multi.clear();
    const auto& clauses = cf_.clauses();
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      int live = 0;
      const CompiledFormula::AtomRef* last = nullptr;
      bool holds = false;
      for (const auto& a : clauses[c]) {
        const Interval t = relation_target(a.rel, 0.0);
        const Interval v = vals_[a.root];
        if (v.subset_of(t)) {
          holds = true;
          break;
        }
        if (intersect(v, t).is_empty()) continue;
        ++live;
        last = &a;
      }
      if (holds) continue;
      entailed_ = false;
      if (live == 0) return false;
      if (live == 1) {
        if (!narrow(vals_, changed_, last->root, relation_target(last->rel, 0.0))) return false;
      } else {
        multi.push_back(static_cast<int>(c));
      }
    }
    const int obj = cf_.objective_node();
    if (obj >= 0 && !narrow(vals_, changed_, obj, Interval(-kInf, objective_cap))) return false;
    if (!backward(vals_, changed_)) return false;

    // Disjunctions: hull of the per-disjunct contractions.
    for (int c : multi) {
      bool any = false;
      for (const auto& a : clauses[c]) {
        const Interval t = relation_target(a.rel, 0.0);
        if (intersect(vals_[a.root], t).is_empty()) continue;
        scratch_ = vals_;
        scratch_changed_.assign(n, 0);
        if (!narrow(scratch_, scratch_changed_, a.root, t)) continue;
        if (!backward(scratch_, scratch_changed_)) continue;
        for (std::size_t j = 0; j < var_nodes.size(); ++j) {
          const Interval v = scratch_[var_nodes[j].second];
          hulls[j] = any ? hull(hulls[j], v) : v;
        }
        any = true;
      }
      if (!any) return false;
      for (std::size_t j = 0; j < var_nodes.size(); ++j) {
        Interval& v = vals_[var_nodes[j].second];
        v = intersect(v, hulls[j]);
      }
    }

    bool shrunk = false;
    for (const auto& [var, node] : var_nodes) {
      const Interval before = box[var];
      const Interval after = intersect(before, vals_[node]);
      if (after.is_empty()) return false;
      if (before.width() - after.width() > 0.01 * before.width()) shrunk = true;
      box[var] = after;
    }
    objective_range_ = obj >= 0 ? vals_[obj] : Interval::entire();
    if (entailed_ || !shrunk) break;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Prober

Prober::Prober(const CompiledFormula& cf) : cf_(cf) {}

bool Prober::complete(Eigen::VectorXd& point) {
  if (cf_.definitions().empty()) return true;
  cf_.tape().forward(point, vals_);
  for (const auto& d : cf_.definitions()) {
    const double v = vals_[d.root];
    if (!cf_.domain()[d.var].contains(v)) return false;
    point[d.var] = v;
  }
  return true;
}

double Prober::violation(const Eigen::VectorXd& point, double slack) {
  cf_.tape().forward(point, vals_);
  double worst = -kInf;
  for (const auto& clause : cf_.clauses()) {
    double best = kInf;
    for (const auto& a : clause) {
      const Interval t = relation_target(a.rel, slack);
      const double v = vals_[a.root];
      double d = v < t.lo ? t.lo - v : v > t.hi ? v - t.hi : 0.0;
      // A strict atom sitting exactly on its bound is (barely) violated.
      const bool on_bound = (a.rel == Relation::kLt && v == t.hi) ||
                            (a.rel == Relation::kGt && v == t.lo);
      if (on_bound) d = std::numeric_limits<double>::denorm_min();
      best = std::min(best, std::isnan(v) ? kInf : d);
    }
    worst = std::max(worst, best);
  }
  return worst == -kInf ? 0.0 : worst;
}

double Prober::objective_at(const Eigen::VectorXd& point) {
  if (cf_.objective_node() < 0) return 0.0;
  cf_.tape().forward(point, vals_);
  return vals_[cf_.objective_node()];
}

double Prober::score(Eigen::VectorXd& point, double slack, double* objective) {
  if (!complete(point)) return kInf;
  const double v = violation(point, slack);
  // vals_ still holds the forward pass of `point`.
  if (objective) *objective = cf_.objective_node() >= 0 ? vals_[cf_.objective_node()] : 0.0;
  return v;
}

std::optional<Prober::Probe> Prober::probe(const Box& box, double slack) {
  const bool has_obj = cf_.objective_node() >= 0;
  Eigen::VectorXd point = midpoint(box);
  double obj = 0.0;
  double viol = score(point, slack, &obj);
  if (viol <= 0.0 && !has_obj) return Probe{point, obj};

  Eigen::VectorXd trial = point;
  for (int pass = 0; pass < 2; ++pass) {
    bool moved = false;
    for (int v : cf_.branch_vars()) {
      for (const double face : {box[v].lo, box[v].hi}) {
        if (face == point[v]) continue;
        trial = point;
        trial[v] = face;
        double tobj = 0.0;
        const double tviol = score(trial, slack, &tobj);
        const bool better = viol > 0.0 ? tviol < viol : (tviol <= 0.0 && tobj < obj);
        if (better) {
          point = trial;
          viol = tviol;
          obj = tobj;
          moved = true;
        }
      }
      if (viol <= 0.0 && !has_obj) return Probe{point, obj};
    }
    if (!moved) break;
  }
  if (viol <= 0.0) return Probe{point, obj};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Branching

namespace {

bool splittable(const Interval& x) {
  const double m = x.mid();
  return x.lo < m && m < x.hi;
}

double scaled_width(const CompiledFormula& cf, const Box& box, int v) {
  return box[v].width() / cf.domain()[v].width();
}

double spread(const CompiledFormula& cf, const Box& box) {
  double s = 0.0;
  for (int v : cf.branch_vars()) s += scaled_width(cf, box, v);
  return s;
}

}  // namespace

std::vector<double> Contractor::smear(const Box& box) {
  std::vector<double> out(static_cast<std::size_t>(box.size()), 0.0);
  if (!mean_value_) return out;
  evaluate(box);
  const std::size_t dims = cf_.tape().var_nodes().size();
  std::vector<int> roots;
  for (const auto& clause : cf_.clauses()) {
    for (const CompiledFormula::AtomRef& a : clause) roots.push_back(a.root);
  }
  for (const CompiledFormula::Definition& d : cf_.definitions()) roots.push_back(d.root);
  for (const auto& [var, node] : cf_.tape().var_nodes()) {
    const std::size_t j = static_cast<std::size_t>(dim_of_node_[node]);
    const double w = box[var].width();
    double s = 0.0;
    for (int r : roots) s = std::max(s, magnitude(grad_[static_cast<std::size_t>(r) * dims + j]) * w);
    out[static_cast<std::size_t>(var)] = s;
  }
  return out;
}

std::optional<Split> split_box(const CompiledFormula& cf, Contractor& contractor, const Box& box,
                               Branching rule, double objective_cap) {
  std::vector<int> cands;
  for (int v : cf.branch_vars()) {
    if (splittable(box[v])) cands.push_back(v);
  }
  if (cands.empty()) return std::nullopt;

  auto bisect = [&](int v) {
    Split s;
    s.var = v;
    s.lower = box;
    s.upper = box;
    const double m = box[v].mid();
    s.lower[v].hi = m;
    s.upper[v].lo = m;
    return s;
  };

  if (rule == Branching::kSmear) {
    const std::vector<double> sm = contractor.smear(box);
    int best = cands.front();
    for (int v : cands) {
      if (sm[v] > sm[best]) best = v;
    }
    if (sm[best] > 0.0) return bisect(best);
  } else if (rule == Branching::kLookahead && cands.size() > kLookaheadShortlist) {
    const std::vector<double> sm = contractor.smear(box);
    std::stable_sort(cands.begin(), cands.end(), [&](int a, int b) { return sm[a] > sm[b]; });
    if (sm[cands[kLookaheadShortlist - 1]] > 0.0) cands.resize(kLookaheadShortlist);
  }
  if (rule != Branching::kLookahead || cands.size() > kMaxLookaheadDims) {
    int best = cands.front();
    for (int v : cands) {
      if (scaled_width(cf, box, v) > scaled_width(cf, box, best)) best = v;
    }
    return bisect(best);
  }

  const bool has_obj = cf.objective_node() >= 0;
  std::optional<Split> best;
  double best_primary = -kInf;
  double best_secondary = kInf;
  for (int v : cands) {
    Split s = bisect(v);
    double primary = 0.0;
    double secondary = 0.0;
    double lb[2] = {kInf, kInf};
    Box* halves[2] = {&s.lower, &s.upper};
    bool* alive[2] = {&s.lower_alive, &s.upper_alive};
    for (int h = 0; h < 2; ++h) {
      *alive[h] = contractor.contract(*halves[h], objective_cap);
      if (*alive[h]) {
        lb[h] = contractor.objective().lo;
        secondary += spread(cf, *halves[h]);
      } else if (!has_obj) {
        primary += 1.0;
      }
    }
    if (has_obj) primary = std::min(lb[0], lb[1]);
    if (!best || primary > best_primary ||
        (primary == best_primary && secondary < best_secondary)) {
      best = std::move(s);
      best_primary = primary;
      best_secondary = secondary;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Free functions

std::optional<Box> contract(const Formula& f, const Box& box) {
  if (box.size() != f.num_variables()) throw std::invalid_argument("box dimension mismatch");
  CompiledFormula cf(f);
  Contractor c(cf);
  Box b = box;
  if (!c.contract(b)) return std::nullopt;
  return b;
}

bool check_point(const Formula& f, const Eigen::VectorXd& point, double slack) {
  if (point.size() != f.num_variables()) throw std::invalid_argument("point dimension mismatch");
  CompiledFormula cf(f);
  Prober p(cf);
  return p.violation(point, slack) <= 0.0;
}

namespace {

bool tiny(const CompiledFormula& cf, const Box& box, double precision) {
  for (int v : cf.branch_vars()) {
    if (box[v].width() >= precision) return false;
  }
  return true;
}

struct SearchState {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<Box> stack;
  int active = 0;
  bool done = false;
  std::int64_t splits = 0;
  std::int64_t unresolved = 0;
  bool budget_hit = false;
  std::optional<DeltaSat> sat;
};

// Processes one box; returns a witness or pushes children via `out`.
std::optional<DeltaSat> expand(const CompiledFormula& cf, Contractor& c, Prober& p, Box box,
                               const SolverConfig& cfg, std::optional<Split>& out,
                               bool& unresolved) {
  out.reset();
  unresolved = false;
  if (!c.contract(box)) return std::nullopt;
  const bool small = tiny(cf, box, cfg.precision);
  // Exact probes on large boxes, weakened ones only at the resolution limit:
  // the verdict then depends only on the deterministic refutation tree.
  // An exact point is preferred whenever one turns up.
  if (auto hit = p.probe(box, 0.0)) return DeltaSat{hit->point, box};
  if (small || c.entailed()) {
    if (auto hit = p.probe(box, cfg.precision)) return DeltaSat{hit->point, box};
  }
  out = split_box(cf, c, box, cfg.branching);
  if (!out) unresolved = true;
  return std::nullopt;
}

void search_worker(const CompiledFormula& cf, const SolverConfig& cfg, SearchState& st) {
  Contractor c(cf);
  Prober p(cf);
  std::optional<Split> split;
  for (;;) {
    Box box;
    {
      std::unique_lock lock(st.mu);
      st.cv.wait(lock, [&] { return st.done || !st.stack.empty() || st.active == 0; });
      if (st.done || st.stack.empty()) {
        st.done = true;
        st.cv.notify_all();
        return;
      }
      box = std::move(st.stack.back());
      st.stack.pop_back();
      ++st.active;
    }
    bool unresolved = false;
    std::optional<DeltaSat> hit = expand(cf, c, p, std::move(box), cfg, split, unresolved);
    {
      std::lock_guard lock(st.mu);
      --st.active;
      if (hit && !st.sat) {
        st.sat = std::move(hit);
        st.done = true;
      } else if (unresolved) {
        ++st.unresolved;
      } else if (split && !st.done) {
        if (st.splits >= cfg.max_splits) {
          st.budget_hit = true;
          st.done = true;
        } else {
          ++st.splits;
          // Lower half on top of the stack so it is explored first.
          if (split->upper_alive) st.stack.push_back(std::move(split->upper));
          if (split->lower_alive) st.stack.push_back(std::move(split->lower));
        }
      }
      st.cv.notify_all();
    }
  }
}

}  // namespace

Verdict decide(const Formula& f, const SolverConfig& config) {
  config.validate();
  CompiledFormula cf(f);
  SearchState st;
  st.stack.push_back(cf.domain());
  const int workers = config.deterministic ? 1 : config.workers;
  if (workers == 1) {
    search_worker(cf, config, st);
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back([&] { search_worker(cf, config, st); });
    }
  }
  if (st.sat) return *st.sat;
  if (st.budget_hit) return Unknown{"split budget exhausted"};
  if (st.unresolved > 0) {
    return Unknown{std::to_string(st.unresolved) + " box(es) unresolved at floating-point resolution"};
  }
  return Unsat{};
}

}  // namespace qrobust
