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

#include "qrobust/encoder.hpp"

#include <algorithm>
#include <string>

namespace qrobust {

std::string_view to_string(QueryKind k) {
  switch (k) {
    case QueryKind::kLocalEps: return "local_eps";
    case QueryKind::kGlobalEps: return "global_eps";
    case QueryKind::kLocalFlip: return "local_flip";
    case QueryKind::kGlobalFlip: return "global_flip";
    case QueryKind::kSigmaFlip: return "sigma_flip";
  }
  return "local_eps";
}

QueryKind parse_query_kind(std::string_view s) {
  for (QueryKind k : {QueryKind::kLocalEps, QueryKind::kGlobalEps, QueryKind::kLocalFlip,
                      QueryKind::kGlobalFlip, QueryKind::kSigmaFlip}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown query kind '" + std::string(s) + "'");
}

std::string_view to_string(Side s) {
  switch (s) {
    case Side::kAbove: return "above";
    case Side::kBelow: return "below";
    case Side::kBoth: return "both";
  }
  return "both";
}

Side parse_side(std::string_view s) {
  if (s == "above") return Side::kAbove;
  if (s == "below") return Side::kBelow;
  if (s == "both") return Side::kBoth;
  throw std::invalid_argument("unknown side '" + std::string(s) + "'");
}

RobustnessQuery RobustnessQuery::local_eps(const Network& net, Eigen::VectorXd x0, double delta,
                                           double epsilon) {
  RobustnessQuery q{QueryKind::kLocalEps, net, flatten(net), delta, epsilon, {}, std::move(x0), {}};
  return q;
}

RobustnessQuery RobustnessQuery::global_eps(const Network& net, Box domain, double delta,
                                            double epsilon) {
  return {QueryKind::kGlobalEps, net, flatten(net), delta, epsilon, {}, {}, std::move(domain)};
}

RobustnessQuery RobustnessQuery::local_flip(const Network& net, Eigen::VectorXd x0, double delta) {
  return {QueryKind::kLocalFlip, net, flatten(net), delta, {}, {}, std::move(x0), {}};
}

RobustnessQuery RobustnessQuery::global_flip(const Network& net, Box domain, double delta) {
  return {QueryKind::kGlobalFlip, net, flatten(net), delta, {}, {}, {}, std::move(domain)};
}

RobustnessQuery RobustnessQuery::sigma_flip(const Network& net, Box domain, double delta,
                                            double sigma) {
  return {QueryKind::kSigmaFlip, net, flatten(net), delta, {}, sigma, {}, std::move(domain)};
}

namespace {

void check_domain(const Box& domain, const Network& net) {
  if (domain.size() != net.input_dim()) {
    throw std::invalid_argument("domain dimension differs from network input_dim");
  }
  for (Eigen::Index i = 0; i < domain.size(); ++i) {
    if (domain[i].is_empty() || !std::isfinite(domain[i].lo) || !std::isfinite(domain[i].hi)) {
      throw std::invalid_argument("domain must be a non-empty finite box");
    }
  }
}

}  // namespace

void validate(const RobustnessQuery& q) {
  const std::string kind(to_string(q.kind));
  if (!(q.delta >= 0.0) || !std::isfinite(q.delta)) {
    throw std::invalid_argument(kind + ": delta must be finite and >= 0");
  }
  if (q.p0.size() != parameter_count(q.net)) {
    throw std::invalid_argument(kind + ": p0 length does not match the network");
  }
  const bool eps_kind = q.kind == QueryKind::kLocalEps || q.kind == QueryKind::kGlobalEps;
  if (eps_kind != q.epsilon.has_value()) {
    throw std::invalid_argument(kind + (eps_kind ? ": epsilon required" : ": epsilon not allowed"));
  }
  if (q.epsilon && !(*q.epsilon >= 0.0)) throw std::invalid_argument(kind + ": epsilon must be >= 0");
  const bool sigma_kind = q.kind == QueryKind::kSigmaFlip;
  if (sigma_kind != q.sigma.has_value()) {
    throw std::invalid_argument(kind + (sigma_kind ? ": sigma required" : ": sigma not allowed"));
  }
  if (q.sigma && !(*q.sigma >= 0.0)) throw std::invalid_argument(kind + ": sigma must be >= 0");
  if (is_local(q.kind)) {
    if (!q.x0) throw std::invalid_argument(kind + ": x0 required");
    if (q.domain) throw std::invalid_argument(kind + ": domain not allowed");
    if (q.x0->size() != q.net.input_dim()) {
      throw std::invalid_argument(kind + ": x0 dimension differs from network input_dim");
    }
  } else {
    if (!q.domain) throw std::invalid_argument(kind + ": domain required");
    if (q.x0) throw std::invalid_argument(kind + ": x0 not allowed");
    check_domain(*q.domain, q.net);
  }
}

namespace {

struct Vars {
  std::vector<Expr> params;
  std::vector<Expr> inputs;
};

Vars declare_params(Formula& f, const Box& param_box) {
  Vars v;
  for (Eigen::Index i = 0; i < param_box.size(); ++i) {
    v.params.push_back(f.add_variable("p_" + std::to_string(i), param_box[i]));
  }
  return v;
}

void declare_inputs(Formula& f, Vars& v, const Box& domain) {
  for (Eigen::Index i = 0; i < domain.size(); ++i) {
    v.inputs.push_back(f.add_variable("x_" + std::to_string(i), domain[i]));
  }
}

std::vector<Expr> constants(const Eigen::VectorXd& v) {
  std::vector<Expr> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(Expr::constant(v[i]));
  return out;
}

// Confidence of the perturbed network, parameters symbolic.
Expr perturbed(const Network& net, const Vars& v, std::span<const Expr> inputs) {
  return network_to_expr(net, inputs, v.params);
}

// Confidence of the reference network at symbolic inputs.
Expr reference(const Network& net, const ParamVector& p0, std::span<const Expr> inputs) {
  const std::vector<Expr> pc = constants(p0.values);
  return network_to_expr(net, inputs, pc);
}

double reference_at(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0) {
  return forward(unflatten<double>(net, p0.values), x0);
}

// Labels differ: (f0 < l or fp < l) and (f0 >= l or fp >= l).
void add_flip(Formula& f, const Expr& f0, const Expr& fp, double level) {
  const Expr l = Expr::constant(level);
  f.add_clause({lt(f0, l), lt(fp, l)});
  f.add_clause({ge(f0, l), ge(fp, l)});
}

Formula encode_with(const RobustnessQuery& q, const Box& param_box) {
  validate(q);
  if (param_box.size() != q.p0.size()) {
    throw std::invalid_argument("parameter box dimension mismatch");
  }
  Formula f;
  Vars v = declare_params(f, param_box);
  const double level = q.level();
  switch (q.kind) {
    case QueryKind::kLocalEps: {
      const std::vector<Expr> xc = constants(*q.x0);
      const double c = reference_at(q.net, q.p0, *q.x0);
      f.add(gt(abs(Expr::constant(c) - perturbed(q.net, v, xc)), Expr::constant(*q.epsilon)));
      break;
    }
    case QueryKind::kLocalFlip: {
      const std::vector<Expr> xc = constants(*q.x0);
      const double c = reference_at(q.net, q.p0, *q.x0);
      const Expr fp = perturbed(q.net, v, xc);
      // Reference label is known here, leaving a single atom.
      f.add(c >= level ? lt(fp, Expr::constant(level)) : ge(fp, Expr::constant(level)));
      break;
    }
    case QueryKind::kGlobalEps: {
      declare_inputs(f, v, *q.domain);
      const Expr f0 = reference(q.net, q.p0, v.inputs);
      f.add(gt(abs(f0 - perturbed(q.net, v, v.inputs)), Expr::constant(*q.epsilon)));
      break;
    }
    case QueryKind::kGlobalFlip:
    case QueryKind::kSigmaFlip: {
      declare_inputs(f, v, *q.domain);
      const Expr f0 = reference(q.net, q.p0, v.inputs);
      add_flip(f, f0, perturbed(q.net, v, v.inputs), level);
      if (q.kind == QueryKind::kSigmaFlip) {
        f.add(ge(abs(f0 - level), Expr::constant(*q.sigma)));
      }
      break;
    }
  }
  return f;
}

}  // namespace

Formula encode_local_eps(const RobustnessQuery& q) {
  if (q.kind != QueryKind::kLocalEps) throw std::invalid_argument("expected a local_eps query");
  return encode(q);
}
Formula encode_global_eps(const RobustnessQuery& q) {
  if (q.kind != QueryKind::kGlobalEps) throw std::invalid_argument("expected a global_eps query");
  return encode(q);
}
Formula encode_local_flip(const RobustnessQuery& q) {
  if (q.kind != QueryKind::kLocalFlip) throw std::invalid_argument("expected a local_flip query");
  return encode(q);
}
Formula encode_global_flip(const RobustnessQuery& q) {
  if (q.kind != QueryKind::kGlobalFlip) throw std::invalid_argument("expected a global_flip query");
  return encode(q);
}
Formula encode_sigma_flip(const RobustnessQuery& q) {
  if (q.kind != QueryKind::kSigmaFlip) throw std::invalid_argument("expected a sigma_flip query");
  return encode(q);
}

Formula encode(const RobustnessQuery& q) {
  validate(q);
  return encode_with(q, perturb_box(q.p0, q.delta));
}

Formula encode(const RobustnessQuery& q, const Box& param_box) { return encode_with(q, param_box); }

namespace {

void check_opt_inputs(const Network& net, const ParamVector& p0, double delta, double range_max) {
  if (p0.size() != parameter_count(net)) throw std::invalid_argument("p0 length mismatch");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be >= 0");
  if (!(range_max > 0.0 && range_max <= 1.0)) {
    throw std::invalid_argument("objective bound must lie in (0, 1]");
  }
}

}  // namespace

OptProblem opt_local_eps(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0,
                         double delta, double eps_max) {
  check_opt_inputs(net, p0, delta, eps_max);
  if (x0.size() != net.input_dim()) throw std::invalid_argument("x0 dimension mismatch");
  Formula f;
  Vars v = declare_params(f, perturb_box(p0, delta));
  const Expr eps = f.add_variable("eps", Interval(0.0, eps_max));
  const std::vector<Expr> xc = constants(x0);
  const double c = reference_at(net, p0, x0);
  f.add(eq(eps, abs(Expr::constant(c) - perturbed(net, v, xc))));
  return {-eps, std::move(f), Interval(0.0, eps_max)};
}

OptProblem opt_global_eps(const Network& net, const ParamVector& p0, const Box& domain,
                          double delta, double eps_max) {
  check_opt_inputs(net, p0, delta, eps_max);
  check_domain(domain, net);
  Formula f;
  Vars v = declare_params(f, perturb_box(p0, delta));
  declare_inputs(f, v, domain);
  const Expr eps = f.add_variable("eps", Interval(0.0, eps_max));
  const Expr f0 = reference(net, p0, v.inputs);
  f.add(eq(eps, abs(f0 - perturbed(net, v, v.inputs))));
  return {-eps, std::move(f), Interval(0.0, eps_max)};
}

OptProblem opt_sigma(const Network& net, const ParamVector& p0, const Box& domain, double delta,
                     Side side, double sigma_max) {
  const double level = net.level();
  if (sigma_max <= 0.0) sigma_max = std::max(level, 1.0 - level);
  if (sigma_max > std::max(level, 1.0 - level)) {
    throw std::invalid_argument("sigma_max exceeds max(level, 1 - level)");
  }
  check_opt_inputs(net, p0, delta, sigma_max);
  check_domain(domain, net);
  Formula f;
  Vars v = declare_params(f, perturb_box(p0, delta));
  declare_inputs(f, v, domain);
  const Expr sigma = f.add_variable("sigma", Interval(0.0, sigma_max));
  const Expr f0 = reference(net, p0, v.inputs);
  const Expr fp = perturbed(net, v, v.inputs);
  const Expr l = Expr::constant(level);
  f.add(eq(sigma, abs(f0 - level)));
  switch (side) {
    case Side::kAbove:
      f.add(ge(f0, l));
      f.add(lt(fp, l));
      break;
    case Side::kBelow:
      f.add(lt(f0, l));
      f.add(ge(fp, l));
      break;
    case Side::kBoth: add_flip(f, f0, fp, level); break;
  }
  return {-sigma, std::move(f), Interval(0.0, sigma_max)};
}

}  // namespace qrobust
