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

// qrobust: parameter-robustness verification and estimation for small
// sigmoid-output networks.
//
// Exit codes: 0 robust (unsat), 1 counterexample (delta-sat), 3 unknown,
// 2 usage or I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qrobust/encoder.hpp"
#include "qrobust/optimizer.hpp"
#include "qrobust/oracle.hpp"
#include "qrobust/quantization.hpp"
#include "qrobust/query_io.hpp"
#include "qrobust/solver.hpp"

namespace {

using json = nlohmann::json;
using namespace qrobust;

constexpr int kExitRobust = 0;
constexpr int kExitCounterexample = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUnknown = 3;
constexpr int kSchemaVersion = 1;

struct Options {
  std::string model;
  std::string query;
  std::string out;
  std::string format = "json";
  std::string branching = "smear";
  double precision = 1e-4;
  std::int64_t max_splits = 1'000'000;
  double tolerance = 1e-4;
  int workers = 1;
  bool deterministic = false;
  std::uint64_t seed = 20190601;
  std::int64_t samples = 1000;
  bool fast_scan = false;
  int frac_bits = -1;
  bool search = false;
  bool oracle = false;
};

struct Loaded {
  QuerySpec spec;
  Network net;
};

SolverConfig solver_config(const Options& o) {
  SolverConfig c;
  c.precision = o.precision;
  c.max_splits = o.max_splits;
  c.branching = parse_branching(o.branching);
  c.workers = o.workers;
  c.deterministic = o.deterministic;
  c.validate();
  return c;
}

Loaded load(const Options& o) {
  QuerySpec spec = load_query(o.query);
  const std::string path = o.model.empty() ? spec.model : o.model;
  if (path.empty()) throw std::runtime_error("no model given (--model or \"model\" in the query)");
  if (!std::filesystem::exists(path)) throw std::runtime_error("model file '" + path + "' not found");
  return {std::move(spec), load_network(path)};
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Splits an encoder variable vector into parameters, inputs and auxiliaries.
json witness_json(const Eigen::VectorXd& w, Eigen::Index n_params, Eigen::Index n_inputs) {
  json j;
  if (w.size() == 0) return nullptr;
  j["params"] = vec(w.head(n_params));
  const Eigen::Index rest = w.size() - n_params;
  const Eigen::Index xs = std::min(rest, n_inputs);
  j["x"] = vec(w.segment(n_params, xs));
  if (rest > xs) j["aux"] = vec(w.tail(rest - xs));
  return j;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + o.out + "'");
  f << text;
}

json verdict_json(const Verdict& v, const RobustnessQuery& q) {
  json j;
  j["verdict"] = std::string(verdict_name(v));
  const Eigen::Index n_inputs = is_local(q.kind) ? 0 : q.net.input_dim();
  if (const auto* s = std::get_if<DeltaSat>(&v)) {
    j["witness"] = witness_json(s->witness, q.p0.size(), n_inputs);
  } else if (const auto* u = std::get_if<Unknown>(&v)) {
    j["reason"] = u->reason;
  }
  return j;
}

int exit_code(const Verdict& v) {
  if (is_unsat(v)) return kExitRobust;
  if (is_delta_sat(v)) return kExitCounterexample;
  return kExitUnknown;
}

int cmd_verify(const Options& o) {
  const Loaded in = load(o);
  const RobustnessQuery q = to_query(in.spec, in.net);
  const Verdict v = decide(encode(q), solver_config(o));
  json j = verdict_json(v, q);
  j["schema"] = kSchemaVersion;
  j["command"] = "verify";
  j["kind"] = std::string(to_string(q.kind));
  j["delta"] = q.delta;
  emit(o, j.dump(2) + "\n");
  return exit_code(v);
}

json estimate_json(const Estimate& e, Eigen::Index n_params, Eigen::Index n_inputs) {
  json j;
  j["lower"] = e.lower;
  j["upper"] = e.upper;
  j["converged"] = e.converged;
  j["splits"] = e.splits_used;
  j["witness"] = witness_json(e.witness, n_params, n_inputs);
  return j;
}

int cmd_estimate(const Options& o) {
  const Loaded in = load(o);
  const QuerySpec& s = in.spec;
  const SolverConfig cfg = solver_config(o);
  const ParamVector p0 = flatten(in.net);
  json j;
  j["schema"] = kSchemaVersion;
  j["command"] = "estimate";
  j["kind"] = std::string(to_string(s.kind));
  j["delta"] = s.delta;
  bool converged = true;
  auto need_domain = [&] {
    if (!s.domain) throw std::invalid_argument("estimate: this kind needs a domain");
    return *s.domain;
  };
  switch (s.kind) {
    case QueryKind::kLocalEps: {
      if (!s.x0) throw std::invalid_argument("estimate: local_eps needs x0");
      const Estimate e = estimate_eps_local(in.net, p0, *s.x0, s.delta, cfg, o.tolerance);
      j["eps"] = estimate_json(e, p0.size(), 0);
      converged = e.converged;
      break;
    }
    case QueryKind::kGlobalEps: {
      const Estimate e = estimate_eps_global(in.net, p0, need_domain(), s.delta, cfg, o.tolerance);
      j["eps"] = estimate_json(e, p0.size(), in.net.input_dim());
      converged = e.converged;
      break;
    }
    case QueryKind::kSigmaFlip:
    case QueryKind::kGlobalFlip: {
      const Estimate e = estimate_sigma(in.net, p0, need_domain(), s.delta, s.side, cfg, o.tolerance);
      j["side"] = std::string(to_string(s.side));
      j["sigma"] = estimate_json(e, p0.size(), in.net.input_dim());
      converged = e.converged;
      break;
    }
    case QueryKind::kLocalFlip:
      throw std::invalid_argument("estimate: local_flip has no estimation problem");
  }
  if (s.reference) j["reference"] = *s.reference;
  emit(o, j.dump(2) + "\n");
  return converged ? kExitRobust : kExitUnknown;
}

int cmd_quantize(const Options& o) {
  const Loaded in = load(o);
  const SolverConfig cfg = solver_config(o);
  // delta is replaced by the scheme's bound, so any value validates here.
  const RobustnessQuery q = to_query(in.spec, in.net);
  json j;
  j["schema"] = kSchemaVersion;
  j["command"] = "quantize";
  j["kind"] = std::string(to_string(q.kind));
  if (o.search) {
    const SafeBitsResult r = safe_bits_search(q, cfg);
    j["frac_bits"] = r.frac_bits ? json(*r.frac_bits) : json(nullptr);
    json trail = json::array();
    for (const auto& [f, v] : r.trail) {
      trail.push_back({{"frac_bits", f}, {"verdict", std::string(verdict_name(v))}});
    }
    j["trail"] = trail;
    emit(o, j.dump(2) + "\n");
    return r.frac_bits ? kExitRobust : kExitCounterexample;
  }
  const int f = o.frac_bits >= 0 ? o.frac_bits : in.spec.frac_bits.value_or(-1);
  if (f < 0) throw std::invalid_argument("quantize: give --frac-bits or quant.frac_bits");
  const QuantVerification r = verify_quantized(q, QuantScheme{f}, cfg);
  j["frac_bits"] = f;
  j["delta_bound"] = r.report.delta_bound;
  j["max_error"] = r.report.max_error;
  j["quantized"] = vec(r.report.quantized.values);
  j["errors"] = vec(r.report.errors);
  j["box"] = verdict_json(r.box, q);
  j["point"] = verdict_json(r.point, q);
  emit(o, j.dump(2) + "\n");
  return exit_code(r.box);
}

int cmd_scan(const Options& o) {
  const Loaded in = load(o);
  if (!in.spec.domain) throw std::invalid_argument("scan: the query needs a domain");
  ScanOptions so;
  so.solver = solver_config(o);
  so.tolerance = o.tolerance;
  so.fast = o.fast_scan || o.samples > 100;
  const std::vector<ScanRecord> recs =
      scan_inputs(in.net, flatten(in.net), *in.spec.domain, in.spec.delta, o.samples, o.seed, so);
  if (o.format == "csv") {
    std::ostringstream ss;
    write_scan_csv(ss, recs);
    emit(o, ss.str());
  } else {
    json arr = json::array();
    for (const ScanRecord& r : recs) {
      arr.push_back({{"index", r.index},
                     {"x", vec(r.x)},
                     {"confidence", r.confidence},
                     {"label", r.label},
                     {"margin", r.margin},
                     {"eps_lower", r.eps_lower},
                     {"eps_upper", r.eps_upper},
                     {"flippable", r.flippable < 0 ? json("unknown") : json(r.flippable == 1)}});
    }
    json j{{"schema", kSchemaVersion}, {"command", "scan"}, {"seed", o.seed}, {"records", arr}};
    emit(o, j.dump(2) + "\n");
  }
  return kExitRobust;
}

std::string cell(double lo, double hi) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(5) << "[" << lo << ", " << hi << "]";
  return ss.str();
}

int cmd_report(const Options& o) {
  std::ifstream f(o.query);
  if (!f) throw std::runtime_error("cannot open report config '" + o.query + "'");
  const json cfg_j = json::parse(f);
  const std::string base = std::filesystem::path(o.query).parent_path().string();
  const SolverConfig cfg = solver_config(o);
  const std::vector<double> deltas = cfg_j.at("deltas").get<std::vector<double>>();

  json out;
  out["schema"] = kSchemaVersion;
  out["command"] = "report";
  out["fixtures"] = json::array();
  std::ostringstream table;
  table << std::left;
  table << "eps (certified enclosure; published value in parentheses)\n";
  std::ostringstream sigma_table;
  sigma_table << std::left;
  sigma_table << "sigma (above / below the level; published pair in parentheses)\n";
  bool all_converged = true;

  for (const json& fx : cfg_j.at("fixtures")) {
    const std::string name = fx.at("name").get<std::string>();
    const Network net = load_network(resolve_path(base, fx.at("model").get<std::string>()));
    json qj{{"kind", "global_eps"}, {"delta", 0.0}, {"domain", fx.at("domain")}};
    const Box domain = *parse_query(qj.dump(), base).domain;
    const ParamVector p0 = flatten(net);
    json row{{"name", name}, {"results", json::array()}};
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      const double d = deltas[k];
      const Estimate eps = estimate_eps_global(net, p0, domain, d, cfg, o.tolerance);
      const Estimate above = estimate_sigma(net, p0, domain, d, Side::kAbove, cfg, o.tolerance);
      const Estimate below = estimate_sigma(net, p0, domain, d, Side::kBelow, cfg, o.tolerance);
      all_converged = all_converged && eps.converged && above.converged && below.converged;
      json r{{"delta", d},
             {"eps", {eps.lower, eps.upper}},
             {"sigma_above", {above.lower, above.upper}},
             {"sigma_below", {below.lower, below.upper}},
             {"converged", eps.converged && above.converged && below.converged}};
      table << std::setw(12) << name << " delta=" << std::setw(7) << d << " " << cell(eps.lower, eps.upper);
      sigma_table << std::setw(12) << name << " delta=" << std::setw(7) << d << " "
                  << cell(above.lower, above.upper) << " / " << cell(below.lower, below.upper);
      if (fx.contains("published")) {
        const json& p = fx.at("published");
        r["published_eps"] = p.at("eps").at(k);
        r["published_sigma"] = p.at("sigma").at(k);
        table << "  (" << p.at("eps").at(k).get<double>() << ")";
        sigma_table << "  (" << p.at("sigma").at(k).at(0).get<double>() << ", "
                    << p.at("sigma").at(k).at(1).get<double>() << ")";
      }
      if (o.oracle) {
        const GlobalGridValues g = grid_global_values(net, p0, domain, d);
        r["oracle"] = {{"eps", g.eps.value},
                       {"sigma_above", g.sigma_above.value},
                       {"sigma_below", g.sigma_below.value}};
        table << "  grid " << g.eps.value;
        sigma_table << "  grid " << g.sigma_above.value << " / " << g.sigma_below.value;
      }
      table << "\n";
      sigma_table << "\n";
      row["results"].push_back(r);
    }
    out["fixtures"].push_back(row);
  }
  emit(o, o.format == "json" ? out.dump(2) + "\n" : table.str() + "\n" + sigma_table.str());
  return all_converged ? kExitRobust : kExitUnknown;
}

void add_common(CLI::App* sub, Options& o, bool needs_query = true) {
  sub->add_option("--query", o.query, "Query configuration (JSON)")->required(needs_query);
  sub->add_option("--model", o.model, "Network JSON (overrides the query's model)");
  sub->add_option("--precision", o.precision, "Solver precision (delta-weakening)");
  sub->add_option("--max-splits", o.max_splits, "Branching budget");
  sub->add_option("--tolerance", o.tolerance, "Optimality gap for estimates");
  sub->add_option("--workers", o.workers, "Worker threads");
  sub->add_flag("--deterministic", o.deterministic, "Single worker, reproducible witnesses");
  sub->add_option("--branching", o.branching, "smear | lookahead | widest");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--out", o.out, "Write output here instead of stdout");
  sub->add_option("--format", o.format, "json | csv (scan), json | text (report)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameter-robustness verification and estimation"};
  app.require_subcommand(1);
  Options o;
  CLI::App* verify = app.add_subcommand("verify", "Decide a robustness query");
  CLI::App* estimate = app.add_subcommand("estimate", "Certified eps / sigma enclosure");
  CLI::App* quantize = app.add_subcommand("quantize", "Check a fixed-point quantization");
  CLI::App* scan = app.add_subcommand("scan", "Per-input robustness scan");
  CLI::App* report = app.add_subcommand("report", "Table of eps and sigma over fixtures");
  for (CLI::App* s : {verify, estimate, quantize, scan, report}) add_common(s, o);
  quantize->add_option("--frac-bits", o.frac_bits, "Fractional bits (overrides quant.frac_bits)");
  quantize->add_flag("--search", o.search, "Find the fewest verifying fractional bits");
  scan->add_option("--samples,-n", o.samples, "Number of sampled inputs");
  scan->add_flag("--fast-scan", o.fast_scan, "Grid eps instead of the optimizer");
  report->add_flag("--oracle", o.oracle, "Also print grid-search reference values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  try {
    const bool tabular = (*scan && o.format == "csv") || (*report && o.format == "text");
    if (o.format != "json" && !tabular) {
      throw std::invalid_argument("format '" + o.format + "' is not available for this command");
    }
    if (*verify) return cmd_verify(o);
    if (*estimate) return cmd_estimate(o);
    if (*quantize) return cmd_quantize(o);
    if (*scan) return cmd_scan(o);
    if (*report) return cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "qrobust: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
