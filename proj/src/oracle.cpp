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

#include "qrobust/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "qrobust/optimizer.hpp"

namespace qrobust {

namespace {

constexpr std::int64_t kMaxGridRows = 50'000'000;

// Calls fn(x) for every point of a regular grid with k points per dimension.
template <typename Fn>
void for_each_grid_point(const Box& box, int k, Fn&& fn) {
  const Eigen::Index d = box.size();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd x(d);
  for (;;) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const Interval& r = box[j];
      x[j] = (k == 1 || r.is_point()) ? r.mid()
             : idx[j] == k - 1       ? r.hi
                                     : r.lo + (r.hi - r.lo) * idx[j] / (k - 1);
    }
    fn(x);
    Eigen::Index j = 0;
    while (j < d && ++idx[j] == k) idx[j++] = 0;
    if (j == d) break;
  }
}

struct Spread {
  double f0 = 0.0;
  double fmin = 0.0;
  double fmax = 0.0;
  Eigen::Index argmin = 0;
  Eigen::Index argmax = 0;
};

class GridEvaluator {
 public:
  GridEvaluator(const Network& net, const ParamVector& p0, const Eigen::MatrixXd& grid)
      : ev_(net), p0_(p0.values), grid_(grid) {}

  Spread at(const Eigen::VectorXd& x) {
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    Spread s;
    s.f0 = ev_(std::span<const double>(p0_.data(), static_cast<std::size_t>(p0_.size())), xs);
    s.fmin = s.fmax = s.f0;
    if (grid_.rows() == 0) return s;
    const Eigen::ArrayXd& f = ev_.batch(grid_, xs);
    Eigen::Index lo = 0;
    Eigen::Index hi = 0;
    const double fmin = f.minCoeff(&lo);
    const double fmax = f.maxCoeff(&hi);
    if (fmin < s.fmin) {
      s.fmin = fmin;
      s.argmin = lo;
    }
    if (fmax > s.fmax) {
      s.fmax = fmax;
      s.argmax = hi;
    }
    return s;
  }

  Eigen::VectorXd row(Eigen::Index i) const { return grid_.row(i).transpose(); }

 private:
  FlatEvaluator ev_;
  Eigen::VectorXd p0_;
  const Eigen::MatrixXd& grid_;
};

enum class Target { kEps, kAbove, kBelow };

// Value of `t` at x, or -1 when x does not qualify.
double score(Target t, const Spread& s, double level, Eigen::Index* arg) {
  switch (t) {
    case Target::kEps:
      if (s.f0 - s.fmin >= s.fmax - s.f0) {
        *arg = s.argmin;
        return s.f0 - s.fmin;
      }
      *arg = s.argmax;
      return s.fmax - s.f0;
    case Target::kAbove:
      *arg = s.argmin;
      return (s.f0 >= level && s.fmin < level) ? s.f0 - level : -1.0;
    case Target::kBelow:
      *arg = s.argmax;
      return (s.f0 < level && s.fmax >= level) ? level - s.f0 : -1.0;
  }
  return -1.0;
}

// Best few qualifying inputs of one target, highest value first.
class Candidates {
 public:
  explicit Candidates(int capacity) : capacity_(static_cast<std::size_t>(std::max(1, capacity))) {}

  void offer(double v, GridEvaluator& ge, Eigen::Index arg, const Eigen::VectorXd& x) {
    if (v < 0.0) return;
    if (items_.size() == capacity_ && v <= items_.back().value) return;
    OracleValue o{v, ge.row(arg), x, true};
    auto at = std::upper_bound(items_.begin(), items_.end(), v,
                               [](double a, const OracleValue& b) { return a > b.value; });
    items_.insert(at, std::move(o));
    if (items_.size() > capacity_) items_.pop_back();
  }

  std::vector<OracleValue>& items() { return items_; }

 private:
  std::size_t capacity_;
  std::vector<OracleValue> items_;
};

void offer(OracleValue& best, double v, GridEvaluator& ge, Eigen::Index arg,
           const Eigen::VectorXd& x) {
  if (v < 0.0 || (best.found && v <= best.value)) return;
  best.value = v;
  best.params = ge.row(arg);
  best.x = x;
  best.found = true;
}

void zoom(OracleValue& best, Target t, GridEvaluator& ge, const Box& domain, double level,
          const GridOracleConfig& cfg) {
  Eigen::VectorXd h(domain.size());
  for (Eigen::Index j = 0; j < domain.size(); ++j) {
    h[j] = domain[j].width() / std::max(1, cfg.input_points - 1);
  }
  for (int round = 0; round < cfg.refine_rounds; ++round) {
    Box local(domain.size());
    for (Eigen::Index j = 0; j < domain.size(); ++j) {
      local[j] = intersect(Interval(best.x[j] - h[j], best.x[j] + h[j]), domain[j]);
    }
    for_each_grid_point(local, cfg.refine_points, [&](const Eigen::VectorXd& x) {
      const Spread s = ge.at(x);
      Eigen::Index arg = 0;
      offer(best, score(t, s, level, &arg), ge, arg, x);
    });
    h *= 2.0 / (cfg.refine_points - 1);
  }
}

OracleValue refine(Candidates& c, Target t, GridEvaluator& ge, const Box& domain, double level,
                   const GridOracleConfig& cfg) {
  OracleValue best;
  for (OracleValue& start : c.items()) {
    if (cfg.refine_rounds > 0 && cfg.refine_points >= 2) zoom(start, t, ge, domain, level, cfg);
    if (!best.found || start.value > best.value) best = start;
  }
  return best;
}

struct GlobalOracle {
  explicit GlobalOracle(int starts) : eps(starts), above(starts), below(starts) {}
  Candidates eps;
  Candidates above;
  Candidates below;
};

GlobalOracle grid_global(GridEvaluator& ge, const Box& domain, double level,
                         const GridOracleConfig& cfg) {
  GlobalOracle g(cfg.refine_starts);
  for_each_grid_point(domain, cfg.input_points, [&](const Eigen::VectorXd& x) {
    const Spread s = ge.at(x);
    Eigen::Index arg = 0;
    g.eps.offer(score(Target::kEps, s, level, &arg), ge, arg, x);
    g.above.offer(score(Target::kAbove, s, level, &arg), ge, arg, x);
    g.below.offer(score(Target::kBelow, s, level, &arg), ge, arg, x);
  });
  return g;
}

}  // namespace

Eigen::MatrixXd parameter_grid(const ParamVector& p0, double delta, int k) {
  if (k < 1) throw std::invalid_argument("grid needs at least one point per parameter");
  const Eigen::Index n = p0.size();
  const double rows = std::pow(static_cast<double>(k), static_cast<double>(n));
  if (rows > static_cast<double>(kMaxGridRows)) {
    throw std::invalid_argument("parameter grid too large");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), n);
  Eigen::Index r = 0;
  for_each_grid_point(perturb_box(p0, delta), k, [&](const Eigen::VectorXd& p) {
    out.row(r++) = p.transpose();
  });
  return out;
}

double grid_eps(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0,
                double delta, std::int64_t resolution) {
  if (x0.size() != net.input_dim()) throw std::invalid_argument("x0 dimension mismatch");
  const Eigen::Index n = std::max<Eigen::Index>(1, p0.size());
  const int k = std::max(
      2, static_cast<int>(std::floor(std::pow(static_cast<double>(resolution), 1.0 / n) + 1e-9)));
  const Eigen::MatrixXd grid = parameter_grid(p0, delta, k);
  GridEvaluator ge(net, p0, grid);
  const Spread s = ge.at(x0);
  return std::max(s.f0 - s.fmin, s.fmax - s.f0);
}

OracleValue grid_eps_global(const Network& net, const ParamVector& p0, const Box& domain,
                            double delta, const GridOracleConfig& cfg) {
  if (domain.size() != net.input_dim()) throw std::invalid_argument("domain dimension mismatch");
  const Eigen::MatrixXd grid = parameter_grid(p0, delta, cfg.param_points);
  GridEvaluator ge(net, p0, grid);
  GlobalOracle g = grid_global(ge, domain, net.level(), cfg);
  return refine(g.eps, Target::kEps, ge, domain, net.level(), cfg);
}

OracleValue grid_sigma(const Network& net, const ParamVector& p0, const Box& domain,
                       double delta, Side side, const GridOracleConfig& cfg) {
  if (domain.size() != net.input_dim()) throw std::invalid_argument("domain dimension mismatch");
  const Eigen::MatrixXd grid = parameter_grid(p0, delta, cfg.param_points);
  GridEvaluator ge(net, p0, grid);
  GlobalOracle g = grid_global(ge, domain, net.level(), cfg);
  OracleValue above;
  OracleValue below;
  if (side != Side::kBelow) above = refine(g.above, Target::kAbove, ge, domain, net.level(), cfg);
  if (side != Side::kAbove) below = refine(g.below, Target::kBelow, ge, domain, net.level(), cfg);
  if (side == Side::kAbove) return above;
  if (side == Side::kBelow) return below;
  return (!below.found || (above.found && above.value >= below.value)) ? above : below;
}

GlobalGridValues grid_global_values(const Network& net, const ParamVector& p0, const Box& domain,
                                    double delta, const GridOracleConfig& cfg) {
  if (domain.size() != net.input_dim()) throw std::invalid_argument("domain dimension mismatch");
  const Eigen::MatrixXd grid = parameter_grid(p0, delta, cfg.param_points);
  GridEvaluator ge(net, p0, grid);
  GlobalOracle g = grid_global(ge, domain, net.level(), cfg);
  return {refine(g.eps, Target::kEps, ge, domain, net.level(), cfg),
          refine(g.above, Target::kAbove, ge, domain, net.level(), cfg),
          refine(g.below, Target::kBelow, ge, domain, net.level(), cfg)};
}

bool definition_violated(const RobustnessQuery& q, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& x) {
  validate(q);
  if (p.size() != q.p0.size()) throw std::invalid_argument("parameter dimension mismatch");
  if ((p - q.p0.values).cwiseAbs().maxCoeff() > q.delta) return false;
  const Eigen::VectorXd& input = is_local(q.kind) ? *q.x0 : x;
  if (!is_local(q.kind) && !contains(*q.domain, input)) return false;
  const double f0 = forward(unflatten<double>(q.net, q.p0.values), input);
  const double fp = forward(unflatten<double>(q.net, p), input);
  const double l = q.level();
  const bool flipped = (f0 >= l) != (fp >= l);
  switch (q.kind) {
    case QueryKind::kLocalEps:
    case QueryKind::kGlobalEps: return std::abs(f0 - fp) > *q.epsilon;
    case QueryKind::kLocalFlip:
    case QueryKind::kGlobalFlip: return flipped;
    case QueryKind::kSigmaFlip: return std::abs(f0 - l) >= *q.sigma && flipped;
  }
  return false;
}

std::optional<Eigen::VectorXd> falsify(const Formula& f, std::int64_t samples,
                                       std::uint64_t seed, double slack) {
  CompiledFormula cf(f);
  Prober prober(cf);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Box& dom = cf.domain();
  Eigen::VectorXd pt(dom.size());
  for (std::int64_t i = 0; i < samples; ++i) {
    for (Eigen::Index v = 0; v < dom.size(); ++v) {
      pt[v] = dom[v].lo + (dom[v].hi - dom[v].lo) * u(rng);
    }
    if (!prober.complete(pt)) continue;
    if (prober.violation(pt, slack) <= 0.0) return pt;
  }
  return std::nullopt;
}

std::vector<ScanRecord> scan_inputs(const Network& net, const ParamVector& p0, const Box& domain,
                                    double delta, std::int64_t n, std::uint64_t seed,
                                    const ScanOptions& opts) {
  if (n < 1) throw std::invalid_argument("scan needs n >= 1");
  if (domain.size() != net.input_dim()) throw std::invalid_argument("domain dimension mismatch");
  opts.solver.validate();

  std::vector<ScanRecord> out(static_cast<std::size_t>(n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::int64_t i = 0; i < n; ++i) {
    ScanRecord& r = out[static_cast<std::size_t>(i)];
    r.index = i;
    r.x.resize(domain.size());
    for (Eigen::Index j = 0; j < domain.size(); ++j) {
      r.x[j] = domain[j].lo + (domain[j].hi - domain[j].lo) * u(rng);
    }
  }

  const Network ref = unflatten<double>(net, p0.values);
  const Box pbox = perturb_box(p0, delta);
  SolverConfig inner = opts.solver;
  inner.workers = 1;
  auto fill = [&](ScanRecord& r) {
    r.confidence = forward(ref, r.x);
    r.label = r.confidence >= net.level() ? 1 : 0;
    r.margin = std::abs(r.confidence - net.level());
    if (opts.fast) {
      r.eps_lower = grid_eps(net, p0, r.x, delta, opts.grid_resolution);
      const Interval enc = interval_forward(net, pbox, point_box(r.x));
      r.eps_upper = std::max(r.confidence - enc.lo, enc.hi - r.confidence);
    } else {
      const Estimate e = estimate_eps_local(net, p0, r.x, delta, inner, opts.tolerance);
      r.eps_lower = e.lower;
      r.eps_upper = e.upper;
    }
    RobustnessQuery q = RobustnessQuery::local_flip(net, r.x, delta);
    q.p0 = p0;
    const Verdict v = decide(encode(q), inner);
    r.flippable = is_delta_sat(v) ? 1 : is_unsat(v) ? 0 : -1;
  };

  const int workers = opts.solver.deterministic ? 1 : opts.solver.workers;
  if (workers == 1) {
    for (ScanRecord& r : out) fill(r);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < out.size();
             i += static_cast<std::size_t>(workers)) {
          fill(out[i]);
        }
      });
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_scan_csv(std::ostream& os, const std::vector<ScanRecord>& records) {
  const Eigen::Index d = records.empty() ? 0 : records.front().x.size();
  os << "index";
  for (Eigen::Index j = 0; j < d; ++j) os << ",x" << (j + 1);
  os << ",confidence,label,margin,eps_lower,eps_upper,flippable\n";
  for (const ScanRecord& r : records) {
    os << r.index;
    for (Eigen::Index j = 0; j < d; ++j) os << ',' << fmt(r.x[j]);
    os << ',' << fmt(r.confidence) << ',' << r.label << ',' << fmt(r.margin) << ','
       << fmt(r.eps_lower) << ',' << fmt(r.eps_upper) << ','
       << (r.flippable < 0 ? "unknown" : r.flippable ? "1" : "0") << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& path, const std::vector<std::string>& features,
                     const std::string& label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const std::vector<std::string> header = split_csv(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error(path + ": no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  Dataset ds;
  const std::size_t label_col = label.empty() ? header.size() - 1 : column(label);
  ds.label = header[label_col];
  std::vector<std::size_t> cols;
  if (features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != label_col) cols.push_back(c);
    }
  } else {
    for (const std::string& f : features) cols.push_back(column(f));
  }
  for (std::size_t c : cols) ds.features.push_back(header[c]);
  if (cols.empty()) throw std::runtime_error(path + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (cells.size() != header.size()) {
      throw std::runtime_error(where + "expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(cells.size()));
    }
    auto number = [&](std::size_t c) {
      double v = 0.0;
      const std::string& s = cells[c];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw std::runtime_error(where + "bad number '" + s + "' in column '" + header[c] + "'");
      }
      return v;
    };
    std::vector<double> row;
    for (std::size_t c : cols) row.push_back(number(c));
    const double y = number(label_col);
    if (y != 0.0 && y != 1.0) throw std::runtime_error(where + "label must be 0 or 1");
    rows.push_back(std::move(row));
    labels.push_back(static_cast<int>(y));
  }
  ds.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    ds.y[static_cast<Eigen::Index>(i)] = labels[i];
  }
  return ds;
}

Box domain_from_dataset(const Dataset& data) {
  if (data.x.rows() == 0) throw std::invalid_argument("empty dataset");
  return make_box(data.x.colwise().minCoeff().transpose(), data.x.colwise().maxCoeff().transpose());
}

double accuracy(const Network& net, const Dataset& data) {
  if (data.x.rows() == 0) throw std::invalid_argument("empty dataset");
  if (data.x.cols() != net.input_dim()) throw std::invalid_argument("feature count mismatch");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    if (classify(net, data.x.row(i).transpose()) == data.y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.x.rows());
}

}  // namespace qrobust
