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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "json.hpp"
#include "qrobust/encoder.hpp"
#include "qrobust/optimizer.hpp"
#include "qrobust/oracle.hpp"
#include "qrobust/quantization.hpp"
#include "qrobust/solver.hpp"

namespace qrobust {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
using testing::all_fixtures;
using testing::data_path;
using testing::Fixture;

// Pinned tolerances.
constexpr double kOracleAgreement = 1e-3;
constexpr double kEstimateTolerance = 1e-4;
constexpr double kToyAgreement = 1e-4;
constexpr double kToyTolerance = 2e-5;  // gap requested from the optimizer
constexpr double kMonotoneSlack = 2 * kEstimateTolerance;
constexpr double kBridgeSlack = 1e-6;
constexpr double kScanSlack = 1e-3;
constexpr double kCatQuerySeconds = 60.0;
constexpr double kToySeconds = 10.0;
constexpr double kSoundnessSeconds = 300.0;
constexpr double kTotalSeconds = 600.0;
constexpr int kDenseParamPoints = 47;  // 47^3 = 103823 parameter samples
constexpr int kDenseInputPoints = 100;  // 100^2 input grid
constexpr int kSoundnessFormulas = 120;
constexpr std::int64_t kFalsifierSamples = 100'000;
constexpr int kEquivalenceSamples = 10'000;
constexpr int kQuantVectors = 10'000;
constexpr std::int64_t kScanSamples = 1000;

int failures = 0;

void verdict(const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  failures += !pass;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

std::string enclosure(double lo, double hi) { return "[" + fmt(lo) + ", " + fmt(hi) + "]"; }

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(QROBUST_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("qrobust_acc_" + name);
  std::ofstream(p) << text;
  return p.string();
}

bool within(double v, double lo, double hi, double tol) { return v >= lo - tol && v <= hi + tol; }

// --- Cat fixture against the dense grid --------------------------------------

void cat_table() {
  const Network net = load_network(data_path("cat.json"));
  const Box domain = domain_from_dataset(load_dataset(data_path("cats.csv")));
  const json dom{{"dataset", data_path("cats.csv")}, {"features", {"Hwt", "Bwt"}},
                 {"label", "male"}};
  const std::map<double, std::array<double, 3>> published = {{0.005, {0.00691, 0.024, 0.021}},
                                                         {0.01, {0.05054, 0.052, 0.04}}};
  GridOracleConfig dense;
  dense.param_points = kDenseParamPoints;
  dense.input_points = kDenseInputPoints;

  bool agree = true;
  bool fast = true;
  bool converged = true;
  double slowest = 0.0;
  std::map<double, std::array<std::array<double, 2>, 3>> enc;
  for (const auto& [delta, ref] : published) {
    const GlobalGridValues g = grid_global_values(net, flatten(net), domain, delta, dense);
    const std::array<double, 3> oracle = {g.eps.value, g.sigma_above.value, g.sigma_below.value};
    const std::array<std::pair<std::string, std::string>, 3> kinds = {
        std::pair{"global_eps", "both"}, std::pair{"sigma_flip", "above"},
        std::pair{"sigma_flip", "below"}};
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const json q{{"kind", kinds[k].first}, {"delta", delta},   {"side", kinds[k].second},
                   {"domain", dom},          {"model", data_path("cat.json")},
                   {"reference", ref[k]}};
      const std::string path = temp_file("cat_query.json", q.dump());
      const auto t0 = Clock::now();
      const Run r = cli("estimate --query " + path + " --tolerance " + fmt(kEstimateTolerance));
      const double secs = seconds_since(t0);
      slowest = std::max(slowest, secs);
      fast = fast && secs < kCatQuerySeconds;
      if (r.code != 0) {
        verdict("cat.cli", false, "estimate exited with " + std::to_string(r.code));
        return;
      }
      const json j = json::parse(r.out);
      const json& e = j.at(k == 0 ? "eps" : "sigma");
      const double lo = e.at("lower");
      const double hi = e.at("upper");
      converged = converged && e.at("converged").get<bool>();
      enc[delta][k] = {lo, hi};
      const bool ok = within(oracle[k], lo, hi, kOracleAgreement) && oracle[k] <= hi + 1e-12;
      agree = agree && ok;
      std::cout << "  cat delta=" << delta << " " << (k == 0 ? "eps" : kinds[k].second)
                << " certified " << enclosure(lo, hi) << " dense grid " << fmt(oracle[k])
                << " published " << j.value("reference", ref[k]) << " (" << fmt(secs, 3) << " s)"
                << std::endl;
    }
  }
  verdict("cat.oracle_agreement", agree && converged,
          "every certified eps/sigma enclosure is within " + fmt(kOracleAgreement) +
              " of the dense-grid value (47^3 parameters x 100^2 inputs)");
  const bool eps_mono = enc[0.005][0][1] < enc[0.01][0][0];
  const bool sig_mono =
      enc[0.005][1][1] < enc[0.01][1][0] && enc[0.005][2][1] < enc[0.01][2][0];
  verdict("cat.delta_ordering", eps_mono && sig_mono,
          "eps*(0.005) < eps*(0.01) and sigma*(0.005) < sigma*(0.01) on both sides");
  verdict("cat.runtime", fast, "slowest estimate " + fmt(slowest, 3) + " s (limit " +
                                    fmt(kCatQuerySeconds) + " s)");
}

// --- Table-style report with oracle values ----------------------------------------

void report_table() {
  const auto t0 = Clock::now();
  const Run r = cli("report --query " + data_path("report.json") + " --oracle --tolerance " +
                    fmt(kEstimateTolerance));
  if (r.code != 0) {
    verdict("report.oracle_containment", false, "report exited with " + std::to_string(r.code));
    return;
  }
  const json j = json::parse(r.out);
  bool ok = true;
  int cells = 0;
  for (const json& fx : j.at("fixtures")) {
    const std::string name = fx.at("name");
    for (const json& row : fx.at("results")) {
      for (const char* key : {"eps", "sigma_above", "sigma_below"}) {
        const double lo = row.at(key)[0];
        const double hi = row.at(key)[1];
        const double g = row.at("oracle").at(key);
        const bool in = within(g, lo, hi, kOracleAgreement);
        ok = ok && in;
        ++cells;
        if (name.rfind("ATH", 0) == 0 || !in) {
          std::cout << "  " << name << " delta=" << row.at("delta").get<double>() << " " << key
                    << " " << enclosure(lo, hi) << " grid " << fmt(g) << std::endl;
        }
      }
    }
  }
  verdict("report.oracle_containment", ok,
          std::to_string(cells) + " enclosures contain their grid value within " +
              fmt(kOracleAgreement) + " (" + fmt(seconds_since(t0), 3) + " s)");
}

// --- Closed-form toys ------------------------------------------------------------

void toys() {
  SolverConfig cfg;
  cfg.precision = 1e-6;
  const Network wx = load_network(data_path("toy_wx.json"));
  const Network xb = load_network(data_path("toy_xb.json"));
  const Box d = testing::interval_box({Interval(-1.0, 1.0)});

  auto check = [&](const std::string& name, double target, auto&& fn) {
    const auto t0 = Clock::now();
    const Estimate e = fn();
    const double secs = seconds_since(t0);
    const bool ok = std::abs(e.lower - target) <= kToyAgreement &&
                    std::abs(e.upper - target) <= kToyAgreement && secs < kToySeconds;
    verdict(name, ok,
            enclosure(e.lower, e.upper) + " vs " + fmt(target) + " +- " + fmt(kToyAgreement) +
                " in " + fmt(secs, 3) + " s");
  };
  check("toy.eps_local_wx", 0.02011, [&] {
    return estimate_eps_local(wx, flatten(wx), testing::vec({1.0}), 0.1, cfg, kToyTolerance);
  });
  check("toy.eps_global_xb", 0.02498, [&] {
    return estimate_eps_global(xb, flatten(xb), d, 0.1, cfg, kToyTolerance);
  });
  check("toy.sigma_above_xb", 0.02498, [&] {
    return estimate_sigma(xb, flatten(xb), d, 0.1, Side::kAbove, cfg, kToyTolerance);
  });
}

// --- Solver soundness --------------------------------------------------------------

void soundness() {
  const auto t0 = Clock::now();
  testing::FormulaGenerator gen(424242);
  SolverConfig cfg;
  int unsat = 0;
  int sat = 0;
  int unknown = 0;
  int falsified = 0;
  int bad_witness = 0;
  for (int i = 0; i < kSoundnessFormulas; ++i) {
    const Formula f = gen.next();
    const Verdict v = decide(f, cfg);
    if (is_unsat(v)) {
      ++unsat;
      falsified += falsify(f, kFalsifierSamples, static_cast<std::uint64_t>(i)).has_value();
    } else if (const auto* s = std::get_if<DeltaSat>(&v)) {
      ++sat;
      bad_witness += !check_point(f, s->witness, cfg.precision);
    } else {
      ++unknown;
    }
  }
  const double secs = seconds_since(t0);
  verdict("solver.soundness", falsified == 0 && bad_witness == 0 && secs < kSoundnessSeconds,
          std::to_string(kSoundnessFormulas) + " formulas: " + std::to_string(unsat) +
              " unsat (" + std::to_string(falsified) + " falsified), " + std::to_string(sat) +
              " delta-sat (" + std::to_string(bad_witness) + " bad witnesses), " +
              std::to_string(unknown) + " unknown, " + fmt(secs, 3) + " s");
}

// --- Encoding equivalence ----------------------------------------------------------

void equivalence() {
  std::mt19937_64 rng(31337);
  constexpr double kDelta = 0.05;
  int mismatches = 0;
  long checked = 0;
  for (const Fixture& fx : all_fixtures()) {
    const ParamVector p0 = flatten(fx.net);
    const Eigen::VectorXd x0 = testing::near_level(fx, rng);
    const GlobalGridValues g = grid_global_values(fx.net, p0, fx.domain, kDelta);
    const double local = grid_eps(fx.net, p0, x0, kDelta, 4096);
    const double sigma = std::max(g.sigma_above.value, g.sigma_below.value);
    const std::vector<RobustnessQuery> queries = {
        RobustnessQuery::local_eps(fx.net, x0, kDelta, 0.5 * local),
        RobustnessQuery::global_eps(fx.net, fx.domain, kDelta, 0.5 * g.eps.value),
        RobustnessQuery::local_flip(fx.net, x0, kDelta),
        RobustnessQuery::global_flip(fx.net, fx.domain, kDelta),
        RobustnessQuery::sigma_flip(fx.net, fx.domain, kDelta, 0.5 * sigma),
    };
    const Box pb = perturb_box(p0, kDelta);
    for (const RobustnessQuery& q : queries) {
      const Formula f = encode(q);
      for (int i = 0; i < kEquivalenceSamples; ++i) {
        const Eigen::VectorXd p = testing::sample(pb, rng);
        const Eigen::VectorXd x = testing::sample(fx.domain, rng);
        Eigen::VectorXd pt = p;
        if (!is_local(q.kind)) {
          pt.resize(p.size() + x.size());
          pt << p, x;
        }
        mismatches += definition_violated(q, p, x) != check_point(f, pt, 0.0);
        ++checked;
      }
    }
  }
  verdict("encoding.equivalence", mismatches == 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(checked) +
              " samples (5 fixtures x 5 query kinds x " + std::to_string(kEquivalenceSamples) +
              ")");
}

// --- Monotonicity and bridges ------------------------------------------------------

void monotonicity() {
  const auto t0 = Clock::now();
  const std::array<double, 4> deltas = {0.0025, 0.005, 0.01, 0.02};
  bool mono = true;
  bool bridge = true;
  std::string worst;
  for (const Fixture& fx : all_fixtures()) {
    const ParamVector p0 = flatten(fx.net);
    std::array<std::vector<Estimate>, 3> series;  // eps, sigma above, sigma below
    for (double d : deltas) {
      series[0].push_back(estimate_eps_global(fx.net, p0, fx.domain, d));
      series[1].push_back(estimate_sigma(fx.net, p0, fx.domain, d, Side::kAbove));
      series[2].push_back(estimate_sigma(fx.net, p0, fx.domain, d, Side::kBelow));
    }
    for (const auto& s : series) {
      for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        const bool ok = s[k + 1].lower >= s[k].lower - kMonotoneSlack &&
                        s[k + 1].upper >= s[k].upper - kMonotoneSlack;
        if (!ok) worst += " " + fx.name;
        mono = mono && ok;
      }
    }
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      const double eps_hi = series[0][k].upper;
      const bool ok = series[1][k].lower <= eps_hi + kBridgeSlack &&
                      series[2][k].lower <= eps_hi + kBridgeSlack;
      bridge = bridge && ok;
    }
  }
  verdict("estimates.monotone_in_delta", mono,
          "eps* and sigma* nondecreasing over delta in {0.0025, 0.005, 0.01, 0.02} on 5 fixtures"
          " (slack " + fmt(kMonotoneSlack) + ")" + (worst.empty() ? "" : "; broken on" + worst));
  verdict("estimates.sigma_below_eps", bridge,
          "sigma* <= eps*_global + " + fmt(kBridgeSlack) + " on every fixture and delta (" +
              fmt(seconds_since(t0), 3) + " s for both checks)");
}

// --- Quantization loop -------------------------------------------------------------

void quantization() {
  const Network net = load_network(data_path("cat.json"));
  const Box domain = domain_from_dataset(load_dataset(data_path("cats.csv")));
  const ParamVector p0 = flatten(net);
  const Estimate ref = estimate_eps_global(net, p0, domain, std::ldexp(1.0, -9));
  const RobustnessQuery q = RobustnessQuery::global_eps(net, domain, 0.0, 2.0 * ref.upper);
  const SafeBitsResult r = safe_bits_search(q);
  if (!r.frac_bits) {
    verdict("quantization.safe_bits", false, "no verifying width found");
  } else {
    const int f = *r.frac_bits;
    const QuantVerification at = verify_quantized(q, QuantScheme{f});
    bool below_sat = false;
    if (f > 0) below_sat = is_delta_sat(verify_quantized(q, QuantScheme{f - 1}).box);
    verdict("quantization.safe_bits", is_unsat(at.box) && below_sat,
            "eps target " + fmt(2.0 * ref.upper) + ": f = " + std::to_string(f) + " verifies (" +
                std::string(verdict_name(at.box)) + "), f - 1 is " +
                (below_sat ? "delta-sat" : "not delta-sat"));
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> bits(0, 40);
  int violations = 0;
  for (int i = 0; i < kQuantVectors; ++i) {
    ParamVector p;
    p.values.resize(p0.size());
    p.index_map = p0.index_map;
    for (Eigen::Index k = 0; k < p.values.size(); ++k) p.values[k] = u(rng);
    const QuantScheme s{bits(rng)};
    const QuantReport qr = quantize(p, s);
    violations += (qr.quantized.values - p.values).cwiseAbs().maxCoeff() >
                  std::ldexp(1.0, -(s.frac_bits + 1));
  }
  verdict("quantization.error_bound", violations == 0,
          std::to_string(violations) + " of " + std::to_string(kQuantVectors) +
              " random vectors exceed 2^-(f+1)");
}

// --- Scan reproduction -------------------------------------------------------------

void scan() {
  constexpr double kDelta = 0.01;
  const json q{{"kind", "global_flip"},
               {"delta", kDelta},
               {"domain", {{"dataset", data_path("cats.csv")}}},
               {"model", data_path("cat.json")}};
  const std::string path = temp_file("scan_query.json", q.dump());
  const std::string args =
      "scan --query " + path + " -n " + std::to_string(kScanSamples) + " --seed 20190601";
  const auto t0 = Clock::now();
  const Run a = cli(args + " --format csv");
  const double secs = seconds_since(t0);
  const Run b = cli(args + " --format csv");
  const Run c = cli(args + " --format csv --workers 4");
  if (a.code != 0) {
    verdict("scan.sigma_consistency", false, "scan exited with " + std::to_string(a.code));
    return;
  }
  verdict("scan.reproducible", a.out == b.out && a.out == c.out,
          "fixed seed gives byte-identical CSV across runs and worker counts");

  const Network net = load_network(data_path("cat.json"));
  const Box domain = domain_from_dataset(load_dataset(data_path("cats.csv")));
  const double above = estimate_sigma(net, flatten(net), domain, kDelta, Side::kAbove).upper;
  const double below = estimate_sigma(net, flatten(net), domain, kDelta, Side::kBelow).upper;

  std::istringstream in(a.out);
  std::string line;
  std::getline(in, line);
  const bool header = line == "index,x1,x2,confidence,label,margin,eps_lower,eps_upper,flippable";
  int rows = 0;
  int flippable = 0;
  int inconsistent = 0;
  int undecided = 0;
  int beyond = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) {
      ++inconsistent;
      continue;
    }
    ++rows;
    const int label = std::stoi(cells[4]);
    const double margin = std::stod(cells[5]);
    const double bound = label == 1 ? above : below;
    if (cells[8] == "unknown") {
      ++undecided;
    } else if (cells[8] == "1") {
      ++flippable;
      // A flagged point beyond sigma*_upper contradicts the certified bound.
      inconsistent += margin > bound + kScanSlack;
      beyond += margin > bound;
    }
  }
  verdict("scan.sigma_consistency",
          header && rows == kScanSamples && inconsistent == 0 && beyond == 0 && undecided == 0,
          std::to_string(rows) + " rows, " + std::to_string(flippable) +
              " flippable, all within sigma*_upper + " + fmt(kScanSlack) + " (above " +
              fmt(above) + ", below " + fmt(below) + "); " + std::to_string(inconsistent + beyond) +
              " inconsistent, " + std::to_string(undecided) + " undecided, " + fmt(secs, 3) +
              " s");
}

}  // namespace
}  // namespace qrobust

int main() {
  using namespace qrobust;
  const auto t0 = Clock::now();
  cat_table();
  report_table();
  toys();
  soundness();
  equivalence();
  monotonicity();
  quantization();
  scan();
  const double secs = seconds_since(t0);
  verdict("suite.runtime", secs < kTotalSeconds,
          "acceptance run took " + fmt(secs, 4) + " s (limit " + fmt(kTotalSeconds) + " s)");
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
