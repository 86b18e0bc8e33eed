// Copyright 2026 The skillmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SKILLMPC_ABLATION_H_
#define SKILLMPC_ABLATION_H_

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skillmpc/config.h"
#include "skillmpc/training.h"

namespace skillmpc {

inline double Median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("Median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double StdDev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// (a - b) / |b|
inline double RelativeImprovement(double a, double b) {
  if (b == 0.0) throw InvalidInput("RelativeImprovement: zero baseline");
  return (a - b) / std::abs(b);
}

// Returns are negative, so "within 10% of the best" is best - 0.1 |best|.
inline double ReturnThreshold(double best_final) {
  return best_final - 0.1 * std::abs(best_final);
}

struct VariantSummary {
  AblationVariant variant = AblationVariant::kFull;
  std::vector<double> final_returns;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;
  // Eval step -> median over seeds of the eval return.
  std::vector<EvalPoint> median_curve;
  std::optional<int> steps_to_threshold;
  std::vector<int> env_steps;  // budget actually charged, per seed
};

struct AblationSummary {
  std::vector<VariantSummary> rows;
  std::vector<std::uint64_t> seeds;
  double threshold = 0.0;

  const VariantSummary& Row(AblationVariant v) const {
    for (const VariantSummary& r : rows) {
      if (r.variant == v) return r;
    }
    throw InvalidInput("AblationSummary: variant not run");
  }

  // Pairs (a, b) with mean(a) > mean(b).
  std::vector<std::pair<AblationVariant, AblationVariant>> Ordering() const {
    std::vector<std::pair<AblationVariant, AblationVariant>> out;
    for (const auto& a : rows) {
      for (const auto& b : rows) {
        if (a.mean > b.mean) out.emplace_back(a.variant, b.variant);
      }
    }
    return out;
  }

  bool EqualBudgets() const {
    std::set<int> budgets;
    for (const auto& r : rows) budgets.insert(r.env_steps.begin(), r.env_steps.end());
    return budgets.size() == 1;
  }
};

inline nlohmann::json ToJson(const AblationSummary& s) {
  nlohmann::ordered_json j;
  j["seeds"] = s.seeds;
  j["threshold"] = s.threshold;
  j["equal_budgets"] = s.EqualBudgets();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  double best_other = -std::numeric_limits<double>::infinity();
  for (const auto& r : s.rows) {
    if (r.variant != AblationVariant::kFull) best_other = std::max(best_other, r.mean);
  }
  for (const auto& r : s.rows) {
    nlohmann::ordered_json row;
    row["variant"] = ToString(r.variant);
    row["mean_final_return"] = r.mean;
    row["std_final_return"] = r.stddev;
    row["final_returns"] = r.final_returns;
    row["steps_to_threshold"] = r.steps_to_threshold
                                    ? nlohmann::ordered_json(*r.steps_to_threshold)
                                    : nlohmann::ordered_json(nullptr);
    row["env_steps"] = r.env_steps;
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const EvalPoint& p : r.median_curve) curve.push_back({p.step, p.mean_return});
    row["median_eval_curve"] = curve;
    rows.push_back(row);
  }
  j["variants"] = rows;
  nlohmann::ordered_json order = nlohmann::ordered_json::array();
  for (const auto& [a, b] : s.Ordering()) {
    order.push_back(std::string(ToString(a)) + " > " + std::string(ToString(b)));
  }
  j["ordering"] = order;
  // Two baselines for the improvement column: each other variant, and the
  // best of them.
  bool has_full = false;
  for (const auto& r : s.rows) has_full |= r.variant == AblationVariant::kFull;
  if (has_full && s.rows.size() > 1) {
    const double full = s.Row(AblationVariant::kFull).mean;
    nlohmann::ordered_json imp;
    for (const auto& r : s.rows) {
      if (r.variant == AblationVariant::kFull || r.mean == 0.0) continue;
      imp[std::string("vs_") + std::string(ToString(r.variant))] =
          RelativeImprovement(full, r.mean);
    }
    if (best_other != 0.0) imp["vs_best_other"] = RelativeImprovement(full, best_other);
    j["full_relative_improvement"] = imp;
  }
  return nlohmann::json::parse(j.dump());
}

inline std::string FormatTable(const AblationSummary& s) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %12s %10s %10s %12s\n", "variant",
                "mean_return", "std", "seeds", "steps_to_thr");
  out += line;
  for (const auto& r : s.rows) {
    const std::string thr =
        r.steps_to_threshold ? std::to_string(*r.steps_to_threshold) : "never";
    std::snprintf(line, sizeof(line), "%-16s %12.3f %10.3f %10zu %12s\n",
                  std::string(ToString(r.variant)).c_str(), r.mean, r.stddev,
                  r.final_returns.size(), thr.c_str());
    out += line;
  }
  std::snprintf(line, sizeof(line), "threshold: %.3f\n", s.threshold);
  out += line;
  return out;
}

using AblationProgress =
    std::function<void(AblationVariant, std::uint64_t seed, const RunResult&)>;

// Runs every variant over the same seeds and step budget. A variant's final
// return is the mean over seeds of each run's last evaluation.
// Steps-to-threshold is the first eval step at which the seed-median eval
// return reaches ReturnThreshold(best variant mean final return).
inline AblationSummary RunAblation(const RunConfig& base,
                                   const std::vector<AblationVariant>& variants,
                                   const AblationProgress& progress = nullptr) {
  if (variants.size() < 2) throw InvalidInput("RunAblation: need at least two variants");
  std::set<AblationVariant> unique(variants.begin(), variants.end());
  if (unique.size() != variants.size()) {
    throw InvalidInput("RunAblation: duplicate variant");
  }
  AblationSummary summary;
  summary.seeds = base.seeds;
  for (AblationVariant v : variants) {
    const RunConfig cfg = ApplyVariant(base, v);
    VariantSummary row;
    row.variant = v;
    std::vector<std::vector<EvalPoint>> curves;
    for (std::uint64_t seed : base.seeds) {
      RunResult r = RunTraining(cfg, seed);
      row.final_returns.push_back(r.final_return);
      row.env_steps.push_back(r.env_steps);
      curves.push_back(r.evals);
      if (progress) progress(v, seed, r);
    }
    row.mean = Mean(row.final_returns);
    row.stddev = StdDev(row.final_returns);
    for (std::size_t k = 0; k < curves.front().size(); ++k) {
      std::vector<double> at_k;
      for (const auto& c : curves) at_k.push_back(c.at(k).mean_return);
      row.median_curve.push_back({curves.front()[k].step, Median(at_k)});
    }
    summary.rows.push_back(std::move(row));
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : summary.rows) best = std::max(best, r.mean);
  summary.threshold = ReturnThreshold(best);
  for (auto& r : summary.rows) {
    for (const EvalPoint& p : r.median_curve) {
      if (p.mean_return >= summary.threshold) {
        r.steps_to_threshold = p.step;
        break;
      }
    }
  }
  return summary;
}

}  // namespace skillmpc

#endif  // SKILLMPC_ABLATION_H_
