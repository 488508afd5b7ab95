// Copyright 2026 The ltk Authors.
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

#include "ltk/stats_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltk/error.hpp"
#include "ltk/io.hpp"

namespace ltk {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error("spearman: length mismatch (" + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw Error("spearman: need at least 2 observations");
  for (double v : x) {
    if (std::isnan(v)) throw Error("spearman: NaN input");
  }
  for (double v : y) {
    if (std::isnan(v)) throw Error("spearman: NaN input");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("spearman: constant input vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y) {
  std::vector<double> dx(x.begin(), x.end());
  std::vector<double> dy(y.begin(), y.end());
  return spearman_rho(std::span<const double>(dx), std::span<const double>(dy));
}

double ScalingFit::accuracy_at(double params) const {
  return intercept + slope * std::log10(params);
}

ScalingFit fit_log_linear(std::span<const ScalingPoint> points) {
  if (points.size() < 2) throw Error("scaling fit: need at least 2 points");
  std::vector<double> xs;
  xs.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.params >= 1.0) || !std::isfinite(p.params)) {
      throw Error("scaling fit: parameter counts must be finite and >= 1");
    }
    if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0)) {
      throw Error("scaling fit: accuracy outside [0,1]");
    }
    xs.push_back(std::log10(p.params));
  }
  const double n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += points[i].accuracy;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = points[i].accuracy - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error("scaling fit: need at least 2 distinct parameter counts");

  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = points[i].accuracy - (fit.intercept + fit.slope * xs[i]);
      ss_res += r * r;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  fit.points.assign(points.begin(), points.end());
  return fit;
}

double extrapolate_size(const ScalingFit& fit, double target_accuracy) {
  if (!(fit.slope > 0.0)) throw Error("extrapolation undefined for non-positive slope");
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
    throw Error("target accuracy must lie in (0, 1]");
  }
  return std::pow(10.0, (target_accuracy - fit.intercept) / fit.slope);
}

std::string fit_to_json(const ScalingFit& fit, const double* target_accuracy) {
  io::Json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r2"] = fit.r_squared;
  j["n"] = fit.points.size();
  if (target_accuracy != nullptr) {
    j["target_accuracy"] = *target_accuracy;
    j["extrapolated_params"] = extrapolate_size(fit, *target_accuracy);
  }
  return j.dump(2) + "\n";
}

std::vector<std::uint64_t> scale_counts(std::span<const std::uint64_t> counts, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw Error("scale factor must be positive");
  std::vector<std::uint64_t> out;
  out.reserve(counts.size());
  for (auto c : counts) {
    const long double scaled = std::floor(static_cast<long double>(c) * factor + 0.5L);
    if (scaled >= 18446744073709551616.0L) throw Error("scaled count overflows 64 bits");
    out.push_back(static_cast<std::uint64_t>(scaled));
  }
  return out;
}

double rare_slice_mean(std::span<const std::uint64_t> counts, std::span<const double> values,
                       std::uint64_t threshold) {
  if (counts.size() != values.size()) throw Error("rare slice: length mismatch");
  double sum = 0.0;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < threshold) {
      sum += values[i];
      ++n;
    }
  }
  if (n == 0) throw Error("rare slice is empty (no counts below " + std::to_string(threshold) + ")");
  return sum / static_cast<double>(n);
}

}  // namespace ltk
