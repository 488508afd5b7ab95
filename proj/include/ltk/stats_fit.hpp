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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ltk {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation: Pearson correlation of average ranks.
// Requires equal lengths >= 2 and no constant input.
double spearman_rho(std::span<const double> x, std::span<const double> y);
double spearman_rho(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y);

struct ScalingPoint {
  double params = 1.0;
  double accuracy = 0.0;
};

// Ordinary least squares of accuracy on log10(params).
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<ScalingPoint> points;

  double accuracy_at(double params) const;
};

ScalingFit fit_log_linear(std::span<const ScalingPoint> points);

// Parameter count at which the fit reaches `target_accuracy`:
// 10^((target - intercept) / slope). Needs slope > 0 and target in (0, 1].
double extrapolate_size(const ScalingFit& fit, double target_accuracy);

// {"slope", "intercept", "r2", "n"} plus "extrapolated_params" when given.
std::string fit_to_json(const ScalingFit& fit, const double* target_accuracy = nullptr);

// Multiplies each count by `factor` (> 0) and rounds half up.
std::vector<std::uint64_t> scale_counts(std::span<const std::uint64_t> counts, double factor);

// Mean of `values` over records whose count is below `threshold`: the
// rare-slice accuracy fed to scaling fits. Throws if the slice is empty.
double rare_slice_mean(std::span<const std::uint64_t> counts, std::span<const double> values,
                       std::uint64_t threshold = 100);

}  // namespace ltk
