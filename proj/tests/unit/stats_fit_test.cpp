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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ltk/error.hpp"
#include "ltk/io.hpp"
#include "ltk/rng.hpp"
#include "ltk/stats_fit.hpp"

using namespace ltk;

namespace {

double rho(const std::vector<double>& x, const std::vector<double>& y) {
  return spearman_rho(std::span<const double>(x), std::span<const double>(y));
}

// Slope and intercept from the 2x2 normal equations, in long double.
std::pair<double, double> ols(const std::vector<ScalingPoint>& pts) {
  long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const long double x = std::log10(static_cast<long double>(p.params));
    n += 1;
    sx += x;
    sy += p.accuracy;
    sxx += x * x;
    sxy += x * p.accuracy;
  }
  const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {static_cast<double>(slope), static_cast<double>((sy - slope * sx) / n)};
}

}  // namespace

TEST_CASE("average ranks") {
  const std::vector<double> v{10, 20, 20, 5, 20};
  CHECK(average_ranks(v) == std::vector<double>{2, 4, 4, 1, 4});
}

TEST_CASE("spearman fixtures") {
  CHECK(rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(rho({1, 2, 2, 3}, {1, 3, 2, 4}) - 4.5 / std::sqrt(22.5)) < 1e-12);
  CHECK(std::abs(rho({1, 1, 2, 2}, {1, 2, 1, 2})) < 1e-12);
  const std::vector<std::uint64_t> a{3, 1, 2};
  const std::vector<std::uint64_t> b{30, 10, 20};
  CHECK(spearman_rho(std::span<const std::uint64_t>(a), std::span<const std::uint64_t>(b)) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(rho({1, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(rho({1}, {1}), Error);
  CHECK_THROWS_AS(rho({1, 1, 1}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(rho({1, NAN}, {1, 2}), Error);
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 3 + rng.below(40);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::floor(u(rng.engine()));
      y[i] = x[i] + u(rng.engine());
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    const double base = rho(x, y);
    std::vector<double> tx(n);
    std::vector<double> ty(n);
    for (std::size_t i = 0; i < n; ++i) {
      tx[i] = std::exp(x[i]);
      ty[i] = std::pow(y[i], 3.0) + 7.0;
    }
    CHECK(std::abs(rho(tx, ty) - base) < 1e-12);
    CHECK(base >= -1.0);
    CHECK(base <= 1.0);
  }
}

TEST_CASE("log-linear fit recovers collinear points") {
  std::vector<ScalingPoint> pts;
  for (double e : {7.0, 8.0, 9.5, 11.0}) pts.push_back({std::pow(10.0, e), 0.05 * e - 0.3});
  const auto fit = fit_log_linear(pts);
  CHECK(std::abs(fit.slope - 0.05) < 1e-9);
  CHECK(std::abs(fit.intercept + 0.3) < 1e-9);
  CHECK(std::abs(fit.r_squared - 1.0) < 1e-9);
  for (double p : {1e8, 3e9, 1e12}) {
    CHECK(std::abs(extrapolate_size(fit, fit.accuracy_at(p)) / p - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(extrapolate_size(fit, 0.0), Error);
}

TEST_CASE("noisy fits match closed-form OLS and satisfy the normal equations") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int round = 0; round < 50; ++round) {
    std::vector<ScalingPoint> pts;
    const auto n = 2 + rng.below(8);
    for (std::uint64_t i = 0; i < n; ++i) {
      pts.push_back({std::pow(10.0, 6.0 + 6.0 * u(rng.engine())), u(rng.engine())});
    }
    const auto fit = fit_log_linear(pts);
    const auto [slope, intercept] = ols(pts);
    CHECK(std::abs(fit.slope - slope) < 1e-9);
    CHECK(std::abs(fit.intercept - intercept) < 1e-9);
    CHECK(fit.r_squared >= 0.0);
    CHECK(fit.r_squared <= 1.0 + 1e-12);
    double r0 = 0;
    double r1 = 0;
    for (const auto& p : pts) {
      const double resid = p.accuracy - fit.accuracy_at(p.params);
      r0 += resid;
      r1 += resid * std::log10(p.params);
    }
    CHECK(std::abs(r0) < 1e-9);
    CHECK(std::abs(r1) < 1e-9);
  }
}

TEST_CASE("fit validation and report") {
  CHECK_THROWS_AS(fit_log_linear(std::vector<ScalingPoint>{{1e9, 0.1}}), Error);
  CHECK_THROWS_AS(fit_log_linear(std::vector<ScalingPoint>{{1e9, 0.1}, {1e9, 0.2}}), Error);
  CHECK_THROWS_AS(fit_log_linear(std::vector<ScalingPoint>{{1e9, 0.1}, {1e10, 1.2}}), Error);
  const auto fit = fit_log_linear(std::vector<ScalingPoint>{{1e9, 0.2}, {1e10, 0.3}});
  const double target = 0.5;
  const auto j = io::Json::parse(fit_to_json(fit, &target));
  CHECK(j.at("n") == 2);
  CHECK(j.at("r2").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("extrapolated_params").get<double>() == doctest::Approx(1e12));
}

TEST_CASE("scale_counts preserves ranking") {
  Rng rng(2);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::uint64_t> c(1 + rng.below(100));
    for (auto& v : c) v = 1 + rng.below(100000);
    const double up = 1.0 + static_cast<double>(rng.below(1000)) / 10.0;
    const auto scaled = scale_counts(c, up);
    const auto shrunk = scale_counts(c, 1.0 / up);
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[i] < c[j]) {
          CHECK(scaled[i] < scaled[j]);
          CHECK(shrunk[i] <= shrunk[j]);
        }
        if (c[i] == c[j]) CHECK(scaled[i] == scaled[j]);
      }
    }
  }
  CHECK(scale_counts(std::vector<std::uint64_t>{3, 10}, 2.5) == std::vector<std::uint64_t>{8, 25});
  CHECK_THROWS_AS(scale_counts(std::vector<std::uint64_t>{1}, 0.0), Error);
}

TEST_CASE("rare slice mean") {
  const std::vector<std::uint64_t> counts{5, 99, 100, 1000};
  const std::vector<double> values{1.0, 0.0, 1.0, 1.0};
  CHECK(rare_slice_mean(counts, values) == 0.5);
  CHECK(rare_slice_mean(counts, values, 6) == 1.0);
  CHECK_THROWS_AS(rare_slice_mean(counts, values, 1), Error);
}
