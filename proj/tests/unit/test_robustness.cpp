/*
 * Copyright (c) 2026 The HERO Lab Authors. All Rights Reserved
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "helpers.hpp"

#include "core/error.hpp"
#include "robustness/bounds.hpp"
#include "robustness/diagnostics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace herolab;
using namespace herolab::lab;
namespace ht = herolab::testing;

namespace
{

const double root3_example = (std::sqrt(3.0) - 1.0) / 2.0; // 0.3660254...

QuadraticModel model(std::vector<double> g, std::vector<double> h_diag)
{
  QuadraticModel q;
  q.gradient = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  q.hessian = Eigen::Map<Eigen::VectorXd>(h_diag.data(), static_cast<Eigen::Index>(h_diag.size())).asDiagonal();
  return q;
}

ad::LossFn linear_loss(const Tensor &c)
{
  return [c](ad::Tape &tape, const ad::ParamLeaves &p) { return ad::sum(ad::mul(tape.constant(c), p.at("w"))); };
}

} // namespace

TEST(Bounds, WorkedExamples)
{
  EXPECT_NEAR(lower_bound_l2(1.0, 2.0, 0.5), root3_example, 1e-12);
  EXPECT_NEAR(lower_bound_linf(1.0, 2.0, 0.5, 1.0), root3_example, 1e-12);
  EXPECT_NEAR(root3_example, 0.3660254, 1e-7);
  // direct form of the same expression
  const double g = 1.7, v = 0.3, c = 0.8;
  EXPECT_NEAR(lower_bound_l2(g, v, c), (g / v) * (std::sqrt(1 + 2 * v * c / (g * g)) - 1), 1e-12);
  const double n = 5, g1 = 2.5;
  EXPECT_NEAR(lower_bound_linf(g1, v, c, n), (g1 / (n * v)) * (std::sqrt(1 + 2 * n * v * c / (g1 * g1)) - 1), 1e-12);
}

TEST(Bounds, FlatCurvatureLimit)
{
  for (double g : {0.1, 1.0, 7.0})
  {
    EXPECT_DOUBLE_EQ(lower_bound_l2(g, 0.0, 0.3), 0.3 / g);
    EXPECT_NEAR(lower_bound_l2(g, 1e-12, 0.3), 0.3 / g, 1e-9);
    EXPECT_DOUBLE_EQ(lower_bound_l2(g, 0.0, 0.6), 2 * lower_bound_l2(g, 0.0, 0.3));
    EXPECT_DOUBLE_EQ(lower_bound_linf(g, 0.0, 0.3, 4), 0.3 / g);
  }
  EXPECT_THROW(lower_bound_l2(0.0, 0.0, 1.0), Error);
  EXPECT_THROW(lower_bound_linf(0.0, 0.0, 1.0, 3), Error);
  EXPECT_THROW(lower_bound_l2(1.0, -1.0, 1.0), Error);
  EXPECT_THROW(lower_bound_l2(1.0, 1.0, 0.0), Error);
  EXPECT_THROW(lower_bound_linf(1.0, 1.0, 1.0, 0.5), Error);
}

TEST(Bounds, VanishingGradientLimit)
{
  for (double n : {10.0, 100.0})
    for (double c : {0.01, 0.1, 0.3, 0.7, 1.0})
      for (double v : {0.01, 0.1, 1.0, 10.0, 100.0})
      {
        const double lim = linf_vanishing_gradient_limit(v, c, n);
        EXPECT_NEAR(lim, std::sqrt(2 * c / (n * v)), 1e-15 * lim);
        EXPECT_LE(ht::rel_err(lower_bound_linf(1e-9, v, c, n), lim), 1e-4) << n << " " << c << " " << v;
      }
}

TEST(Bounds, StrictlyDecreasingInCurvature)
{
  for (double g : {1e-3, 0.5, 4.0})
  {
    double prev2 = INFINITY, previnf = INFINITY;
    for (int k = 0; k <= 40; ++k)
    {
      const double v = k == 0 ? 0.0 : std::pow(10.0, -3 + 0.15 * k);
      const double b2 = lower_bound_l2(g, v, 0.4), binf = lower_bound_linf(g, v, 0.4, 6);
      EXPECT_LT(b2, prev2);
      EXPECT_LT(binf, previnf);
      prev2 = b2, previnf = binf;
    }
  }
}

TEST(BruteForce, AlignedCaseMeetsBound)
{
  auto q = model({1.0, 0.0}, {2.0, 0.0});
  const double r = min_perturbation_bruteforce(q, 0.5, Norm::L2);
  EXPECT_NEAR(r, root3_example, 1e-6);
  EXPECT_NEAR(r, lower_bound_l2(1.0, 2.0, 0.5), 1e-5);
  // one-dimensional l-infinity version is the same problem
  EXPECT_NEAR(min_perturbation_bruteforce(model({1.0}, {2.0}), 0.5, Norm::Linf), root3_example, 1e-6);
}

TEST(BruteForce, LinearCases)
{
  auto q = model({3.0, -4.0, 0.0}, {0.0, 0.0, 0.0});
  EXPECT_NEAR(min_perturbation_bruteforce(q, 0.5, Norm::L2), 0.5 / 5.0, 1e-6);
  EXPECT_NEAR(min_perturbation_bruteforce(q, 0.5, Norm::Linf), 0.5 / 7.0, 1e-6);
}

TEST(BruteForce, ExactTrustRegionMaximum)
{
  // q(d) = d1 - d2^2 on the unit ball: maximum at d = (1, 0)
  auto q = model({1.0, 0.0}, {0.0, -2.0});
  EXPECT_NEAR(max_over_l2_ball(q, 1.0), 1.0, 1e-12);
  // interior maximum for a concave model: g = (1, 0), H = -2 I gives d = (0.5, 0), value 0.25
  auto concave = model({1.0, 0.0}, {-2.0, -2.0});
  EXPECT_NEAR(max_over_l2_ball(concave, 10.0), 0.25, 1e-12);
  // zero gradient picks the top eigenvalue
  auto flat = model({0.0, 0.0}, {3.0, -1.0});
  EXPECT_NEAR(max_over_l2_ball(flat, 2.0), 6.0, 1e-12);
}

TEST(BruteForce, MaximizerBeatsRandomSearch)
{
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial)
  {
    double c = 0;
    auto q = random_problem(derive_seed(7, std::to_string(trial)), 6, &c);
    // indefinite shift
    q.hessian -= 0.5 * Eigen::MatrixXd::Identity(q.hessian.rows(), q.hessian.cols());
    const double r = 0.3 + rng.uniform();
    const double best = max_over_l2_ball(q, r);
    for (int s = 0; s < 2000; ++s)
    {
      Eigen::VectorXd d(q.gradient.size());
      for (auto &x : d)
        x = rng.normal();
      d *= r * std::pow(rng.uniform(), 1.0 / static_cast<double>(d.size())) / d.norm();
      ASSERT_LE(q(d), best + 1e-10);
    }
  }
}

TEST(BruteForce, UnreachableIncreaseIsAnError)
{
  auto q = model({0.0, 0.0}, {-1.0, -1.0});
  EXPECT_THROW(min_perturbation_bruteforce(q, 1.0, Norm::L2), Error);
  EXPECT_THROW(min_perturbation_bruteforce(q, 1.0, Norm::Linf), Error);
  EXPECT_THROW(min_perturbation_bruteforce(model({1.0}, {0.0}), 0.0, Norm::L2), Error);
}

TEST(BruteForce, SweepHasNoViolations)
{
  auto sweep = bound_sweep(200, 8, 11);
  EXPECT_EQ(sweep.reports.size(), 200u);
  EXPECT_EQ(sweep.violations_l2, 0u);
  EXPECT_EQ(sweep.violations_linf, 0u);
  EXPECT_GE(sweep.median_slack_l2, 1.0 - 1e-6);
  EXPECT_GE(sweep.median_slack_linf, 1.0 - 1e-6);
  for (const auto &r : sweep.reports)
  {
    EXPECT_GE(r.dim, 2u);
    EXPECT_LE(r.dim, 8u);
    EXPECT_FALSE(r.violates(bound_tolerance)) << "trial " << r.trial;
  }
  auto again = bound_sweep(200, 8, 11);
  EXPECT_EQ(again.median_slack_l2, sweep.median_slack_l2);
}

TEST(BruteForce, TrueLossOnOneDimensionalLogistic)
{
  // convex in 1-D: the worst perturbation of radius r is at w + r or w - r
  Eigen::MatrixXd x(4, 1);
  x << 1.0, -0.5, 2.0, 0.3;
  Eigen::VectorXd s(4);
  s << 1, 1, -1, 1;
  Eigen::VectorXd w(1);
  w << 0.2;
  auto p = AnalyticProblem::logistic(x, s, w);
  const double c = 0.3;
  auto rise = [&](double r) {
    Eigen::VectorXd a(1), b(1);
    a << r;
    b << -r;
    return std::max(p.loss_increase(a), p.loss_increase(b));
  };
  double lo = 0, hi = 100;
  for (int i = 0; i < 200; ++i)
    (rise(0.5 * (lo + hi)) >= c ? hi : lo) = 0.5 * (lo + hi);

  BruteForceOptions opt;
  opt.objective = Objective::TrueLoss;
  EXPECT_NEAR(min_perturbation_bruteforce(p, c, Norm::L2, opt), hi, 1e-6);
  EXPECT_NEAR(min_perturbation_bruteforce(p, c, Norm::Linf, opt), hi, 1e-6);
}

TEST(BruteForce, TrueLossRespectsSmoothnessBound)
{
  // increase <= |g| r + L r^2 / 2 with L the global smoothness, so the true
  // radius can never undercut the closed form taken at v = L
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial)
  {
    const Eigen::Index m = 12, d = 3;
    Eigen::MatrixXd x(m, d);
    Eigen::VectorXd s(m), w(d);
    for (Eigen::Index i = 0; i < m; ++i)
    {
      for (Eigen::Index j = 0; j < d; ++j)
        x(i, j) = rng.normal();
      s[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    for (auto &v : w)
      v = rng.normal();
    auto p = AnalyticProblem::logistic(x, s, w);
    BruteForceOptions opt;
    opt.objective = Objective::TrueLoss;
    opt.seed = static_cast<std::uint64_t>(trial);
    const double c = 0.2;
    const double r = min_perturbation_bruteforce(p, c, Norm::L2, opt);
    const auto g = p.gradient(w);
    EXPECT_GE(r, lower_bound_l2(g.norm(), p.smoothness(), c) - 1e-6);
    EXPECT_GE(p.smoothness(), p.top_eigenvalue() - 1e-12);
    // the quadratic-model answer is a different (finite) radius
    EXPECT_TRUE(std::isfinite(min_perturbation_bruteforce(p, c, Norm::L2)));
  }
}

TEST(HessianMetric, LinearLossHasNoCurvature)
{
  Rng rng(1);
  auto p = ht::single_weight(ht::random_tensor(rng, {1, 6}));
  std::vector<ad::LossFn> batches{linear_loss(ht::random_tensor(rng, {1, 6})),
                                  linear_loss(ht::random_tensor(rng, {1, 6}))};
  EXPECT_LE(hessian_norm_metric(batches, p, 1e-3), 1e-8);
}

TEST(HessianMetric, QuadraticGivesExactNorm)
{
  Rng rng(2);
  const std::size_t d = 5;
  auto a = ht::random_symmetric(rng, d);
  auto b = ht::random_tensor(rng, {1, d});
  auto loss = ht::quadratic_loss(a, b);
  auto p = ht::single_weight(ht::random_tensor(rng, {1, d}));

  auto az_norm = [&](const Tensor &z) {
    double s = 0;
    for (std::size_t i = 0; i < d; ++i)
    {
      double v = 0;
      for (std::size_t j = 0; j < d; ++j)
        v += a[i * d + j] * z[j];
      s += v * v;
    }
    return std::sqrt(s);
  };

  // fixed z
  GradientSet z({{"w", ht::random_tensor(rng, {1, d})}});
  EXPECT_LE(ht::rel_err(curvature_along(loss, p, z, 1e-3), az_norm(z.at("w"))), 1e-9);

  // z from the gradient, as in the metric
  auto g = ad::value_and_grad(loss, p).grad;
  auto zg = train::layer_perturbation(p, g);
  EXPECT_LE(ht::rel_err(hessian_norm_metric({loss}, p, 1e-3), az_norm(zg.at("w"))), 1e-9);
}

TEST(HessianMetric, BatchOrderDoesNotMatter)
{
  Rng rng(3);
  const std::size_t d = 4;
  std::vector<ad::LossFn> batches;
  for (int i = 0; i < 5; ++i)
    batches.push_back(ht::quadratic_loss(ht::random_symmetric(rng, d), ht::random_tensor(rng, {1, d})));
  auto p = ht::single_weight(ht::random_tensor(rng, {1, d}));
  const double fwd = hessian_norm_metric(batches, p, 1e-3);
  std::reverse(batches.begin(), batches.end());
  EXPECT_LE(ht::rel_err(hessian_norm_metric(batches, p, 1e-3), fwd), 1e-12);
  EXPECT_EQ(hessian_norm_metric(batches, p, 1e-3), hessian_norm_metric(batches, p, 1e-3));
}

TEST(HessianMetric, ModelVersionIsDeterministic)
{
  auto ds = data::make_synthetic({.kind = data::SyntheticKind::Glyphs, .count = 60, .classes = 3, .seed = 1});
  models::ModelSpec spec;
  spec.widths = {784, 8, 3};
  spec.classes = 3;
  auto p = models::build(spec, 2);
  HessianMetricOptions opt;
  opt.batch_size = 25;
  const double a = hessian_norm_metric(spec, p, {}, ds, opt);
  EXPECT_GT(a, 0.0);
  EXPECT_EQ(a, hessian_norm_metric(spec, p, {}, ds, opt));
}

TEST(Contour, CenterIsPlainLoss)
{
  Rng rng(4);
  const std::size_t d = 4;
  auto fn = ht::quadratic_loss(ht::random_symmetric(rng, d), ht::random_tensor(rng, {1, d}));
  auto p = ht::single_weight(ht::random_tensor(rng, {1, d}));
  auto loss = [&](const ParamSet &q) { return ad::forward(fn, q).loss; };
  auto grid = loss_contour(loss, p, 1.0, 5, 9);
  ASSERT_EQ(grid.steps(), 5u);
  EXPECT_EQ(grid.coords.front(), -1.0);
  EXPECT_EQ(grid.coords[2], 0.0);
  EXPECT_EQ(grid.coords.back(), 1.0);
  EXPECT_EQ(grid.at(2, 2), loss(p));
  EXPECT_THROW(loss_contour(loss, p, 1.0, 4, 9), Error);

  auto again = loss_contour(loss, p, 1.0, 5, 9);
  EXPECT_EQ(again.loss, grid.loss);
  EXPECT_NE(loss_contour(loss, p, 1.0, 5, 10).loss, grid.loss);
}

TEST(Contour, OppositeCellsAreSeparateEvaluations)
{
  // cubic along w: L(w) = sum w^3 is odd around 0 only, so opposite cells differ
  auto fn = [](ad::Tape &, const ad::ParamLeaves &l) {
    auto w = l.at("w");
    return ad::sum(ad::mul(ad::square(w), w));
  };
  auto p = ht::single_weight(Tensor({1, 3}, {0.5, -0.2, 1.0}));
  auto loss = [&](const ParamSet &q) { return ad::forward(fn, q).loss; };
  auto grid = loss_contour(loss, p, 0.8, 7, 1);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j)
      differing += grid.at(i, j) != grid.at(6 - i, 6 - j);
  EXPECT_GE(differing, 40u);
}

TEST(Contour, LinearLossIsPlanar)
{
  Rng rng(6);
  auto c = ht::random_tensor(rng, {1, 8});
  auto fn = linear_loss(c);
  auto p = ht::single_weight(ht::random_tensor(rng, {1, 8}));
  auto grid = loss_contour([&](const ParamSet &q) { return ad::forward(fn, q).loss; }, p, 1.0, 9, 2);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 1; j + 1 < 9; ++j)
    {
      EXPECT_LE(std::abs(grid.at(i, j - 1) - 2 * grid.at(i, j) + grid.at(i, j + 1)), 1e-9);
      EXPECT_LE(std::abs(grid.at(j - 1, i) - 2 * grid.at(j, i) + grid.at(j + 1, i)), 1e-9);
    }
}

TEST(Contour, FilterNormalizedDirection)
{
  ParamSet p;
  p.add("a", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), ParamKind::Weight);
  p.add("bias", Tensor::vector({1, 1}), ParamKind::Bias);
  p.add("c", Tensor({4}, 0.5), ParamKind::Weight);
  Rng rng(1);
  auto d = filter_normalized_direction(p, rng);
  EXPECT_NEAR(l2_norm(d.at("a").values()), l2_norm(p.tensor("a").values()), 1e-12);
  EXPECT_NEAR(l2_norm(d.at("c").values()), 1.0, 1e-12);
  EXPECT_EQ(d.at("bias"), Tensor({2}));
}

TEST(Contour, ModelVersionCenterMatchesEvaluate)
{
  auto ds = data::make_synthetic({.kind = data::SyntheticKind::Glyphs, .count = 40, .classes = 3, .seed = 1});
  models::ModelSpec spec;
  spec.widths = {784, 8, 3};
  spec.classes = 3;
  auto p = models::build(spec, 2);
  auto grid = loss_contour(spec, p, {}, ds, 0.5, 3, 0);
  EXPECT_EQ(grid.at(1, 1), models::evaluate(spec, p, {}, ds).loss);
}
