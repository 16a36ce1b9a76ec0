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

#include "robustness/bounds.hpp"

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace herolab::lab
{

namespace
{

void require_bound_args(double g, double v, double c)
{
  if (!(g >= 0.0) || !(v >= 0.0) || !(c > 0.0) || !std::isfinite(g) || !std::isfinite(v) || !std::isfinite(c))
    throw Error(ErrorCode::InvalidArgument, "bounds need gradient norm >= 0, v >= 0 and c > 0");
  if (g == 0.0 && v == 0.0)
    throw Error(ErrorCode::InvalidArgument, "zero gradient and zero curvature: no finite perturbation raises the loss");
}

double median(std::vector<double> x)
{
  if (x.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

// log(1 + exp(t)) without overflow
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

using Vec = Eigen::VectorXd;

struct AscentProblem
{
  std::function<double(const Vec &)> value;
  std::function<Vec(const Vec &)> gradient;
  double smoothness; // upper bound on the gradient's Lipschitz constant
};

Vec project(const Vec &d, Norm norm, double r)
{
  if (norm == Norm::Linf)
    return d.cwiseMax(-r).cwiseMin(r);
  const double n = d.norm();
  return n > r ? Vec(d * (r / n)) : d;
}

double projected_ascent(const AscentProblem &p, Vec d, Norm norm, double r, std::size_t iters)
{
  const double step = 1.0 / std::max(p.smoothness, 1e-12);
  d = project(d, norm, r);
  double best = p.value(d);
  for (std::size_t it = 0; it < iters; ++it)
  {
    Vec next = project(d + step * p.gradient(d), norm, r);
    const double moved = (next - d).lpNorm<Eigen::Infinity>();
    d = std::move(next);
    best = std::max(best, p.value(d));
    if (moved <= 1e-15 * std::max(1.0, r))
      break;
  }
  return best;
}

// Sign patterns s in {-1,+1}^d. For a convex objective the box maximum is at a corner.
std::vector<Vec> corners(std::size_t d)
{
  std::vector<Vec> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask)
  {
    Vec s(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      s[static_cast<Eigen::Index>(i)] = (mask >> i) & 1 ? 1.0 : -1.0;
    out.push_back(std::move(s));
  }
  return out;
}

constexpr std::size_t corner_enumeration_max_dim = 8;

std::vector<Vec> ascent_starts(std::size_t d, std::size_t count, std::uint64_t seed, const Vec &g, Norm norm)
{
  Rng rng(seed);
  std::vector<Vec> starts;
  if (g.norm() > 0.0)
    starts.push_back(norm == Norm::Linf ? Vec(g.cwiseSign()) : Vec(g / g.norm()));
  while (starts.size() < count)
  {
    Vec s(static_cast<Eigen::Index>(d));
    for (auto &v : s)
      v = norm == Norm::Linf ? rng.uniform(-1.0, 1.0) : rng.normal();
    if (norm == Norm::L2 && s.norm() > 0)
      s /= s.norm();
    starts.push_back(std::move(s));
  }
  return starts; // unit-radius points, scaled by r at use
}

// Bisection on r for the smallest feasible radius.
double bisect_radius(const std::function<bool(double)> &feasible, const BruteForceOptions &options)
{
  if (!feasible(options.r_max))
    throw Error(ErrorCode::Numerical, "no perturbation within r_max = " + std::to_string(options.r_max) +
                                        " reaches the requested loss increase");
  double lo = 0.0, hi = options.r_max;
  while (hi - lo > options.tolerance)
  {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

} // namespace

double lower_bound_l2(double g_norm2, double v, double c)
{
  require_bound_args(g_norm2, v, c);
  return 2.0 * c / (std::sqrt(g_norm2 * g_norm2 + 2.0 * v * c) + g_norm2);
}

double lower_bound_linf(double g_norm1, double v, double c, double n)
{
  if (!(n >= 1.0))
    throw Error(ErrorCode::InvalidArgument, "lower_bound_linf needs n >= 1");
  require_bound_args(g_norm1, v, c);
  return 2.0 * c / (std::sqrt(g_norm1 * g_norm1 + 2.0 * n * v * c) + g_norm1);
}

double linf_vanishing_gradient_limit(double v, double c, double n)
{
  if (!(v > 0.0) || !(c > 0.0) || !(n >= 1.0))
    throw Error(ErrorCode::InvalidArgument, "limit needs v > 0, c > 0, n >= 1");
  return std::sqrt(2.0 * c / (n * v));
}

double top_eigenvalue(const Eigen::MatrixXd &h)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

AnalyticProblem AnalyticProblem::quadratic(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd w)
{
  if (a.rows() != a.cols() || a.rows() != b.size() || b.size() != w.size())
    throw ShapeError("quadratic problem", "A, b and w dimensions disagree");
  if (!a.isApprox(a.transpose(), 1e-12))
    throw Error(ErrorCode::InvalidArgument, "quadratic problem needs a symmetric A");
  AnalyticProblem p;
  p._family = Family::Quadratic;
  p._a = std::move(a);
  p._b = std::move(b);
  p._w = std::move(w);
  return p;
}

AnalyticProblem AnalyticProblem::logistic(Eigen::MatrixXd x, Eigen::VectorXd signs, Eigen::VectorXd w)
{
  if (x.rows() != signs.size() || x.cols() != w.size() || x.rows() == 0)
    throw ShapeError("logistic problem", "data, signs and w dimensions disagree");
  AnalyticProblem p;
  p._family = Family::Logistic;
  p._a = std::move(x);
  p._b = std::move(signs);
  p._w = std::move(w);
  return p;
}

double AnalyticProblem::loss(const Eigen::VectorXd &x) const
{
  if (_family == Family::Quadratic)
    return 0.5 * x.dot(_a * x) + _b.dot(x);
  const Eigen::VectorXd margins = (_a * x).cwiseProduct(_b);
  double s = 0.0;
  for (auto m : margins)
    s += softplus(-m);
  return s / static_cast<double>(margins.size());
}

Eigen::VectorXd AnalyticProblem::gradient(const Eigen::VectorXd &x) const
{
  if (_family == Family::Quadratic)
    return _a * x + _b;
  const Eigen::VectorXd margins = (_a * x).cwiseProduct(_b);
  Eigen::VectorXd coef(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    coef[i] = -sigmoid(-margins[i]) * _b[i];
  return _a.transpose() * coef / static_cast<double>(margins.size());
}

Eigen::MatrixXd AnalyticProblem::hessian(const Eigen::VectorXd &x) const
{
  if (_family == Family::Quadratic)
    return _a;
  const Eigen::VectorXd margins = (_a * x).cwiseProduct(_b);
  Eigen::VectorXd wts(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i)
  {
    const double s = sigmoid(margins[i]);
    wts[i] = s * (1.0 - s);
  }
  return _a.transpose() * wts.asDiagonal() * _a / static_cast<double>(margins.size());
}

double AnalyticProblem::top_eigenvalue() const { return lab::top_eigenvalue(hessian(_w)); }

double AnalyticProblem::smoothness() const
{
  if (_family == Family::Quadratic)
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(_a, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
  // sigmoid' <= 1/4
  return 0.25 * lab::top_eigenvalue(_a.transpose() * _a / static_cast<double>(_a.rows()));
}

double max_over_l2_ball(const QuadraticModel &q, double r)
{
  if (r <= 0.0)
    return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.hessian);
  const Eigen::VectorXd lam = es.eigenvalues(); // ascending
  const Eigen::VectorXd gt = es.eigenvectors().transpose() * q.gradient;
  const Eigen::Index d = lam.size();
  const double lmax = lam[d - 1];
  const double gnorm = gt.norm();
  if (gnorm == 0.0)
    return 0.5 * std::max(lmax, 0.0) * r * r;

  auto y_of = [&](double mu) {
    Eigen::VectorXd y(d);
    for (Eigen::Index i = 0; i < d; ++i)
      y[i] = gt[i] / (mu - lam[i]);
    return y;
  };
  auto value = [&](const Eigen::VectorXd &y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      s += gt[i] * y[i] + 0.5 * lam[i] * y[i] * y[i];
    return s;
  };

  // interior stationary point (H negative definite)
  if (lmax < 0.0)
  {
    const Eigen::VectorXd y0 = y_of(0.0);
    if (y0.norm() <= r)
      return value(y0);
  }

  const double lo0 = std::max(lmax, 0.0);
  if (lmax >= 0.0)
  {
    // hard case: no gradient weight on the top eigenspace
    const double eig_tol = 1e-12 * std::max(1.0, std::abs(lmax));
    double top_weight = 0.0, rest2 = 0.0, rest_value = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
    {
      if (lmax - lam[i] <= eig_tol)
        top_weight += gt[i] * gt[i];
      else
      {
        const double yi = gt[i] / (lmax - lam[i]);
        rest2 += yi * yi;
        rest_value += gt[i] * yi + 0.5 * lam[i] * yi * yi;
      }
    }
    if (top_weight <= 1e-30 * gnorm * gnorm && rest2 <= r * r)
      return rest_value + 0.5 * lmax * (r * r - rest2);
  }

  double lo = lo0, hi = lo0 + gnorm / r;
  for (int it = 0; it < 200; ++it)
  {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    (y_of(mid).norm() > r ? lo : hi) = mid;
  }
  return value(y_of(hi));
}

double min_perturbation_bruteforce(const QuadraticModel &model, double c, Norm norm, const BruteForceOptions &options)
{
  if (!(c > 0.0))
    throw Error(ErrorCode::InvalidArgument, "target loss increase c must be positive");
  const std::size_t d = model.dim();
  if (d == 0 || static_cast<std::size_t>(model.hessian.rows()) != d || static_cast<std::size_t>(model.hessian.cols()) != d)
    throw ShapeError("quadratic model", "gradient and Hessian dimensions disagree");

  if (norm == Norm::L2)
    return bisect_radius([&](double r) { return max_over_l2_ball(model, r) >= c; }, options);

  // corner values r a_s + r^2 b_s / 2 precomputed per sign pattern
  std::vector<std::pair<double, double>> corner_terms;
  if (d <= corner_enumeration_max_dim)
    for (const auto &s : corners(d))
      corner_terms.emplace_back(model.gradient.dot(s), s.dot(model.hessian * s));

  AscentProblem ascent{[&](const Vec &x) { return model(x); },
                       [&](const Vec &x) -> Vec { return model.gradient + model.hessian * x; },
                       Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(model.hessian, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .cwiseAbs()
                         .maxCoeff()};
  const auto starts = ascent_starts(d, options.starts, options.seed, model.gradient, Norm::Linf);

  return bisect_radius(
    [&](double r) {
      for (const auto &[a, b] : corner_terms)
        if (r * a + 0.5 * r * r * b >= c)
          return true;
      for (const auto &s : starts)
        if (projected_ascent(ascent, r * s, Norm::Linf, r, options.ascent_iters) >= c)
          return true;
      return false;
    },
    options);
}

double min_perturbation_bruteforce(const AnalyticProblem &problem, double c, Norm norm,
                                   const BruteForceOptions &options)
{
  if (options.objective == Objective::QuadraticModel)
    return min_perturbation_bruteforce(problem.local_model(), c, norm, options);
  if (!(c > 0.0))
    throw Error(ErrorCode::InvalidArgument, "target loss increase c must be positive");

  const std::size_t d = problem.dim();
  const Vec w = problem.point();
  const double base = problem.loss(w);
  const auto h0 = problem.hessian(w);
  AscentProblem ascent{[&](const Vec &x) { return problem.loss(w + x) - base; },
                       [&](const Vec &x) -> Vec { return problem.gradient(w + x); }, problem.smoothness()};

  auto starts = ascent_starts(d, options.starts, options.seed, problem.gradient(w), norm);
  if (norm == Norm::L2)
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h0);
    const Vec top = es.eigenvectors().col(es.eigenvectors().cols() - 1);
    starts.push_back(top);
    starts.push_back(-top);
  }
  std::vector<Vec> box_corners;
  if (norm == Norm::Linf && d <= corner_enumeration_max_dim)
    box_corners = corners(d);

  return bisect_radius(
    [&](double r) {
      for (const auto &s : box_corners)
        if (ascent.value(r * s) >= c)
          return true;
      for (const auto &s : starts)
        if (projected_ascent(ascent, r * s, norm, r, options.ascent_iters) >= c)
          return true;
      return false;
    },
    options);
}

QuadraticModel random_problem(std::uint64_t seed, std::size_t dim_max, double *c_out)
{
  if (dim_max < 2)
    throw Error(ErrorCode::InvalidArgument, "dim_max must be at least 2");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(2 + rng.below(dim_max - 1));
  // rank drawn in [1, d] so some Hessians are singular
  const auto rank = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(d)));
  Eigen::MatrixXd m(d, rank);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < rank; ++j)
      m(i, j) = rng.normal();
  QuadraticModel q;
  q.hessian = m * m.transpose() / static_cast<double>(rank);
  q.hessian = 0.5 * (q.hessian + q.hessian.transpose()).eval();
  q.gradient.resize(d);
  for (auto &v : q.gradient)
    v = rng.normal();
  const double c = rng.uniform(0.01, 1.0);
  if (c_out)
    *c_out = c;
  return q;
}

BoundReport check_bounds(const QuadraticModel &model, double c, std::size_t trial, const BruteForceOptions &options)
{
  BoundReport r;
  r.trial = trial;
  r.dim = model.dim();
  r.c = c;
  r.v = std::max(0.0, top_eigenvalue(model.hessian));
  r.g_norm2 = model.gradient.norm();
  r.g_norm1 = model.gradient.lpNorm<1>();
  r.lower_bound_l2 = lower_bound_l2(r.g_norm2, r.v, c);
  r.lower_bound_linf = lower_bound_linf(r.g_norm1, r.v, c, static_cast<double>(r.dim));
  r.bruteforce_l2 = min_perturbation_bruteforce(model, c, Norm::L2, options);
  r.bruteforce_linf = min_perturbation_bruteforce(model, c, Norm::Linf, options);
  return r;
}

BoundSweep bound_sweep(std::size_t trials, std::size_t dim_max, std::uint64_t seed)
{
  if (dim_max < 2)
    throw Error(ErrorCode::InvalidArgument, "dim_max must be at least 2");
  BoundSweep out;
  out.reports.resize(trials);
  parallel_for(trials, 8, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
    {
      const auto trial_seed = derive_seed(seed, "bound-trial-" + std::to_string(i));
      double c = 0.0;
      const auto q = random_problem(trial_seed, dim_max, &c);
      BruteForceOptions opts;
      opts.seed = derive_seed(trial_seed, "ascent");
      out.reports[i] = check_bounds(q, c, i, opts);
    }
  });
  std::vector<double> s2, sinf;
  for (const auto &r : out.reports)
  {
    out.violations_l2 += r.bruteforce_l2 < r.lower_bound_l2 - bound_tolerance;
    out.violations_linf += r.bruteforce_linf < r.lower_bound_linf - bound_tolerance;
    s2.push_back(r.slack_l2());
    sinf.push_back(r.slack_linf());
  }
  out.median_slack_l2 = median(s2);
  out.median_slack_linf = median(sinf);
  return out;
}

} // namespace herolab::lab
