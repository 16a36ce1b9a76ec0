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

#ifndef HERO_LAB_ROBUSTNESS_BOUNDS_HPP
#define HERO_LAB_ROBUSTNESS_BOUNDS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace herolab::lab
{

// Smallest l2 perturbation that can raise a loss with gradient norm ||g||_2 and
// top Hessian eigenvalue v by c under the second-order model:
//   (||g||/v) (sqrt(1 + 2 v c / ||g||^2) - 1)
// evaluated in the cancellation-free form 2c / (sqrt(||g||^2 + 2 v c) + ||g||),
// which equals c / ||g|| at v = 0 and sqrt(2c / v) at g = 0.
double lower_bound_l2(double g_norm2, double v, double c);

// l-infinity analogue with the gradient l1 norm and n nonzero weights:
//   (|g| / (n v)) (sqrt(1 + 2 n v c / |g|^2) - 1)
double lower_bound_linf(double g_norm1, double v, double c, double n);

// lim_{|g| -> 0} lower_bound_linf = sqrt(2c / (n v))
double linf_vanishing_gradient_limit(double v, double c, double n);

enum class Norm
{
  L2,
  Linf,
};

// Local second-order model q(d) = g'd + d'Hd / 2 of a loss increase.
struct QuadraticModel
{
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian; // symmetric

  std::size_t dim() const { return static_cast<std::size_t>(gradient.size()); }
  double operator()(const Eigen::VectorXd &d) const { return gradient.dot(d) + 0.5 * d.dot(hessian * d); }
};

// A loss with closed-form gradient and Hessian at an evaluation point w.
class AnalyticProblem
{
public:
  // L(x) = x'Ax/2 + b'x
  static AnalyticProblem quadratic(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd w);
  // Mean logistic loss log(1 + exp(-s_i x_i'w)) with signs s_i in {-1, +1}.
  static AnalyticProblem logistic(Eigen::MatrixXd x, Eigen::VectorXd signs, Eigen::VectorXd w);

  std::size_t dim() const { return static_cast<std::size_t>(_w.size()); }
  double loss(const Eigen::VectorXd &x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd &x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd &x) const;
  const Eigen::VectorXd &point() const { return _w; }

  QuadraticModel local_model() const { return {gradient(_w), hessian(_w)}; }
  // L(w + d) - L(w)
  double loss_increase(const Eigen::VectorXd &d) const { return loss(_w + d) - loss(_w); }
  double top_eigenvalue() const;
  // Global Lipschitz constant of the gradient.
  double smoothness() const;

private:
  enum class Family
  {
    Quadratic,
    Logistic,
  };
  Family _family = Family::Quadratic;
  Eigen::MatrixXd _a;
  Eigen::VectorXd _b;
  Eigen::VectorXd _w;
};

// Largest eigenvalue of a symmetric matrix.
double top_eigenvalue(const Eigen::MatrixXd &h);

// max q(d) over ||d||_2 <= r, exactly, via the eigendecomposition of H.
double max_over_l2_ball(const QuadraticModel &q, double r);

enum class Objective
{
  QuadraticModel, // maximize the second-order model
  TrueLoss,       // maximize the actual loss increase
};

struct BruteForceOptions
{
  Objective objective = Objective::QuadraticModel;
  double r_max = 1e3;
  double tolerance = 1e-9; // bisection width on r
  std::size_t starts = 16; // projected-ascent restarts
  std::size_t ascent_iters = 400;
  std::uint64_t seed = 0;
};

// Smallest r such that some ||d||_p <= r raises the loss by at least c,
// by bisection on r with a feasibility maximizer per radius.
double min_perturbation_bruteforce(const AnalyticProblem &problem, double c, Norm norm,
                                   const BruteForceOptions &options = {});
double min_perturbation_bruteforce(const QuadraticModel &model, double c, Norm norm,
                                   const BruteForceOptions &options = {});

struct BoundReport
{
  std::size_t trial = 0;
  std::size_t dim = 0;
  double c = 0.0;
  double v = 0.0;
  double g_norm2 = 0.0;
  double g_norm1 = 0.0;
  double lower_bound_l2 = 0.0;
  double lower_bound_linf = 0.0;
  double bruteforce_l2 = 0.0;
  double bruteforce_linf = 0.0;

  double slack_l2() const { return bruteforce_l2 / lower_bound_l2; }
  double slack_linf() const { return bruteforce_linf / lower_bound_linf; }
  bool violates(double tol) const
  {
    return bruteforce_l2 < lower_bound_l2 - tol || bruteforce_linf < lower_bound_linf - tol;
  }
};

// Random PSD Hessian, Gaussian gradient, d uniform in [2, dim_max], c uniform in [0.01, 1].
QuadraticModel random_problem(std::uint64_t seed, std::size_t dim_max, double *c_out);

BoundReport check_bounds(const QuadraticModel &model, double c, std::size_t trial = 0,
                         const BruteForceOptions &options = {});

struct BoundSweep
{
  std::vector<BoundReport> reports;
  std::size_t violations_l2 = 0;
  std::size_t violations_linf = 0;
  double median_slack_l2 = 0.0;
  double median_slack_linf = 0.0;
};

inline constexpr double bound_tolerance = 1e-6;

BoundSweep bound_sweep(std::size_t trials, std::size_t dim_max, std::uint64_t seed);

} // namespace herolab::lab

#endif // HERO_LAB_ROBUSTNESS_BOUNDS_HPP
