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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion (plus
// INFO lines that never affect the outcome) and exits non-zero if any fails.
//
//   hero_lab_acceptance <hero_lab_cli> <work dir>

#include "core/autodiff.hpp"
#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"
#include "data/dataset.hpp"
#include "experiment/config.hpp"
#include "experiment/runner.hpp"
#include "models/model.hpp"
#include "quant/quantizer.hpp"
#include "robustness/bounds.hpp"
#include "trainers/step.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

using namespace herolab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace
{

int failures = 0;

void report(int id, bool ok, const std::string &what, const std::string &detail)
{
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void info(int id, const std::string &detail)
{
  std::printf("INFO [%d] %s\n", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> x)
{
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

struct Shell
{
  int status = -1;
  std::string out;
};

Shell run_command(const std::string &cmd)
{
  Shell r;
  FILE *p = popen(cmd.c_str(), "r");
  if (!p)
    return r;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), p))
    r.out += buf.data();
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string read_file(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double relative(double a, double b, double floor = 1e-300)
{
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

Tensor gaussian(Rng &rng, Shape shape, double scale = 1.0)
{
  Tensor t(std::move(shape));
  for (auto &v : t.values())
    v = scale * rng.normal();
  return t;
}

Tensor symmetric(Rng &rng, std::size_t d)
{
  Tensor a({d, d});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      a[i * d + j] = a[j * d + i] = rng.normal();
  return a;
}

// 1/2 w A w' + b w' over a (1, d) weight "w"
ad::LossFn quadratic(const Tensor &a, const Tensor &b)
{
  return [a, b](ad::Tape &tape, const ad::ParamLeaves &p) {
    auto w = p.at("w");
    auto quad = ad::scale(ad::sum(ad::mul(ad::matmul(w, tape.constant(a)), w)), 0.5);
    return ad::add(quad, ad::sum(ad::mul(tape.constant(b), w)));
  };
}

std::vector<double> matvec(const Tensor &a, std::span<const double> x)
{
  const std::size_t d = x.size();
  std::vector<double> y(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      y[i] += a[i * d + j] * x[j];
  return y;
}

// ---- 1 ----

void bound_suite(const std::string &cli, const fs::path &work)
{
  const auto t0 = Clock::now();
  const auto csv = work / "bounds.csv";
  auto r = run_command("\"" + cli + "\" --threads 1 bound-check --trials 1000 --dim-max 8 --seed 0 --output \"" +
                       csv.string() + "\"");
  const double secs = seconds_since(t0);
  std::size_t v2 = 1, vinf = 1;
  double slack2 = NAN, slackinf = NAN;
  std::sscanf(r.out.c_str(), "trials=%*u violations_l2=%zu violations_linf=%zu median_slack_l2=%lf median_slack_linf=%lf",
              &v2, &vinf, &slack2, &slackinf);

  // aligned case: g along the top eigenvector, every other eigenvalue zero
  double worst_aligned = 0.0;
  Rng rng(1);
  for (int i = 0; i < 10; ++i)
  {
    const Eigen::Index d = 2 + i % 6;
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    Eigen::MatrixXd basis = qr.householderQ();
    const double v = 0.1 + 3 * rng.uniform(), gn = 0.1 + 2 * rng.uniform(), c = 0.01 + rng.uniform();
    lab::QuadraticModel m;
    m.hessian = v * basis.col(0) * basis.col(0).transpose();
    m.gradient = gn * basis.col(0);
    const double r_bf = lab::min_perturbation_bruteforce(m, c, lab::Norm::L2);
    worst_aligned = std::max(worst_aligned, std::abs(r_bf - lab::lower_bound_l2(gn, v, c)));
  }
  const bool ok = r.status == 0 && v2 == 0 && vinf == 0 && worst_aligned <= 1e-5 && secs <= 120.0;
  report(1, ok, "perturbation bound suite",
         fmt("1000 trials, violations l2=%zu linf=%zu, median slack l2=%.4f linf=%.4f, aligned max |bf-bound|=%.2e, "
             "%.1fs single-threaded",
             v2, vinf, slack2, slackinf, worst_aligned, secs));
}

// ---- 2 ----

void vanishing_gradient_limit()
{
  double worst = 0.0;
  for (double n : {10.0, 100.0})
    for (double c : {0.01, 0.1, 0.3, 0.6, 1.0})
      for (double v : {0.01, 0.1, 1.0, 10.0, 100.0})
        worst = std::max(worst, relative(lab::lower_bound_linf(1e-9, v, c, n), std::sqrt(2 * c / (n * v))));
  report(2, worst <= 1e-4, "l-inf bound at vanishing gradient",
         fmt("max relative error %.2e over 5x5 (c, v) grid, n in {10, 100}", worst));
}

// ---- 3 ----

models::ModelSpec random_model(Rng &rng)
{
  models::ModelSpec s;
  s.batch_norm = rng.below(2) == 1;
  s.classes = 2 + rng.below(3);
  if (rng.below(2))
  {
    const std::size_t in = 2 + rng.below(5);
    s.widths = {in};
    for (std::size_t l = rng.below(3); l > 0; --l)
      s.widths.push_back(2 + rng.below(4));
    s.widths.push_back(s.classes);
    s.input_shape = {in};
  }
  else
  {
    s.arch = models::Arch::SmallConv;
    s.channels = {1 + rng.below(3)};
    if (rng.below(2))
      s.channels.push_back(1 + rng.below(2));
    const std::size_t side = s.channels.size() == 2 ? 8 : 4 + 2 * rng.below(2);
    s.input_shape = {1 + rng.below(2), side, side};
  }
  return s;
}

void autodiff_correctness()
{
  Rng rng(2024);
  double worst = 0.0;
  std::size_t coords = 0;
  for (int m = 0; m < 50; ++m)
  {
    const auto spec = random_model(rng);
    auto params = models::build(spec, rng.next());
    for (auto &e : params)
      if (e.kind != ParamKind::Weight)
        for (auto &v : e.tensor.values())
          v += 0.2 * rng.normal();
    const std::size_t n = 3 + rng.below(3);
    Shape shape{n};
    shape.insert(shape.end(), spec.input_shape.begin(), spec.input_shape.end());
    data::LabeledBatch batch{gaussian(rng, shape), std::vector<int>(n)};
    for (auto &y : batch.labels)
      y = static_cast<int>(rng.below(spec.classes));
    const auto buffers = models::initial_buffers(spec);
    const auto loss = models::classification_loss(spec, batch, models::Mode::Train, &buffers);
    const auto g = ad::value_and_grad(loss, params).grad;

    const double eps = 1e-6;
    std::size_t k = 0;
    for (std::size_t e = 0; e < params.size(); ++e)
    {
      for (std::size_t i = 0; i < params[e].tensor.size(); ++i)
      {
        auto plus = params, minus = params;
        plus[e].tensor[i] += eps;
        minus[e].tensor[i] -= eps;
        const double num = (ad::forward(loss, plus).loss - ad::forward(loss, minus).loss) / (2 * eps);
        // denominators floored at 1e-6: below that both sides are finite-difference noise
        worst = std::max(worst, relative(g[k].tensor[i], num, 1e-6));
        ++coords;
      }
      ++k;
    }
  }

  double worst_hvp = 0.0;
  for (int t = 0; t < 20; ++t)
  {
    const std::size_t d = 2 + rng.below(9);
    const auto a = symmetric(rng, d);
    const auto loss = quadratic(a, gaussian(rng, {1, d}));
    ParamSet p;
    p.add("w", gaussian(rng, {1, d}), ParamKind::Weight);
    GradientSet v({{"w", gaussian(rng, {1, d})}});
    const auto hv = ad::hvp_fd(loss, p, v, 1.0).at("w");
    const auto exact = matvec(a, v.at("w").values());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < d; ++i)
    {
      num += (hv[i] - exact[i]) * (hv[i] - exact[i]);
      den += exact[i] * exact[i];
    }
    worst_hvp = std::max(worst_hvp, std::sqrt(num / den));
  }
  report(3, worst <= 1e-4 && worst_hvp <= 1e-10, "autodiff correctness",
         fmt("50 random models, %zu coordinates, max relative error %.2e; hvp on 20 quadratics max relative %.2e",
             coords, worst, worst_hvp));
}

// ---- 4 ----

bool same_trajectory(train::TrainerConfig a, train::TrainerConfig b, std::uint64_t seed)
{
  Rng rng(seed);
  const std::size_t d = 3 + rng.below(5);
  const auto fn = quadratic(symmetric(rng, d), gaussian(rng, {1, d}));
  ParamSet p;
  p.add("w", gaussian(rng, {1, d}), ParamKind::Weight);
  p.add("b", gaussian(rng, {d}), ParamKind::Bias);
  auto loss = [fn](ad::Tape &tape, const ad::ParamLeaves &l) {
    return ad::add(fn(tape, l), ad::scale(ad::sum(ad::square(l.at("b"))), 0.5));
  };
  auto pa = p, pb = p;
  auto sa = train::TrainerState::initial(pa, a), sb = train::TrainerState::initial(pb, b);
  for (int t = 0; t < 10; ++t)
  {
    train::apply_step(a, pa, sa, train::StepObjective::of(loss));
    train::apply_step(b, pb, sb, train::StepObjective::of(loss));
    if (!(pa == pb))
      return false;
  }
  return true;
}

void reduction_identities()
{
  train::TrainerConfig hero, fo, l1, sgd;
  hero.rule = train::Rule::Hero;
  hero.gamma = 0.0;
  fo.rule = train::Rule::FirstOrder;
  l1.rule = train::Rule::GradL1;
  l1.beta = 0.0;
  sgd.rule = train::Rule::Sgd;
  for (auto *c : {&hero, &fo, &l1, &sgd})
  {
    c->total_steps = 20;
    c->lr = 0.05;
  }
  int ok_hero = 0, ok_l1 = 0;
  for (std::uint64_t s = 0; s < 5; ++s)
  {
    ok_hero += same_trajectory(hero, fo, s);
    ok_l1 += same_trajectory(l1, sgd, 100 + s);
  }
  report(4, ok_hero == 5 && ok_l1 == 5, "reduction identities",
         fmt("hero(gamma=0) == first_order bitwise on %d/5 problems, grad_l1(beta=0) == sgd on %d/5 (10 steps each)",
             ok_hero, ok_l1));
}

// ---- 5 ----

struct ClosedForm
{
  double g_err = 0.0;       // G vs h^2 ||Az||^2
  double grad_err = 0.0;    // grad G vs 2 h A'A z
  double literal_err = 0.0; // grad G vs 2 h^2 A'A z
};

ClosedForm hero_closed_form(const Tensor &a, const Tensor &w0, double h)
{
  const std::size_t d = w0.size();
  ParamSet p;
  p.add("w", w0, ParamKind::Weight);
  train::TrainerConfig c;
  c.rule = train::Rule::Hero;
  c.h = h;
  c.gamma = 0.1;
  c.total_steps = 10;
  auto s = train::TrainerState::initial(p, c);
  const auto loss = quadratic(a, Tensor({1, d}));
  auto m = train::apply_step(c, p, s, train::StepObjective::of(loss));

  // independent oracle
  const auto g = matvec(a, w0.values());
  const double scale = l2_norm(w0.values()) / l2_norm(g);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i)
    z[i] = scale * g[i];
  const auto az = matvec(a, z);
  const auto aaz = matvec(a, az);
  ClosedForm out;
  out.g_err = relative(m.regularizer, h * h * dot(az, az));
  double e1 = 0, e2 = 0, n1 = 0, n2 = 0;
  const auto &rg = m.regularizer_grad.at("w");
  for (std::size_t i = 0; i < d; ++i)
  {
    e1 += std::pow(rg[i] - 2 * h * aaz[i], 2);
    n1 += std::pow(2 * h * aaz[i], 2);
    e2 += std::pow(rg[i] - 2 * h * h * aaz[i], 2);
    n2 += std::pow(2 * h * h * aaz[i], 2);
  }
  out.grad_err = std::sqrt(e1 / n1);
  out.literal_err = std::sqrt(e2 / n2);
  return out;
}

void hero_step_closed_form()
{
  ClosedForm worst;
  double worst_literal_h1 = 0.0;
  auto fold = [&](const ClosedForm &cf, double h) {
    worst.g_err = std::max(worst.g_err, cf.g_err);
    worst.grad_err = std::max(worst.grad_err, cf.grad_err);
    if (h == 1.0)
      worst_literal_h1 = std::max(worst_literal_h1, cf.literal_err);
    else
      worst.literal_err = std::max(worst.literal_err, cf.literal_err);
  };
  const Tensor diag({2, 2}, {2, 0, 0, 4});
  for (double h : {0.5, 1.0, 0.1})
    fold(hero_closed_form(diag, Tensor({1, 2}, {1, 1}), h), h);
  Rng rng(5);
  for (int t = 0; t < 30; ++t)
  {
    const std::size_t d = 2 + rng.below(7);
    const double h = t % 3 == 0 ? 1.0 : 0.05 + rng.uniform();
    fold(hero_closed_form(symmetric(rng, d), gaussian(rng, {1, d}), h), h);
  }
  const bool ok = worst.g_err <= 1e-8 && worst.grad_err <= 1e-8 && worst_literal_h1 <= 1e-8;
  report(5, ok, "HERO step closed form on quadratics",
         fmt("G vs h^2||Az||^2 max rel %.2e; grad G vs 2h A'A z max rel %.2e; vs 2h^2 A'A z at h=1 max rel %.2e",
             worst.g_err, worst.grad_err, worst_literal_h1));
  info(5, fmt("2h^2 A'A z as written differs from the derivative of G at the perturbed point whenever h != 1 "
              "(max rel %.2e over h != 1); the derivative 2h A'A z is what is checked",
              worst.literal_err));
}

// ---- 6 ----

void quantizer_invariants()
{
  Rng rng(6);
  std::size_t bad_bound = 0, bad_idem = 0, bad_levels = 0, bad_order = 0;
  for (int t = 0; t < 100; ++t)
  {
    auto w = gaussian(rng, {1 + rng.below(2000)}, std::pow(10.0, static_cast<double>(rng.below(7)) - 3));
    for (unsigned bits : {2u, 4u, 8u})
    {
      const quant::QuantSpec spec{bits};
      const auto grid = quant::grid_for(w.values(), spec);
      const auto q = quant::quantize_tensor(w, spec);
      for (std::size_t i = 0; i < w.size(); ++i)
        bad_bound += std::abs(q[i] - w[i]) > grid.delta / 2;
      bad_idem += !(quant::quantize_tensor(q, spec) == q);
      bad_levels += std::set<double>(q.values().begin(), q.values().end()).size() > (std::size_t{1} << bits);
      std::vector<std::size_t> idx(w.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return w[x] < w[y]; });
      for (std::size_t i = 1; i < idx.size(); ++i)
        bad_order += q[idx[i - 1]] > q[idx[i]];
    }
  }
  report(6, bad_bound + bad_idem + bad_levels + bad_order == 0, "quantizer invariants",
         fmt("300 tensor/bit cases: %zu entries beyond delta/2, %zu non-idempotent, %zu over 2^n levels, %zu order "
             "inversions",
             bad_bound, bad_idem, bad_levels, bad_order));
}

// ---- 7, 8, 9 ----

struct Run
{
  double eval_acc = 0.0;
  double hessian = 0.0;
  double drop4 = 0.0; // full precision minus 4-bit accuracy
};

class DeskStudy
{
public:
  explicit DeskStudy(fs::path work) : _work(std::move(work))
  {
    // 4,000 training glyphs and a clean 2,000-sample test set, stored as IDX
    fs::create_directories(_work / "idx");
    const std::uint64_t family = 99;
    auto tr = data::make_synthetic({.kind = data::SyntheticKind::Glyphs, .count = 4000, .classes = 10,
                                    .seed = 1, .family_seed = family});
    auto te = data::make_synthetic({.kind = data::SyntheticKind::Glyphs, .count = 2000, .classes = 10,
                                    .seed = 2, .family_seed = family});
    data::export_idx(tr, _work / "idx/train-images", _work / "idx/train-labels");
    data::export_idx(te, _work / "idx/test-images", _work / "idx/test-labels");
  }

  Run run(train::Rule rule, std::uint64_t seed, double noise, train::PerturbationScaling scaling, double h)
  {
    experiment::ExperimentConfig c;
    c.seed = seed;
    c.model.widths = {784, 64, 10};
    c.data.source = experiment::DataSource::Idx;
    c.data.idx.train_images = _work / "idx/train-images";
    c.data.idx.train_labels = _work / "idx/train-labels";
    c.data.idx.test_images = _work / "idx/test-images";
    c.data.idx.test_labels = _work / "idx/test-labels";
    c.noise_ratio = noise;
    c.training.epochs = 30;
    c.training.batch_size = 128;
    auto &t = c.training.trainer;
    t.rule = rule;
    t.lr = 0.1;
    t.momentum = 0.9;
    t.weight_decay = 1e-4;
    t.h = h;
    t.gamma = 0.1;
    t.scaling = scaling;
    c.quant.bits = {2, 3, 4, 6, 8};
    c.diagnostics.hessian_interval = 30;
    c.output_dir = _work / "runs" / fmt("%s-s%llu-n%g-%s-h%g", train::to_string(rule), (unsigned long long)seed,
                                        noise, train::to_string(scaling), h);
    c.validate();

    const auto t0 = Clock::now();
    auto res = experiment::run_train(c);
    auto ck = experiment::read_checkpoint(c.output_dir / experiment::checkpoint_file);
    auto rows = experiment::run_quant_sweep(ck, c.quant.bits);
    _seconds += seconds_since(t0);

    Run r;
    r.eval_acc = res.epochs.back().eval_acc;
    r.hessian = res.epochs.back().hessian_norm.value_or(NAN);
    for (const auto &row : rows)
      if (row.bits == 4)
        r.drop4 = rows[0].eval_acc - row.eval_acc;
    return r;
  }

  struct Medians
  {
    double acc, hessian, drop4;
    std::string seeds;
  };

  Medians medians(train::Rule rule, double noise = 0.0,
                  train::PerturbationScaling scaling = train::PerturbationScaling::LayerNorm, double h = 0.5)
  {
    std::vector<double> acc, hn, drop;
    std::string s;
    for (std::uint64_t seed : {0u, 1u, 2u})
    {
      auto r = run(rule, seed, noise, scaling, h);
      acc.push_back(r.eval_acc);
      hn.push_back(r.hessian);
      drop.push_back(r.drop4);
      s += fmt("%s%.4f", s.empty() ? "" : "/", r.eval_acc);
    }
    return {median(acc), median(hn), median(drop), s};
  }

  double seconds() const { return _seconds; }
  void reset_clock() { _seconds = 0; }

private:
  fs::path _work;
  double _seconds = 0.0;
};

void desk_studies(const fs::path &work)
{
  using train::Rule;
  using Scaling = train::PerturbationScaling;
  DeskStudy study(work);

  const auto sgd = study.medians(Rule::Sgd);
  const auto hero = study.medians(Rule::Hero);
  const double secs7 = study.seconds();
  const bool hess_ok = hero.hessian <= 0.5 * sgd.hessian;
  const bool acc_ok = hero.acc >= sgd.acc - 0.002;
  report(7, hess_ok && acc_ok && secs7 <= 900, "desk-scale generalization (h=0.5, gamma=0.1)",
         fmt("median Hessian norm hero %.4g vs sgd %.4g (ratio %.3f, need <= 0.5); median test acc hero %.4f [%s] vs "
             "sgd %.4f [%s]; %.0fs",
             hero.hessian, sgd.hessian, hero.hessian / sgd.hessian, hero.acc, hero.seeds.c_str(), sgd.acc,
             sgd.seeds.c_str(), secs7));

  const auto fo = study.medians(Rule::FirstOrder);
  const bool q_ok = hero.drop4 < sgd.drop4 && hero.drop4 <= fo.drop4;
  report(8, q_ok, "desk-scale 4-bit quantization",
         fmt("median 4-bit accuracy drop hero %.4f, sgd %.4f, first_order %.4f (full precision hero %.4f, sgd %.4f, "
             "first_order %.4f)",
             hero.drop4, sgd.drop4, fo.drop4, hero.acc, sgd.acc, fo.acc));

  const auto sgd_noisy = study.medians(Rule::Sgd, 0.6);
  const auto hero_noisy = study.medians(Rule::Hero, 0.6);
  report(9, hero_noisy.acc >= sgd_noisy.acc + 0.01, "desk-scale noisy labels (rho=0.6)",
         fmt("median clean test acc hero %.4f [%s] vs sgd %.4f [%s], need hero - sgd >= 0.01", hero_noisy.acc,
             hero_noisy.seeds.c_str(), sgd_noisy.acc, sgd_noisy.seeds.c_str()));

  // same protocol with a smaller perturbation step and with elementwise scaling
  for (auto [scaling, h] : {std::pair{Scaling::LayerNorm, 0.02}, std::pair{Scaling::Elementwise, 0.5}})
  {
    const auto m = study.medians(Rule::Hero, 0.0, scaling, h);
    info(7, fmt("hero %s h=%g: median Hessian norm %.4g (ratio to sgd %.3f), median test acc %.4f [%s], 4-bit drop "
                "%.4f",
                train::to_string(scaling), h, m.hessian, m.hessian / sgd.hessian, m.acc, m.seeds.c_str(), m.drop4));
    const auto n = study.medians(Rule::Hero, 0.6, scaling, h);
    info(9, fmt("hero %s h=%g, rho=0.6: median clean test acc %.4f [%s] (sgd %.4f)", train::to_string(scaling), h,
                n.acc, n.seeds.c_str(), sgd_noisy.acc));
  }
}

// ---- 10 ----

void noise_statistics()
{
  const std::size_t n = 4000, k = 10;
  auto ds = data::make_synthetic({.kind = data::SyntheticKind::Gaussians, .count = n, .classes = k, .seed = 3});
  std::size_t outside = 0;
  double worst_z = 0.0;
  for (double rho : {0.2, 0.6})
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      auto noisy = data::inject_symmetric_noise(ds, {rho, derive_seed(seed, "noise")});
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n; ++i)
        changed += noisy.labels[i] != ds.labels[i];
      const double p = rho * (k - 1.0) / k;
      const double sigma = std::sqrt(p * (1 - p) / n);
      const double zscore = std::abs(static_cast<double>(changed) / n - p) / sigma;
      worst_z = std::max(worst_z, zscore);
      outside += zscore > 3.0;
    }
  report(10, outside == 0, "label-noise statistics",
         fmt("40 draws (rho 0.2 and 0.6, 20 seeds each, N=4000, K=10): %zu outside 3 sigma, max |z| %.2f", outside,
             worst_z));
}

// ---- 11 ----

void determinism(const std::string &cli, const fs::path &work)
{
  const auto cfg = work / "determinism.json";
  std::ofstream(cfg) << R"({
  "schema_version": 1, "seed": 11,
  "model": {"arch": "smallconv", "channels": [4, 8], "batch_norm": true, "classes": 10},
  "data": {"source": "synthetic", "synthetic": {"kind": "glyphs", "train_count": 300, "test_count": 100}},
  "noise": {"ratio": 0.2},
  "trainer": {"rule": "hero", "epochs": 2, "batch_size": 64, "flip": true},
  "diagnostics": {"hessian_interval": 1, "hessian_batch": 100}
})";
  std::vector<std::string> metrics;
  bool ran = true;
  for (const char *tag : {"a", "b", "c"})
  {
    const auto out = work / "determinism" / tag;
    fs::remove_all(out);
    auto r = run_command("\"" + cli + "\" train --config \"" + cfg.string() + "\" --output-dir \"" + out.string() +
                         "\" 2>&1");
    ran = ran && r.status == 0;
    metrics.push_back(read_file(out / experiment::metrics_file));
  }
  const bool same = metrics[0] == metrics[1] && metrics[1] == metrics[2] && !metrics[0].empty();
  report(11, ran && same, "determinism", fmt("3 CLI train runs of one config, metrics.csv byte-identical: %s (%zu bytes)",
                                            same ? "yes" : "no", metrics[0].size()));
}

// ---- 12 ----

void step_cost()
{
  models::ModelSpec spec;
  auto ds = data::make_synthetic({.kind = data::SyntheticKind::Glyphs, .count = 64, .classes = 10, .seed = 1});
  auto params = models::build(spec, 1);
  train::TrainerConfig c;
  c.rule = train::Rule::Hero;
  c.total_steps = 5;
  auto s = train::TrainerState::initial(params, c);
  bool ok = true;
  ad::PassCounts seen;
  for (int t = 0; t < 5; ++t)
  {
    auto batch = ds.slice(static_cast<std::size_t>(t) * 12, static_cast<std::size_t>(t) * 12 + 12);
    auto m = train::apply_step(c, params, s,
                               train::StepObjective::of(models::classification_loss(spec, batch, models::Mode::Train,
                                                                                    nullptr)));
    seen = m.passes;
    ok = ok && m.passes.loss_backward == 2 && m.passes.regularizer_backward == 1;
  }
  report(12, ok, "HERO step cost",
         fmt("per step: %lld loss backward, %lld regularizer backward (%lld + %lld forward) over 5 steps",
             (long long)seen.loss_backward, (long long)seen.regularizer_backward, (long long)seen.loss_forward,
             (long long)seen.regularizer_forward));
}

void guarded(int id, const std::function<void()> &fn)
{
  try
  {
    fn();
  }
  catch (const std::exception &e)
  {
    report(id, false, "aborted", e.what());
  }
}

} // namespace

int main(int argc, char **argv)
{
  if (argc != 3)
  {
    std::fprintf(stderr, "usage: %s <hero_lab_cli> <work dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = fs::absolute(argv[2]);
  fs::remove_all(work);
  fs::create_directories(work);

  const auto t0 = Clock::now();
  guarded(1, [&] { bound_suite(cli, work); });
  guarded(2, vanishing_gradient_limit);
  guarded(3, autodiff_correctness);
  guarded(4, reduction_identities);
  guarded(5, hero_step_closed_form);
  guarded(6, quantizer_invariants);
  guarded(7, [&] { desk_studies(work); });
  guarded(10, noise_statistics);
  guarded(11, [&] { determinism(cli, work); });
  guarded(12, step_cost);
  std::printf("%d criteria failed, %.0fs\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
