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

// Command-line front end over the hero_lab C API.

#include "hero_lab/hero_lab.h"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace
{

int exit_code(HERO_STATUS s)
{
  switch (s)
  {
    case HERO_STATUS_OK:
      return 0;
    case HERO_STATUS_CONFIG:
      return 2;
    case HERO_STATUS_NUMERICAL:
      return 3;
    default:
      return 1;
  }
}

int report(HERO_STATUS s)
{
  if (s != HERO_STATUS_OK)
  {
    const char *kind = s == HERO_STATUS_CONFIG ? "config error" : s == HERO_STATUS_NUMERICAL ? "numerical abort" : "error";
    std::cerr << "hero_lab: " << kind << ": " << hero_last_error() << '\n';
  }
  return exit_code(s);
}

void print_file(const fs::path &p)
{
  std::ifstream in(p);
  std::cout << in.rdbuf();
}

std::string number(double v)
{
  if (std::isnan(v))
    return "n/a";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// "2..16", "4" or "2,4,8"
std::optional<std::vector<unsigned>> parse_bits(const std::string &text)
{
  auto to_uint = [](std::string_view s) -> std::optional<unsigned> {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      return std::nullopt;
    return v;
  };
  std::vector<unsigned> out;
  if (auto pos = text.find(".."); pos != std::string::npos)
  {
    auto lo = to_uint(std::string_view(text).substr(0, pos));
    auto hi = to_uint(std::string_view(text).substr(pos + 2));
    if (!lo || !hi || *lo > *hi)
      return std::nullopt;
    for (unsigned b = *lo; b <= *hi; ++b)
      out.push_back(b);
    return out;
  }
  std::string_view rest = text;
  while (!rest.empty())
  {
    auto comma = rest.find(',');
    auto v = to_uint(rest.substr(0, comma));
    if (!v)
      return std::nullopt;
    out.push_back(*v);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Hessian-regularized training lab"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "kernel thread cap (default: HERO_LAB_THREADS or all cores)");

  std::string config_path, output_dir;
  auto *train = app.add_subcommand("train", "train one configuration");
  train->add_option("--config", config_path, "experiment JSON")->required();
  train->add_option("--output-dir", output_dir, "override the config's output_dir");

  std::string checkpoint, bits_text, output;
  auto *qs = app.add_subcommand("quant-sweep", "post-training quantization sweep of a checkpoint");
  qs->add_option("--checkpoint", checkpoint)->required();
  qs->add_option("--bits", bits_text, "range a..b or list a,b,c (default: the config's bit list)");
  qs->add_option("--output", output, "CSV path (default: quant_sweep.csv next to the checkpoint)");

  std::size_t trials = 1000, dim_max = 8;
  std::uint64_t seed = 0;
  auto *bc = app.add_subcommand("bound-check", "closed-form perturbation bounds against brute force");
  bc->add_option("--trials", trials)->capture_default_str();
  bc->add_option("--dim-max", dim_max)->capture_default_str();
  bc->add_option("--seed", seed)->capture_default_str();
  bc->add_option("--output", output, "CSV path (default: bounds.csv)");

  double half_width = 1.0;
  std::size_t steps = 41;
  auto *ct = app.add_subcommand("contour", "loss surface along two filter-normalized random directions");
  ct->add_option("--checkpoint", checkpoint)->required();
  ct->add_option("--half-width", half_width)->capture_default_str();
  ct->add_option("--steps", steps, "odd grid size")->capture_default_str();
  ct->add_option("--output", output, "CSV path (default: contour.csv next to the checkpoint)");

  std::vector<std::string> configs;
  auto *cmp = app.add_subcommand("compare", "train or load several configurations and tabulate them");
  cmp->add_option("--configs", configs)->required();
  cmp->add_option("--output", output, "CSV path (default: compare.csv)");

  CLI11_PARSE(app, argc, argv);
  if (threads)
    hero_set_threads(threads);

  if (*train)
  {
    hero_experiment *exp = nullptr;
    if (auto s = hero_experiment_load(&exp, config_path.c_str()); s != HERO_STATUS_OK)
      return report(s);
    HERO_STATUS s = HERO_STATUS_OK;
    if (!output_dir.empty())
      s = hero_experiment_set_output_dir(exp, output_dir.c_str());
    if (s == HERO_STATUS_OK)
      s = hero_experiment_train(exp);
    hero_epoch_metrics m{};
    if (s == HERO_STATUS_OK)
      s = hero_experiment_final_metrics(exp, &m);
    if (s == HERO_STATUS_OK)
    {
      std::cout << "epochs=" << m.epoch << " train_acc=" << number(m.train_acc) << " eval_acc=" << number(m.eval_acc);
      if (m.has_hessian_norm)
        std::cout << " hessian_norm=" << number(m.hessian_norm);
      std::cout << '\n';
    }
    hero_experiment_free(exp);
    return report(s);
  }

  if (*qs || *ct)
  {
    hero_checkpoint *ck = nullptr;
    if (auto s = hero_checkpoint_load(&ck, checkpoint.c_str()); s != HERO_STATUS_OK)
      return report(s);
    const auto dir = fs::path(checkpoint).parent_path();
    HERO_STATUS s;
    if (*qs)
    {
      std::vector<unsigned> bits;
      if (!bits_text.empty())
      {
        auto parsed = parse_bits(bits_text);
        if (!parsed)
        {
          hero_checkpoint_free(ck);
          std::cerr << "hero_lab: bad --bits '" << bits_text << "'\n";
          return 2;
        }
        bits = *parsed;
      }
      if (output.empty())
        output = (dir / "quant_sweep.csv").string();
      s = bits_text.empty() ? hero_quant_sweep(ck, nullptr, 0, output.c_str())
                            : hero_quant_sweep(ck, bits.data(), bits.size(), output.c_str());
    }
    else
    {
      if (output.empty())
        output = (dir / "contour.csv").string();
      s = hero_contour(ck, half_width, steps, output.c_str());
    }
    hero_checkpoint_free(ck);
    if (s == HERO_STATUS_OK && *qs)
      print_file(output);
    else if (s == HERO_STATUS_OK)
      std::cout << "wrote " << output << '\n';
    return report(s);
  }

  if (*bc)
  {
    if (output.empty())
      output = "bounds.csv";
    hero_bound_summary sum{};
    auto s = hero_bound_check(trials, dim_max, seed, output.c_str(), &sum);
    if (s == HERO_STATUS_OK)
      std::cout << "trials=" << sum.trials << " violations_l2=" << sum.violations_l2
                << " violations_linf=" << sum.violations_linf << " median_slack_l2=" << number(sum.median_slack_l2)
                << " median_slack_linf=" << number(sum.median_slack_linf) << '\n';
    return report(s);
  }

  if (*cmp)
  {
    if (output.empty())
      output = "compare.csv";
    std::vector<const char *> paths;
    for (const auto &c : configs)
      paths.push_back(c.c_str());
    auto s = hero_compare(paths.data(), paths.size(), output.c_str());
    if (s == HERO_STATUS_OK)
      print_file(output);
    return report(s);
  }
  return 1;
}
