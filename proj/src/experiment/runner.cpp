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

#include "experiment/runner.hpp"

#include "core/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace herolab::experiment
{

namespace fs = std::filesystem;

std::string format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::vector<std::string> layer_names(const models::ModelSpec &spec)
{
  std::vector<std::string> names;
  for (const auto &p : models::expected_params(spec))
    if (p.kind == ParamKind::Weight)
      names.push_back(p.name);
  return names;
}

void write_metrics_header(std::ostream &out, std::span<const std::string> layers)
{
  out << "epoch,train_loss,train_acc,eval_loss,eval_acc,hessian_norm,regularizer,lr";
  for (const auto &l : layers)
    out << ",z_norm:" << l;
  for (const auto &l : layers)
    out << ",G:" << l;
  out << '\n';
}

void write_metrics_row(std::ostream &out, std::span<const std::string> layers, const train::EpochMetrics &m)
{
  auto opt = [](const std::optional<double> &v) { return v ? format_number(*v) : std::string(); };
  out << m.epoch << ',' << format_number(m.train_loss) << ',' << format_number(m.train_acc) << ','
      << format_number(m.eval_loss) << ',' << format_number(m.eval_acc) << ',' << opt(m.hessian_norm) << ','
      << opt(m.regularizer) << ',' << format_number(m.lr);
  auto find = [&](const std::string &name) -> const train::LayerSeries * {
    for (const auto &l : m.layers)
      if (l.name == name)
        return &l;
    return nullptr;
  };
  for (const auto &l : layers)
  {
    out << ',';
    if (auto *s = find(l))
      out << format_number(s->z_norm);
  }
  for (const auto &l : layers)
  {
    out << ',';
    if (auto *s = find(l))
      out << format_number(s->regularizer);
  }
  out << '\n';
}

void write_timing_csv(std::ostream &out, std::span<const train::EpochMetrics> epochs)
{
  out << "epoch,wall_ms\n";
  for (const auto &e : epochs)
    out << e.epoch << ',' << format_number(e.wall_ms) << '\n';
}

void write_sweep_csv(std::ostream &out, std::span<const quant::SweepRow> rows)
{
  out << "bits,eval_loss,eval_acc\n";
  for (const auto &r : rows)
    out << r.bits << ',' << format_number(r.eval_loss) << ',' << format_number(r.eval_acc) << '\n';
}

void write_bounds_csv(std::ostream &out, std::span<const lab::BoundReport> reports)
{
  out << "trial,dim,c,v,g_norm2,g_norm1,lower_bound_l2,bruteforce_l2,slack_l2,lower_bound_linf,bruteforce_linf,"
         "slack_linf\n";
  for (const auto &r : reports)
    out << r.trial << ',' << r.dim << ',' << format_number(r.c) << ',' << format_number(r.v) << ','
        << format_number(r.g_norm2) << ',' << format_number(r.g_norm1) << ',' << format_number(r.lower_bound_l2) << ','
        << format_number(r.bruteforce_l2) << ',' << format_number(r.slack_l2()) << ','
        << format_number(r.lower_bound_linf) << ',' << format_number(r.bruteforce_linf) << ','
        << format_number(r.slack_linf()) << '\n';
}

void write_contour_csv(std::ostream &out, const lab::ContourGrid &grid)
{
  out << "a,b,loss\n";
  for (std::size_t i = 0; i < grid.steps(); ++i)
    for (std::size_t j = 0; j < grid.steps(); ++j)
      out << format_number(grid.coords[i]) << ',' << format_number(grid.coords[j]) << ','
          << format_number(grid.at(i, j)) << '\n';
}

// ---- checkpoint ----

namespace
{

constexpr std::array<char, 8> ckpt_magic{'H', 'E', 'R', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t ckpt_version = 1;

template <class T> void put(std::ostream &out, T v)
{
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <class T> T take(std::istream &in, const char *what)
{
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size()))
    throw Error(ErrorCode::Truncated, std::string("checkpoint truncated in ") + what);
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void put_string(std::ostream &out, const std::string &s)
{
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream &in, const char *what, std::uint64_t limit = 1u << 26)
{
  const auto n = take<std::uint64_t>(in, what);
  if (n > limit)
    throw Error(ErrorCode::Format, std::string("checkpoint ") + what + " length " + std::to_string(n) + " too large");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n)))
    throw Error(ErrorCode::Truncated, std::string("checkpoint truncated in ") + what);
  return s;
}

} // namespace

void write_checkpoint(const fs::path &path, const Checkpoint &ckpt)
{
  std::ostringstream out(std::ios::binary);
  out.write(ckpt_magic.data(), ckpt_magic.size());
  put<std::uint32_t>(out, ckpt_version);
  put_string(out, to_json(ckpt.config).dump());
  put<std::uint64_t>(out, ckpt.params.size());
  for (const auto &e : ckpt.params)
  {
    put_string(out, e.name);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
    put<std::uint8_t>(out, e.trainable ? 1 : 0);
    write_tensor(out, e.tensor);
  }
  put<std::uint64_t>(out, ckpt.buffers.size());
  for (const auto &b : ckpt.buffers)
  {
    put_string(out, b.name);
    write_tensor(out, b.mean);
    write_tensor(out, b.var);
  }
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  const auto bytes = out.str();
  if (!file.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw Error(ErrorCode::Io, "cannot write checkpoint " + path.string());
}

Checkpoint read_checkpoint(const fs::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()))
    throw Error(ErrorCode::Truncated, "checkpoint truncated in header");
  if (magic != ckpt_magic)
    throw Error(ErrorCode::BadMagic, path.string() + " is not a checkpoint");
  if (auto v = take<std::uint32_t>(in, "header"); v != ckpt_version)
    throw Error(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(v));

  Checkpoint ck;
  ck.config = parse_config_text(take_string(in, "config"));
  const auto n = take<std::uint64_t>(in, "parameter count");
  if (n > 1u << 20)
    throw Error(ErrorCode::Format, "implausible parameter count " + std::to_string(n));
  for (std::uint64_t i = 0; i < n; ++i)
  {
    auto name = take_string(in, "parameter name", 1u << 12);
    const auto kind = take<std::uint8_t>(in, "parameter kind");
    if (kind > static_cast<std::uint8_t>(ParamKind::BnShift))
      throw Error(ErrorCode::Format, "bad parameter kind for " + name);
    const bool trainable = take<std::uint8_t>(in, "parameter flags") != 0;
    ck.params.add(std::move(name), read_tensor(in), static_cast<ParamKind>(kind), trainable);
  }
  const auto nb = take<std::uint64_t>(in, "buffer count");
  if (nb > 1u << 16)
    throw Error(ErrorCode::Format, "implausible buffer count " + std::to_string(nb));
  for (std::uint64_t i = 0; i < nb; ++i)
  {
    models::RunningStats s;
    s.name = take_string(in, "buffer name", 1u << 12);
    s.mean = read_tensor(in);
    s.var = read_tensor(in);
    ck.buffers.push_back(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::Format, "trailing bytes after checkpoint");
  models::check_params(ck.config.model, ck.params);
  if (ck.buffers.size() != models::initial_buffers(ck.config.model).size())
    throw Error(ErrorCode::Format, "checkpoint buffers do not match the model");
  return ck;
}

// ---- runs ----

namespace
{

std::ofstream open_out(const fs::path &path)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  return f;
}

} // namespace

namespace
{

nlohmann::json metrics_metadata(const ExperimentConfig &c, const std::vector<std::string> &layers)
{
  nlohmann::json cols = nlohmann::json::object();
  cols["train_loss"] = "mean training loss over the epoch's steps, clean weights, training-mode batch norm";
  cols["train_acc"] = "accuracy of the clean forward passes over the epoch";
  cols["eval_loss"] = "test-set loss, eval-mode batch norm";
  cols["eval_acc"] = "test-set accuracy";
  cols["hessian_norm"] = "||H z||_2 on the training set; empty on epochs where it is not computed";
  cols["regularizer"] = "epoch mean of G = sum over layers of ||grad L(W + h z) - grad L(W)||^2, h-dependent "
                        "(no 1/h^2); empty for rules without a perturbation";
  cols["lr"] = "learning rate of the epoch's last step";
  cols["z_norm:<layer>"] = "epoch mean of ||z||_2 for the layer";
  cols["G:<layer>"] = "epoch mean of the layer's share of G";

  nlohmann::json hessian;
  hessian["direction"] = "z from the layer-norm perturbation of each batch's own gradient";
  hessian["aggregation"] = "global l2 norm of the concatenated Hessian-vector product over all perturbable "
                           "(weight) tensors, averaged over sequential batches";
  hessian["hvp"] = "forward difference (grad L(W + h z) - grad L(W)) / h";
  hessian["h"] = c.diagnostics.hessian_h;
  hessian["batch_size"] = c.diagnostics.hessian_batch;
  hessian["dataset"] = "train";
  hessian["batch_norm"] = "eval mode (running statistics)";
  hessian["interval"] = c.diagnostics.hessian_interval;

  nlohmann::json meta;
  meta["columns"] = cols;
  meta["layers"] = layers;
  meta["hessian_norm"] = hessian;
  meta["timing"] = timing_file;
  return meta;
}

} // namespace

train::TrainResult run_train(const ExperimentConfig &c)
{
  c.validate();
  const auto ds = load_datasets(c);
  fs::create_directories(c.output_dir);

  {
    auto f = open_out(c.output_dir / resolved_config_file);
    f << to_json(c).dump(2) << '\n';
  }

  const auto layers = layer_names(c.model);
  {
    auto f = open_out(c.output_dir / metrics_meta_file);
    f << metrics_metadata(c, layers).dump(2) << '\n';
  }
  auto metrics = open_out(c.output_dir / metrics_file);
  write_metrics_header(metrics, layers);

  train::TrainOptions opts;
  opts.batch_size = c.training.batch_size;
  opts.epochs = c.training.epochs;
  opts.flip = c.training.flip;
  opts.hessian_interval = c.diagnostics.hessian_interval;
  opts.hessian.h = c.diagnostics.hessian_h;
  opts.hessian.batch_size = c.diagnostics.hessian_batch;
  opts.on_epoch = [&](const train::EpochMetrics &m) {
    write_metrics_row(metrics, layers, m);
    metrics.flush();
  };

  auto result = train::train(c.model, ds.train, ds.test, c.training.trainer, opts, c.seed);
  {
    auto f = open_out(c.output_dir / timing_file);
    write_timing_csv(f, result.epochs);
  }
  write_checkpoint(c.output_dir / checkpoint_file, {c, result.params, result.buffers});

  if (c.diagnostics.contour.steps > 0)
  {
    auto grid = lab::loss_contour(c.model, result.params, result.buffers, ds.test, c.diagnostics.contour.half_width,
                                  c.diagnostics.contour.steps, c.seed);
    auto f = open_out(c.output_dir / contour_file);
    write_contour_csv(f, grid);
  }
  return result;
}

std::vector<quant::SweepRow> run_quant_sweep(const Checkpoint &ckpt, std::span<const unsigned> bits)
{
  const auto ds = load_datasets(ckpt.config);
  return quant::sweep(ckpt.config.model, ckpt.params, ckpt.buffers, ds.test, bits, ckpt.config.quant.range);
}

lab::ContourGrid run_contour(const Checkpoint &ckpt, double half_width, std::size_t steps)
{
  const auto ds = load_datasets(ckpt.config);
  return lab::loss_contour(ckpt.config.model, ckpt.params, ckpt.buffers, ds.test, half_width, steps,
                           ckpt.config.seed);
}

std::string bound_summary(const lab::BoundSweep &s)
{
  auto med = [](double v) { return std::isnan(v) ? std::string("n/a") : format_number(v); };
  return "trials=" + std::to_string(s.reports.size()) + " violations_l2=" + std::to_string(s.violations_l2) +
         " violations_linf=" + std::to_string(s.violations_linf) + " median_slack_l2=" + med(s.median_slack_l2) +
         " median_slack_linf=" + med(s.median_slack_linf);
}

namespace
{

std::vector<std::string> split_csv(const std::string &line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    out.push_back(cell);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

double parse_double(const std::string &s)
{
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorCode::Format, "bad number '" + s + "' in metrics.csv");
  return v;
}

// Last row of metrics.csv keyed by column name.
std::map<std::string, std::string> last_metrics(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string header, line, last;
  std::getline(in, header);
  while (std::getline(in, line))
    if (!line.empty())
      last = line;
  if (last.empty())
    throw Error(ErrorCode::Format, path.string() + " has no rows");
  const auto names = split_csv(header);
  const auto cells = split_csv(last);
  if (names.size() != cells.size())
    throw Error(ErrorCode::Format, path.string() + ": ragged row");
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    out[names[i]] = cells[i];
  return out;
}

} // namespace

std::vector<CompareRow> run_compare(std::span<const fs::path> configs)
{
  std::vector<CompareRow> rows;
  for (const auto &path : configs)
  {
    const auto c = load_config(path);
    const auto ckpt_path = c.output_dir / checkpoint_file;
    const auto metrics_path = c.output_dir / metrics_file;
    bool reuse = false;
    if (fs::exists(ckpt_path) && fs::exists(metrics_path))
    {
      try
      {
        reuse = read_checkpoint(ckpt_path).config == c;
      }
      catch (const Error &)
      {
        reuse = false;
      }
    }
    if (!reuse)
      run_train(c);

    const auto ck = read_checkpoint(ckpt_path);
    const auto m = last_metrics(metrics_path);
    CompareRow r;
    r.config = path.string();
    r.rule = train::to_string(c.training.trainer.rule);
    r.seed = c.seed;
    r.noise = c.noise_ratio;
    r.train_acc = parse_double(m.at("train_acc"));
    r.eval_acc = parse_double(m.at("eval_acc"));
    if (const auto &h = m.at("hessian_norm"); !h.empty())
      r.hessian_norm = parse_double(h);
    r.sweep = run_quant_sweep(ck, c.quant.bits);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_compare_csv(std::ostream &out, std::span<const CompareRow> rows)
{
  std::set<unsigned> bits;
  for (const auto &r : rows)
    for (const auto &s : r.sweep)
      if (s.bits)
        bits.insert(s.bits);
  out << "config,rule,seed,noise,train_acc,eval_acc,hessian_norm";
  for (unsigned b : bits)
    out << ",acc_" << b << "bit";
  out << '\n';
  for (const auto &r : rows)
  {
    out << r.config << ',' << r.rule << ',' << r.seed << ',' << format_number(r.noise) << ','
        << format_number(r.train_acc) << ',' << format_number(r.eval_acc) << ','
        << (r.hessian_norm ? format_number(*r.hessian_norm) : std::string());
    for (unsigned b : bits)
    {
      out << ',';
      for (const auto &s : r.sweep)
        if (s.bits == b)
        {
          out << format_number(s.eval_acc);
          break;
        }
    }
    out << '\n';
  }
}

} // namespace herolab::experiment
