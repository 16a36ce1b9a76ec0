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

#include "data/dataset.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace herolab::data
{

namespace
{

std::vector<std::uint8_t> read_file(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<std::uint8_t> &buf, std::size_t off)
{
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) | (std::uint32_t{buf[off + 2]} << 8) |
         std::uint32_t{buf[off + 3]};
}

void put_be32(std::ofstream &out, std::uint32_t v)
{
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

void require_size(const std::vector<std::uint8_t> &buf, std::size_t need, const std::filesystem::path &path)
{
  if (buf.size() < need)
    throw Error(ErrorCode::Truncated, "'" + path.string() + "' holds " + std::to_string(buf.size()) +
                                        " bytes, expected " + std::to_string(need));
}

} // namespace

LabeledDataset load_idx(const std::filesystem::path &images, const std::filesystem::path &labels, Normalization norm,
                        std::size_t classes)
{
  if (!(norm.std > 0.0))
    throw Error(ErrorCode::InvalidArgument, "normalization std must be positive");

  const auto img = read_file(images);
  require_size(img, 16, images);
  if (be32(img, 0) != idx_images_magic)
    throw Error(ErrorCode::BadMagic, "'" + images.string() + "' is not an IDX image file (magic " +
                                       std::to_string(be32(img, 0)) + ")");
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  if (n == 0 || rows == 0 || cols == 0)
    throw Error(ErrorCode::Format, "'" + images.string() + "' has a zero dimension");
  require_size(img, 16 + n * rows * cols, images);

  const auto lab = read_file(labels);
  require_size(lab, 8, labels);
  if (be32(lab, 0) != idx_labels_magic)
    throw Error(ErrorCode::BadMagic, "'" + labels.string() + "' is not an IDX label file (magic " +
                                       std::to_string(be32(lab, 0)) + ")");
  const std::size_t nl = be32(lab, 4);
  if (nl != n)
    throw Error(ErrorCode::CountMismatch,
                std::to_string(n) + " images but " + std::to_string(nl) + " labels");
  require_size(lab, 8 + n, labels);

  LabeledDataset ds;
  std::vector<double> values(n * rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = (static_cast<double>(img[16 + i]) / 255.0 - norm.mean) / norm.std;
  ds.inputs = Tensor(Shape{n, 1, rows, cols}, std::move(values));
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i)
  {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.classes = classes ? classes : std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  ds.validate();
  return ds;
}

void write_idx_images(const std::filesystem::path &path, std::span<const std::uint8_t> pixels, std::size_t count,
                      std::size_t rows, std::size_t cols)
{
  if (pixels.size() != count * rows * cols)
    throw ShapeError("idx images", "pixel buffer does not match count x rows x cols");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  put_be32(out, idx_images_magic);
  put_be32(out, static_cast<std::uint32_t>(count));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out)
    throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

void write_idx_labels(const std::filesystem::path &path, std::span<const int> labels)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  put_be32(out, idx_labels_magic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int y : labels)
  {
    if (y < 0 || y > 255)
      throw Error(ErrorCode::InvalidArgument, "IDX labels must fit in one byte");
    out.put(static_cast<char>(y));
  }
  if (!out)
    throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

void export_idx(const LabeledDataset &ds, const std::filesystem::path &images, const std::filesystem::path &labels)
{
  const Shape s = ds.sample_shape();
  std::size_t rows = 0, cols = 0;
  if (s.size() == 2)
    rows = s[0], cols = s[1];
  else if (s.size() == 3 && s[0] == 1)
    rows = s[1], cols = s[2];
  else
    throw ShapeError("export_idx", "samples must be single-channel images, got " + shape_str(s));
  std::vector<std::uint8_t> px(ds.inputs.size());
  for (std::size_t i = 0; i < px.size(); ++i)
  {
    const double v = std::clamp(ds.inputs[i], 0.0, 1.0);
    px[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  write_idx_images(images, px, ds.size(), rows, cols);
  write_idx_labels(labels, ds.labels);
}

} // namespace herolab::data
