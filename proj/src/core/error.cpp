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

#include "core/error.hpp"

namespace herolab
{

const char *to_string(ErrorCode code)
{
  switch (code)
  {
    case ErrorCode::InvalidArgument:
      return "invalid argument";
    case ErrorCode::ShapeMismatch:
      return "shape mismatch";
    case ErrorCode::Config:
      return "configuration error";
    case ErrorCode::Numerical:
      return "numerical abort";
    case ErrorCode::Io:
      return "i/o error";
    case ErrorCode::BadMagic:
      return "bad magic number";
    case ErrorCode::Truncated:
      return "truncated file";
    case ErrorCode::CountMismatch:
      return "count mismatch";
    case ErrorCode::Format:
      return "format error";
  }
  return "unknown";
}

namespace
{

std::string join_violations(const std::vector<std::string> &violations)
{
  std::string msg = "invalid configuration (" + std::to_string(violations.size()) + " violation" +
                    (violations.size() == 1 ? "" : "s") + ")";
  for (const auto &v : violations)
    msg += "\n  - " + v;
  return msg;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
  : Error(ErrorCode::Config, join_violations(violations)), _violations(std::move(violations))
{
}

} // namespace herolab
