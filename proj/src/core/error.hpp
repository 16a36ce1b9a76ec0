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

#ifndef HERO_LAB_CORE_ERROR_HPP
#define HERO_LAB_CORE_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace herolab
{

enum class ErrorCode
{
  InvalidArgument,
  ShapeMismatch,
  Config,
  Numerical,
  Io,
  BadMagic,
  Truncated,
  CountMismatch,
  Format,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string &message) : std::runtime_error(message), _code(code) {}

  ErrorCode code() const noexcept { return _code; }

private:
  ErrorCode _code;
};

// Raised when a tensor or parameter does not have the shape an operation expects.
// `subject()` names the offending parameter or operand.
class ShapeError : public Error
{
public:
  ShapeError(std::string subject, const std::string &message)
    : Error(ErrorCode::ShapeMismatch, subject + ": " + message), _subject(std::move(subject))
  {
  }

  const std::string &subject() const noexcept { return _subject; }

private:
  std::string _subject;
};

// Carries every violation found while validating a configuration.
class ConfigError : public Error
{
public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string> &violations() const noexcept { return _violations; }

private:
  std::vector<std::string> _violations;
};

class NumericalError : public Error
{
public:
  NumericalError(std::int64_t step, const std::string &message)
    : Error(ErrorCode::Numerical, "step " + std::to_string(step) + ": " + message), _step(step)
  {
  }

  std::int64_t step() const noexcept { return _step; }

private:
  std::int64_t _step;
};

} // namespace herolab

#endif // HERO_LAB_CORE_ERROR_HPP
