// Copyright 2026 The RALM Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace ralm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A vector with zero norm was passed where a direction is required.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergenceError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class NoSeedsError : public Error {
 public:
  using Error::Error;
};

class UserNotFoundError : public Error {
 public:
  using Error::Error;
};

/// Metric is not defined for the given input (e.g. AUC of a single class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage was started before its prerequisite artifact existed.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration value or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncated data, invalid JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ralm
