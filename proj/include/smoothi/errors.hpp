// Copyright 2026 The SmoothI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smoothi {

/// Root of every error raised by the library. Each subclass maps to one
/// failure category so callers (the CLI in particular) can translate them
/// into exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input validation.
class InvalidInputError : public Error {
  using Error::Error;
};
class RangeError : public Error {
  using Error::Error;
};
class GradingError : public Error {
  using Error::Error;
};
class UndefinedMetricError : public Error {
  using Error::Error;
};
class ParameterError : public Error {
  using Error::Error;
};
class DomainError : public Error {
  using Error::Error;
};
class ShapeError : public Error {
  using Error::Error;
};
class StateError : public Error {
  using Error::Error;
};

// Bound certification.
class CertificateUndefinedError : public Error {
  using Error::Error;
};
class UnsupportedKError : public Error {
  using Error::Error;
};
class PreconditionError : public Error {
  using Error::Error;
};

// Data ingestion and training.
class DataError : public Error {
  using Error::Error;
};
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};
class SchemaError : public Error {
  using Error::Error;
};
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};
class ConfigError : public Error {
  using Error::Error;
};

}  // namespace smoothi
