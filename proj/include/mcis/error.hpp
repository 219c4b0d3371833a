// Copyright 2026 The MCIS Authors
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

#ifndef MCIS_ERROR_HPP
#define MCIS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcis {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a precondition (wrong dimension, non-finite input, bad enum name, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A closed-form oracle was requested for a target/proposal combination that has none.
class UnsupportedOracleError : public Error {
 public:
  using Error::Error;
};

/// Factorization failed even after jitter escalation.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> attempted_jitter)
      : Error(what), attempted_jitter_(std::move(attempted_jitter)) {}

  const std::vector<double>& attempted_jitter() const noexcept { return attempted_jitter_; }

 private:
  std::vector<double> attempted_jitter_;
};

/// The chain state has zero target density, so the acceptance ratio is undefined.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// The initial state of a chain has a non-finite log density.
class InitializationError : public Error {
 public:
  using Error::Error;
};

/// Every importance weight vanished.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// Step-size search did not reach the requested acceptance rate.
class TuningError : public Error {
 public:
  struct Attempt {
    double theta;
    double rate;
  };

  TuningError(const std::string& what, std::vector<Attempt> history)
      : Error(what), history_(std::move(history)) {}

  const std::vector<Attempt>& history() const noexcept { return history_; }

 private:
  std::vector<Attempt> history_;
};

}  // namespace mcis

#endif  // MCIS_ERROR_HPP
