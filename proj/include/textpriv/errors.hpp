// Copyright 2026 The textpriv Authors
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

namespace textpriv {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input. `line()` is 1-based; 0 when the failure is not tied to a
// line (e.g. a truncated binary cache).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "parse"; }

 private:
  std::size_t line_;
};

class EmptyTableError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "empty_table"; }
};

class LookupError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "lookup"; }
};

// Violated precondition of a public operation (bad dimensions, epsilon <= 0,
// inconsistent configuration, ...).
class ContractError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
};

class EstimationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "estimation"; }
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& message, double achieved_fraction)
      : Error(message), achieved_fraction_(achieved_fraction) {}
  // Fraction of deniable words reached at the smallest grid epsilon.
  double achieved_fraction() const noexcept { return achieved_fraction_; }
  const char* kind() const noexcept override { return "calibration"; }

 private:
  double achieved_fraction_;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace textpriv
