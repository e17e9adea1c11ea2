/*
 * Copyright 2026 The thingsyntax Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef THINGSYNTAX_ERRORS_H_
#define THINGSYNTAX_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thingsyntax {

// Base class of every error raised by the library. `code()` is a stable
// machine-readable identifier used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class InvalidGeometry : public Error {
 public:
  explicit InvalidGeometry(const std::string& message)
      : Error("invalid-geometry", message) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& message)
      : Error("invalid-input", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("configuration", message) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& message)
      : Error("insufficient-data", message) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message)
      : Error("dimension-mismatch", message) {}
};

// Model or data file that is unreadable, truncated, of the wrong kind, or of
// an unsupported version.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error("format", message) {}
};

// Statement text that does not belong to the closed grammar. `position` is
// the zero-based index of the offending token, `line` is one-based when the
// text came from a multi-line source and 0 otherwise.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string token,
             std::size_t position, std::size_t line = 0)
      : Error("parse", message),
        token_(std::move(token)),
        position_(position),
        line_(line) {}

  const std::string& token() const { return token_; }
  std::size_t position() const { return position_; }
  std::size_t line() const { return line_; }

 private:
  std::string token_;
  std::size_t position_;
  std::size_t line_;
};

}  // namespace thingsyntax

#endif  // THINGSYNTAX_ERRORS_H_
