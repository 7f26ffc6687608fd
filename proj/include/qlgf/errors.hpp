// Copyright 2026 The qlgf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qlgf {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    physics = 2,
    numerical = 3,
    io = 4,
};

/// Base of every error thrown by the library. Each subclass knows which
/// exit code the CLI should report for it.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::physics; }
};

/// An argument outside the physical domain of an operation (B <= 0, ...).
class DomainError : public Error {
   public:
    using Error::Error;
};

/// The requested trap cannot confine the particle.
class UnstableTrapError : public Error {
   public:
    UnstableTrapError(const std::string &what, double omega_c, double omega_z)
        : Error(what), omega_c_(omega_c), omega_z_(omega_z) {}
    double omega_c() const noexcept { return omega_c_; }
    double omega_z() const noexcept { return omega_z_; }

   private:
    double omega_c_;
    double omega_z_;
};

/// Population leaked into the highest retained Fock level.
class TruncationError : public Error {
   public:
    TruncationError(const std::string &what, double top_population)
        : Error(what), top_population_(top_population) {}
    double top_population() const noexcept { return top_population_; }
    ExitCode exit_code() const noexcept override { return ExitCode::numerical; }

   private:
    double top_population_;
};

/// A fit or estimator failed to converge.
class EstimationError : public Error {
   public:
    EstimationError(const std::string &what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const std::vector<double> &residuals() const noexcept { return residuals_; }
    ExitCode exit_code() const noexcept override { return ExitCode::numerical; }

   private:
    std::vector<double> residuals_;
};

/// Interleaved measurement windows that cannot be paired up.
class AlignmentError : public Error {
   public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (parse, unknown key, cross-reference).
class ConfigError : public Error {
   public:
    ConfigError(const std::string &what, std::string key = {}, int line = -1, int column = -1)
        : Error(what), key_(std::move(key)), line_(line), column_(column) {}
    const std::string &key() const noexcept { return key_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

   private:
    std::string key_;
    int line_;
    int column_;
};

/// Bad command line usage.
class UsageError : public Error {
   public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

class IoError : public Error {
   public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

}  // namespace qlgf
