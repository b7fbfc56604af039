// Copyright 2026 The snapfilter Authors
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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace snapfilter {

/// Integer copy-number vector. Entries may go negative on proposal paths.
using State = std::vector<std::int64_t>;

/// Caller broke a documented precondition (dimension mismatch, bad index).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested free/slaved split has no invertible slaved block.
class InfeasibleSplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear observation constraint admits no admissible solution.
class InfeasibleConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The rejection loop for the free counts gave up: the target looks unreachable.
class TargetUnreachableError : public std::runtime_error {
 public:
  TargetUnreachableError(const std::string& what, std::uint64_t attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  std::uint64_t attempts() const noexcept { return attempts_; }

 private:
  std::uint64_t attempts_;
};

/// Every particle carries zero weight, so no normalized estimate exists.
class AllRejectedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero observation probability or similar oracle domain failure.
class OracleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

inline std::string state_to_string(std::span<const std::int64_t> z) {
  std::string s = "(";
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(z[i]);
  }
  return s + ")";
}

}  // namespace snapfilter
