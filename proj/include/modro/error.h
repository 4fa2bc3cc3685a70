// Copyright 2026 The modro Authors
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

#ifndef MODRO_ERROR_H_
#define MODRO_ERROR_H_

#include <stdexcept>
#include <string>

namespace modro {

enum class ErrorKind {
  kValidation,
  kMissingColumn,
  kParse,
  kStructure,
  kDegenerateSplit,
  kBounds,
  kFactorization,
  kInfiniteDivergence,
  kUndefinedCorrelation,
  kSize,
  kCapacity,
  kRankDeficient,
  kShape,
  kArity,
  kDegenerateInput,
  kDegenerateBatch,
  kDivergence,
  kSchema,
  kDomain,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a kind so callers can branch
// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when training produces non-finite parameters.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& message)
      : Error(ErrorKind::kDivergence, message), epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace modro

#endif  // MODRO_ERROR_H_
