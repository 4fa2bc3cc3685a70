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

#include "modro/error.h"

namespace modro {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kMissingColumn: return "missing-column";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kStructure: return "structure";
    case ErrorKind::kDegenerateSplit: return "degenerate-split";
    case ErrorKind::kBounds: return "bounds";
    case ErrorKind::kFactorization: return "factorization";
    case ErrorKind::kInfiniteDivergence: return "infinite-divergence";
    case ErrorKind::kUndefinedCorrelation: return "undefined-correlation";
    case ErrorKind::kSize: return "size";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kRankDeficient: return "rank-deficient";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kArity: return "arity";
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kDegenerateBatch: return "degenerate-batch";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace modro
