// Copyright 2026 The ResPlan Authors
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
//

#ifndef RESPLAN_ERRORS_HPP_
#define RESPLAN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace resplan {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or malformed configuration (schema, workload, plan, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Records that do not fit the schema.
class DataError : public Error {
 public:
  using Error::Error;
};

// The noise-scale optimizer failed to reach its tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace resplan

#endif  // RESPLAN_ERRORS_HPP_
