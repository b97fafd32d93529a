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

// Umbrella header.

#ifndef RESPLAN_RESPLAN_HPP_
#define RESPLAN_RESPLAN_HPP_

#include "resplan/accounting.hpp"
#include "resplan/errors.hpp"
#include "resplan/kron.hpp"
#include "resplan/mechanism.hpp"
#include "resplan/planner.hpp"
#include "resplan/reconstruct.hpp"
#include "resplan/schema.hpp"

#endif  // RESPLAN_RESPLAN_HPP_
