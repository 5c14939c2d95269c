// Copyright 2026 The btlcov Authors
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

#ifndef BTLCOV_BTLCOV_HPP_
#define BTLCOV_BTLCOV_HPP_

#include "btlcov/diagnostics.hpp"
#include "btlcov/graph.hpp"
#include "btlcov/inference.hpp"
#include "btlcov/io.hpp"
#include "btlcov/model.hpp"
#include "btlcov/rng.hpp"
#include "btlcov/simulate.hpp"
#include "btlcov/solver.hpp"
#include "btlcov/stats.hpp"
#include "btlcov/types.hpp"

#endif  // BTLCOV_BTLCOV_HPP_
