// Copyright 2026 The prior-forge Authors.
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

// Umbrella header for the library modules.

#include "prior_forge/error.hpp"
#include "prior_forge/families.hpp"
#include "prior_forge/grid_density.hpp"
#include "prior_forge/parallel.hpp"
#include "prior_forge/pooling.hpp"
#include "prior_forge/propriety.hpp"
#include "prior_forge/quadrature.hpp"
#include "prior_forge/random.hpp"
#include "prior_forge/reparam.hpp"
#include "prior_forge/sparse_multinomial.hpp"
#include "prior_forge/special.hpp"
#include "prior_forge/table.hpp"
