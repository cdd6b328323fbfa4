// Copyright 2026 The putmech Authors
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

#include "putmech/binary_design.hpp"
#include "putmech/linalg.hpp"
#include "putmech/mary_design.hpp"
#include "putmech/measures.hpp"
#include "putmech/neyman_pearson.hpp"
#include "putmech/oracle.hpp"
#include "putmech/perturbation.hpp"
#include "putmech/types.hpp"
