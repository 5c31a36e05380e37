// Copyright 2026 The carleson-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "carleson_lab/bench.hpp"
#include "carleson_lab/bergman.hpp"
#include "carleson_lab/dirichlet.hpp"
#include "carleson_lab/dyadic.hpp"
#include "carleson_lab/errors.hpp"
#include "carleson_lab/geometry.hpp"
#include "carleson_lab/kernels.hpp"
#include "carleson_lab/lemmas.hpp"
#include "carleson_lab/measures.hpp"
#include "carleson_lab/operators.hpp"
#include "carleson_lab/parallel.hpp"
#include "carleson_lab/quadrature.hpp"
#include "carleson_lab/random.hpp"
#include "carleson_lab/report.hpp"
#include "carleson_lab/weights.hpp"
