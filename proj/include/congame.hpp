// Copyright 2026 The congame Authors
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

#include "congame/coverage.hpp"
#include "congame/dataset.hpp"
#include "congame/error.hpp"
#include "congame/estimators.hpp"
#include "congame/experiments.hpp"
#include "congame/format.hpp"
#include "congame/game.hpp"
#include "congame/game_io.hpp"
#include "congame/instances.hpp"
#include "congame/oracle.hpp"
#include "congame/policy.hpp"
#include "congame/rng.hpp"
#include "congame/solver.hpp"
