// Copyright 2026 The skillmpc Authors
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

// Umbrella header.

#ifndef SKILLMPC_SKILLMPC_H_
#define SKILLMPC_SKILLMPC_H_

#include "skillmpc/core.h"
#include "skillmpc/envs.h"
#include "skillmpc/experts.h"
#include "skillmpc/semantic.h"
#include "skillmpc/fusion.h"
#include "skillmpc/mlp.h"
#include "skillmpc/world_model.h"
#include "skillmpc/planner.h"
#include "skillmpc/replay_buffer.h"
#include "skillmpc/config.h"
#include "skillmpc/training.h"
#include "skillmpc/ablation.h"
#include "skillmpc/checks.h"

#endif  // SKILLMPC_SKILLMPC_H_
