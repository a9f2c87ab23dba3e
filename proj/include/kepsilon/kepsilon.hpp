//
// Copyright 2026 The kepsilon Authors
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

#ifndef KEPSILON_KEPSILON_HPP_
#define KEPSILON_KEPSILON_HPP_

#include "kepsilon/config.hpp"
#include "kepsilon/csv.hpp"
#include "kepsilon/dataset.hpp"
#include "kepsilon/dp_noise.hpp"
#include "kepsilon/generalisation.hpp"
#include "kepsilon/kanon.hpp"
#include "kepsilon/loss_metrics.hpp"
#include "kepsilon/partition.hpp"
#include "kepsilon/pipeline.hpp"
#include "kepsilon/risk_eval.hpp"
#include "kepsilon/rng.hpp"
#include "kepsilon/status.hpp"
#include "kepsilon/synth.hpp"

#endif  // KEPSILON_KEPSILON_HPP_
