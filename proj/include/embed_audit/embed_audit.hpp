// Copyright 2026 The embed-audit Authors
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

#include "embed_audit/dataset.hpp"
#include "embed_audit/defense.hpp"
#include "embed_audit/errors.hpp"
#include "embed_audit/experiments.hpp"
#include "embed_audit/inversion.hpp"
#include "embed_audit/kmeans.hpp"
#include "embed_audit/losses.hpp"
#include "embed_audit/metrics.hpp"
#include "embed_audit/mia.hpp"
#include "embed_audit/network.hpp"
#include "embed_audit/optim.hpp"
#include "embed_audit/parallel.hpp"
#include "embed_audit/pia.hpp"
#include "embed_audit/rng.hpp"
#include "embed_audit/tensor.hpp"
#include "embed_audit/version.hpp"
