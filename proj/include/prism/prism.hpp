/*
 * Copyright 2026 The PRISm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "prism/config.hpp"
#include "prism/error.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/gnn/gnn.hpp"
#include "prism/gnn/graph_batch.hpp"
#include "prism/gradcheck_suites.hpp"
#include "prism/graphcore/blob.hpp"
#include "prism/graphcore/manifest.hpp"
#include "prism/graphcore/types.hpp"
#include "prism/importance/ground_truth.hpp"
#include "prism/importance/model.hpp"
#include "prism/importance/train.hpp"
#include "prism/numerics/attention.hpp"
#include "prism/numerics/checkpoint.hpp"
#include "prism/numerics/gradcheck.hpp"
#include "prism/numerics/layers.hpp"
#include "prism/numerics/ops.hpp"
#include "prism/numerics/optim.hpp"
#include "prism/numerics/tape.hpp"
#include "prism/numerics/tensor.hpp"
#include "prism/numerics/training.hpp"
#include "prism/pipeline.hpp"
#include "prism/pruner/jenks.hpp"
#include "prism/pruner/prune.hpp"
#include "prism/pruner/retention.hpp"
#include "prism/retrieval/index.hpp"
#include "prism/retrieval/model.hpp"
#include "prism/retrieval/similarity.hpp"
#include "prism/retrieval/train.hpp"
#include "prism/synth.hpp"
