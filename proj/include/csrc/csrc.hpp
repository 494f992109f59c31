// Copyright 2026 The csrc Authors.
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

#include "csrc/baselines.hpp"
#include "csrc/dataset.hpp"
#include "csrc/distsem.hpp"
#include "csrc/dna_filter.hpp"
#include "csrc/eval.hpp"
#include "csrc/forest.hpp"
#include "csrc/kb_graph.hpp"
#include "csrc/neural.hpp"
#include "csrc/path_search.hpp"
#include "csrc/pipeline.hpp"
