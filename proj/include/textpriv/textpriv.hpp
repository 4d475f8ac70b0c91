// Copyright 2026 The textpriv Authors
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

#include "textpriv/analysis.hpp"
#include "textpriv/embedding.hpp"
#include "textpriv/errors.hpp"
#include "textpriv/knn_index.hpp"
#include "textpriv/mechanism.hpp"
#include "textpriv/noise.hpp"
#include "textpriv/parallel.hpp"
#include "textpriv/pos_lexicon.hpp"
#include "textpriv/random.hpp"
