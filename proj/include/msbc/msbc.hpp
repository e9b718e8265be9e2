// SPDX-License-Identifier: Apache-2.0
//
// msbc -- power minimization in the multiple-stream MIMO broadcast channel
// under statistical transmitter-side channel knowledge.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "msbc/channel.hpp"
#include "msbc/inner_solver.hpp"
#include "msbc/linalg.hpp"
#include "msbc/mse_core.hpp"
#include "msbc/outer_solver.hpp"
#include "msbc/random.hpp"
#include "msbc/types.hpp"
