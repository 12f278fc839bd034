// Copyright 2026 The qtucker Authors
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

#include "qtucker/corrgraph.hpp"
#include "qtucker/engine.hpp"
#include "qtucker/error.hpp"
#include "qtucker/io.hpp"
#include "qtucker/statevec.hpp"
#include "qtucker/synth.hpp"
#include "qtucker/tucker.hpp"
#include "qtucker/verify.hpp"
