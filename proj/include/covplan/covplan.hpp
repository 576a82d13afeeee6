/*
* Copyright (C) 2026 covplan contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#pragma once

// Engine umbrella header. The HTTP service and CLI live in service.hpp and cli.hpp.

#include "covplan/calibration.hpp"
#include "covplan/data_io.hpp"
#include "covplan/date.hpp"
#include "covplan/ensemble.hpp"
#include "covplan/error.hpp"
#include "covplan/json_io.hpp"
#include "covplan/model.hpp"
#include "covplan/pipeline.hpp"
#include "covplan/scenario.hpp"
#include "covplan/swarm.hpp"
#include "covplan/synthetic.hpp"
