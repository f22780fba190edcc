/*
 * Copyright 2026 The rclqr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "rclqr/errors.hpp"
#include "rclqr/numlin.hpp"
#include "rclqr/noise.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/synthesis.hpp"
#include "rclqr/evaluation.hpp"
#include "rclqr/dual.hpp"
#include "rclqr/sim.hpp"
#include "rclqr/presets.hpp"
#include "rclqr/io.hpp"
#include "rclqr/config.hpp"
#include "rclqr/commands.hpp"
