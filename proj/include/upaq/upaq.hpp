//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "upaq/activation_io.hpp"
#include "upaq/bitpack.hpp"
#include "upaq/blocks.hpp"
#include "upaq/compressed.hpp"
#include "upaq/compressor.hpp"
#include "upaq/cost.hpp"
#include "upaq/error.hpp"
#include "upaq/evaluate.hpp"
#include "upaq/fixtures.hpp"
#include "upaq/grouping.hpp"
#include "upaq/inference.hpp"
#include "upaq/model.hpp"
#include "upaq/patterns.hpp"
#include "upaq/quantizer.hpp"
#include "upaq/report.hpp"
#include "upaq/rng.hpp"
#include "upaq/serialize.hpp"
