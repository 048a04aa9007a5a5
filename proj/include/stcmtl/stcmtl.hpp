// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0

#ifndef STCMTL_STCMTL_HPP
#define STCMTL_STCMTL_HPP

#include "stcmtl/bench.hpp"
#include "stcmtl/core.hpp"
#include "stcmtl/io.hpp"
#include "stcmtl/robust.hpp"
#include "stcmtl/solver.hpp"
#include "stcmtl/soup.hpp"
#include "stcmtl/spectral.hpp"
#include "stcmtl/trainer.hpp"
#include "stcmtl/types.hpp"

#endif  // STCMTL_STCMTL_HPP
