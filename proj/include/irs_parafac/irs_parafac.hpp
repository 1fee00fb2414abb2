// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "irs_parafac/errors.hpp"
#include "irs_parafac/estimators.hpp"
#include "irs_parafac/harness.hpp"
#include "irs_parafac/io.hpp"
#include "irs_parafac/rng.hpp"
#include "irs_parafac/system_model.hpp"
#include "irs_parafac/tensor_core.hpp"
#include "irs_parafac/version.hpp"
