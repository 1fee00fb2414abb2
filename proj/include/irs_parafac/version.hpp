// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace irs_parafac {

inline constexpr const char* library_name = "irs_parafac";
inline constexpr const char* library_version = "0.1.0";

} // namespace irs_parafac
