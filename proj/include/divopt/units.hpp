// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace divopt {

// All powers are carried in linear milliwatts and all channel gains as
// linear power ratios inside the library. dB / dBm appear only at config
// and report boundaries.

inline double mw_from_dbm(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double dbm_from_mw(double mw) { return 10.0 * std::log10(mw); }

inline double linear_from_db(double db) { return std::pow(10.0, db / 10.0); }

inline double db_from_linear(double lin) { return 10.0 * std::log10(lin); }

}  // namespace divopt
