// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "divopt/scenario.hpp"

// Scenario config files: flat key = value text with one [sensor] section per
// sensor. '#' starts a comment. Unknown keys are rejected.
//
//   pl0_db = 55            # pathloss at the reference distance (default 55)
//   pathloss_exp = 2       # pathloss exponent (default 2)
//   d0_m = 1               # reference distance (default 1)
//   sigma2_dbm = -70       # receiver noise variance, required
//   p_tot_dbm = 0          # total power budget, required
//   rho = 0.2              # optional: selects the 2-sensor coupled channel
//   gain_convention = amplitude   # amplitude | power, with rho only
//
//   [sensor]
//   d_m = 2                # exactly one of d_m | gain_db
//   p_d = 0.9
//   p_f = 0.04
//   p_max_dbm = 3

namespace divopt {

struct ConfigError : std::runtime_error {
  int line;
  std::string field;
  ConfigError(int line_, std::string field_, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line_) +
                           (field_.empty() ? "" : " (" + field_ + ")") + ": " + message),
        line(line_),
        field(std::move(field_)) {}
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

}  // namespace divopt
