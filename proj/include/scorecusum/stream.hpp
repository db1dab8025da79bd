#pragma once

#include "scorecusum/estimation.hpp"

#include <vector>

namespace scusum {

/// One standard-of-care observation routed to the monitor. `obs.t` is the
/// SOC index i (1-based); `t_abs` is the patient's arrival time.
struct SocObservation {
  long t_abs = 0;
  Observation obs;
  double prediction = 0.5;
};

using SocStream = std::vector<SocObservation>;

}  // namespace scusum
