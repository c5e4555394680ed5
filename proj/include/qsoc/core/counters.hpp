#pragma once

namespace qsoc {

// Shared counters for the filter recursions (classical and quantum).
struct FilterStats {
  long clipped = 0;     // negative weights zeroed by the explicit scheme
  long rebalances = 0;  // log_scale magnitude adjustments
};

}  // namespace qsoc
