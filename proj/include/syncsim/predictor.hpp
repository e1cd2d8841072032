#pragma once

#include <cstdint>
#include <vector>

#include "syncsim/timeline.hpp"

namespace syncsim {

enum class PredictMode {
  mean_interval,  // arithmetic mean of the recent intervals
  last_interval,  // most recent interval only
};

// Per-worker ring of recently observed push times. Keeps just enough history
// to form `interval_window` intervals per worker.
class ObservationBuffer {
 public:
  explicit ObservationBuffer(int workers, int interval_window = 3);

  // Records the end time of `worker`'s next iteration. Times must be strictly
  // increasing per worker.
  void record(int worker, TimeMs end_time);

  int workers() const { return static_cast<int>(rings_.size()); }
  int interval_window() const { return interval_window_; }
  // True once every worker has at least two observations (one interval).
  bool ready() const;
  int observation_count(int worker) const;
  TimeMs last_time(int worker) const;

  const std::vector<TimeMs>& ring(int worker) const;  // 1-based

 private:
  int interval_window_;
  std::vector<std::vector<TimeMs>> rings_;
};

// Extrapolates each worker's next `horizon` push times from its recent
// cadence: e_i = t_last + i * ibar, where ibar is the mean of the last
// min(interval_window, available) intervals (or the last interval alone).
// Fractional means are resolved with exact integer rounding to the nearest
// millisecond, so results are deterministic and rows stay strictly
// increasing. Requires two observations per worker.
PredictionMatrix predict(const ObservationBuffer& buffer, int horizon,
                         PredictMode mode = PredictMode::mean_interval);

}  // namespace syncsim
