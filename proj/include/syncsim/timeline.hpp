#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace syncsim {

// All timestamps are integer milliseconds so that equality and tie-breaking
// are exact.
using TimeMs = std::int64_t;

// One completed iteration of one worker, identified by (worker, iter) and
// carrying the time the iteration's push lands at the server.
struct TimestampPoint {
  int worker = 0;   // 1-based
  int iter = 0;     // 1-based
  TimeMs end_time = 0;

  friend bool operator==(const TimestampPoint&, const TimestampPoint&) = default;
};

// Scan order of the merged timeline: time, then worker id, then iteration.
inline bool timeline_less(const TimestampPoint& a, const TimestampPoint& b) {
  if (a.end_time != b.end_time) return a.end_time < b.end_time;
  if (a.worker != b.worker) return a.worker < b.worker;
  return a.iter < b.iter;
}

struct WorkerProfile {
  int worker = 0;        // 1-based
  double compute_ms = 0; // > 0
  double trans_ms = 0;   // >= 0, round-trip transmission per iteration
  double jitter = 0;     // relative per-iteration noise, in [0, 1)

  void validate() const;
};

// n rows of exactly `horizon` strictly increasing points; row p holds only
// points of worker p.
class PredictionMatrix {
 public:
  explicit PredictionMatrix(std::vector<std::vector<TimestampPoint>> rows);

  int workers() const { return static_cast<int>(rows_.size()); }
  int horizon() const { return static_cast<int>(rows_.front().size()); }
  const std::vector<TimestampPoint>& row(int worker) const;  // 1-based
  const std::vector<std::vector<TimestampPoint>>& rows() const { return rows_; }

  friend bool operator==(const PredictionMatrix&, const PredictionMatrix&) = default;

 private:
  std::vector<std::vector<TimestampPoint>> rows_;
};

// All points of a matrix in scan order.
struct MergedTimeline {
  std::vector<TimestampPoint> points;
};

// One candidate barrier: one point per worker. spread is the wait cost of
// barriering at the window; anchor is the barrier time itself.
struct Window {
  std::vector<TimestampPoint> members;  // sorted by worker id, covers 1..n
  TimeMs spread_ms = 0;                 // max end_time - min end_time
  TimeMs anchor_ms = 0;                 // max end_time

  static Window from_members(std::vector<TimestampPoint> members);
};

// Synthetic trace: row p has end times  e_i = sum_{j<=i} round((compute_ms +
// trans_ms) * (1 + d_j))  with d_j drawn zero-mean uniform in
// (-jitter, +jitter), keyed by (seed, worker, iteration). Per-iteration steps
// are clamped to >= 1 ms so rows stay strictly increasing.
PredictionMatrix generate_trace(const std::vector<WorkerProfile>& profiles,
                                int horizon, std::uint64_t seed);

MergedTimeline merge(const PredictionMatrix& matrix);

// CSV trace I/O. Header "worker,iter,end_ms", one point per line. Rows may
// arrive in any order; the reader validates completeness and monotonicity and
// reports malformed input with its line number.
PredictionMatrix read_trace(const std::filesystem::path& path);
void write_trace(const PredictionMatrix& matrix, const std::filesystem::path& path);

}  // namespace syncsim
