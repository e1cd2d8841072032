#pragma once

#include <chrono>
#include <cstdint>

#include "syncsim/timeline.hpp"

namespace syncsim {

struct SearchResult {
  Window window;
  TimeMs spread_ms = 0;
  long long windows_examined = 0;  // >= 1
  std::chrono::microseconds elapsed{0};
};

// Sliding one-pass scan over the merged timeline. Keeps a set Z with at most
// one point per worker; each scanned point replaces its worker's previous
// point, and the spread is evaluated whenever Z becomes full (after each
// evaluation the earliest member is dropped and the scan refills). Finds the
// globally minimal spread; on ties the window evaluated first wins, which is
// also the one with the earliest anchor. Examines at most n*R - n + 1
// windows.
SearchResult zipline(const MergedTimeline& omega, int workers);

// Heuristic scan: designates the row with the smallest first timestamp (ties
// to the smaller worker id) and, for each of its R points e, pairs e with the
// closest point of every other row (|t - e|, equidistant ties to the earlier
// point). Best of the R candidates; equal spreads resolve to the earlier
// anchor. May miss the global optimum.
SearchResult gridscan(const PredictionMatrix& matrix);

// gridscan's inner search repeated with every row designated in turn; the
// candidate set is a superset of gridscan's, so its spread is never worse.
// Equal spreads resolve to the earliest anchor.
SearchResult full_gridscan(const PredictionMatrix& matrix);

constexpr long long kNaiveDefaultBudget = 10'000'000;

// Exhaustive reference: enumerates all R^n one-point-per-worker combinations
// and returns the minimal spread, ties to the earliest anchor (the same
// choice zipline's first-minimum rule makes). Refuses instances whose
// combination count exceeds `budget`.
SearchResult naive_search(const PredictionMatrix& matrix,
                          long long budget = kNaiveDefaultBudget);

}  // namespace syncsim
