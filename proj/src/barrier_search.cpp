#include "syncsim/barrier_search.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <stdexcept>
#include <string>

namespace syncsim {

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::microseconds since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0);
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

TimeMs dist(TimeMs t, TimeMs e) { return t > e ? t - e : e - t; }

}  // namespace

SearchResult zipline(const MergedTimeline& omega, int workers) {
  const auto t0 = Clock::now();
  if (workers < 1) fail("zipline: need at least one worker");
  const auto& pts = omega.points;
  if (pts.empty()) fail("zipline: empty timeline");

  std::vector<long> counts(static_cast<size_t>(workers) + 1, 0);
  for (size_t i = 0; i < pts.size(); ++i) {
    const auto& pt = pts[i];
    if (pt.worker < 1 || pt.worker > workers)
      fail("zipline: point of worker " + std::to_string(pt.worker) +
           " outside 1.." + std::to_string(workers));
    if (i > 0 && timeline_less(pt, pts[i - 1]))
      fail("zipline: timeline is not in scan order");
    ++counts[static_cast<size_t>(pt.worker)];
  }
  for (int w = 1; w <= workers; ++w)
    if (counts[static_cast<size_t>(w)] == 0)
      fail("zipline: worker " + std::to_string(w) + " absent from timeline");

  // Sliding set Z, one slot per worker. The deque mirrors insertion order so
  // the earliest member is always at the (lazily cleaned) front; stale
  // entries are skipped when the slot no longer holds them.
  std::vector<TimestampPoint> slot(static_cast<size_t>(workers) + 1);
  std::vector<char> occupied(static_cast<size_t>(workers) + 1, 0);
  std::deque<TimestampPoint> order;
  size_t pos = 0;
  int size = 0;
  TimestampPoint last_added{};

  auto fill = [&]() {
    while (size < workers && pos < pts.size()) {
      const TimestampPoint& pt = pts[pos++];
      const auto w = static_cast<size_t>(pt.worker);
      if (!occupied[w]) {
        occupied[w] = 1;
        ++size;
      }
      slot[w] = pt;
      order.push_back(pt);
      last_added = pt;
    }
    return size == workers;
  };
  auto clean_front = [&]() -> const TimestampPoint& {
    for (;;) {
      const TimestampPoint& f = order.front();
      const auto w = static_cast<size_t>(f.worker);
      if (occupied[w] && slot[w] == f) return f;
      order.pop_front();
    }
  };

  long long examined = 0;
  TimeMs best_d = -1;
  std::vector<TimestampPoint> best_members;

  fill();  // coverage guarantees the first window forms
  for (;;) {
    const TimestampPoint& front = clean_front();
    const TimeMs d = last_added.end_time - front.end_time;
    ++examined;
    if (best_d < 0 || d < best_d) {  // strict: the first minimum wins
      best_d = d;
      best_members.clear();
      for (int w = 1; w <= workers; ++w)
        best_members.push_back(slot[static_cast<size_t>(w)]);
    }
    // Slide: drop the earliest member, then refill until Z is whole again.
    occupied[static_cast<size_t>(order.front().worker)] = 0;
    order.pop_front();
    --size;
    if (!fill()) break;
  }

  SearchResult result;
  result.window = Window::from_members(std::move(best_members));
  result.spread_ms = result.window.spread_ms;
  result.windows_examined = examined;
  result.elapsed = since(t0);
  return result;
}

namespace {

// Shared inner search of gridscan / full_gridscan: for each point e of each
// designated row, pair e with the |t - e|-closest point of every other row
// (equidistant ties to the earlier point). Candidates compare by spread, then
// by anchor.
SearchResult scan_designated(const PredictionMatrix& matrix,
                             const std::vector<int>& designated,
                             Clock::time_point t0) {
  const int n = matrix.workers();
  long long examined = 0;
  TimeMs best_d = -1;
  TimeMs best_anchor = 0;
  std::vector<TimestampPoint> best_members;
  std::vector<TimestampPoint> scratch(static_cast<size_t>(n));

  for (int desig : designated) {
    for (const TimestampPoint& e_pt : matrix.row(desig)) {
      const TimeMs e = e_pt.end_time;
      TimeMs lo = e, hi = e;
      for (int p = 1; p <= n; ++p) {
        if (p == desig) {
          scratch[static_cast<size_t>(p) - 1] = e_pt;
          continue;
        }
        const auto& row = matrix.row(p);
        const TimestampPoint* pick = &row.front();
        TimeMs pick_dist = dist(pick->end_time, e);
        for (size_t i = 1; i < row.size(); ++i) {
          const TimeMs di = dist(row[i].end_time, e);
          if (di < pick_dist) {
            pick = &row[i];
            pick_dist = di;
          }
        }
        scratch[static_cast<size_t>(p) - 1] = *pick;
        lo = std::min(lo, pick->end_time);
        hi = std::max(hi, pick->end_time);
      }
      const TimeMs d = hi - lo;
      ++examined;
      if (best_d < 0 || d < best_d || (d == best_d && hi < best_anchor)) {
        best_d = d;
        best_anchor = hi;
        best_members = scratch;
      }
    }
  }

  SearchResult result;
  result.window = Window::from_members(std::move(best_members));
  result.spread_ms = result.window.spread_ms;
  result.windows_examined = examined;
  result.elapsed = since(t0);
  return result;
}

}  // namespace

SearchResult gridscan(const PredictionMatrix& matrix) {
  const auto t0 = Clock::now();
  int desig = 1;
  for (int p = 2; p <= matrix.workers(); ++p)
    if (matrix.row(p).front().end_time < matrix.row(desig).front().end_time)
      desig = p;
  return scan_designated(matrix, {desig}, t0);
}

SearchResult full_gridscan(const PredictionMatrix& matrix) {
  const auto t0 = Clock::now();
  std::vector<int> rows(static_cast<size_t>(matrix.workers()));
  for (int p = 1; p <= matrix.workers(); ++p) rows[static_cast<size_t>(p) - 1] = p;
  return scan_designated(matrix, rows, t0);
}

SearchResult naive_search(const PredictionMatrix& matrix, long long budget) {
  const auto t0 = Clock::now();
  const int n = matrix.workers();
  const int horizon = matrix.horizon();
  if (budget < 1) fail("naive_search: budget must be >= 1");

  long long combos = 1;
  for (int p = 0; p < n; ++p) {
    combos *= horizon;
    if (combos > budget)
      throw std::runtime_error(
          "naive_search: combination count exceeds budget of " +
          std::to_string(budget));
  }

  std::vector<int> idx(static_cast<size_t>(n), 0);
  TimeMs best_d = -1;
  TimeMs best_anchor = 0;
  std::vector<int> best_idx;
  for (;;) {
    TimeMs lo = matrix.row(1)[static_cast<size_t>(idx[0])].end_time;
    TimeMs hi = lo;
    for (int p = 2; p <= n; ++p) {
      const TimeMs t =
          matrix.row(p)[static_cast<size_t>(idx[static_cast<size_t>(p) - 1])].end_time;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    const TimeMs d = hi - lo;
    if (best_d < 0 || d < best_d || (d == best_d && hi < best_anchor)) {
      best_d = d;
      best_anchor = hi;
      best_idx = idx;
    }
    int p = n - 1;
    while (p >= 0 && idx[static_cast<size_t>(p)] == horizon - 1) {
      idx[static_cast<size_t>(p)] = 0;
      --p;
    }
    if (p < 0) break;
    ++idx[static_cast<size_t>(p)];
  }

  std::vector<TimestampPoint> members;
  members.reserve(static_cast<size_t>(n));
  for (int p = 1; p <= n; ++p)
    members.push_back(matrix.row(p)[static_cast<size_t>(best_idx[static_cast<size_t>(p) - 1])]);

  SearchResult result;
  result.window = Window::from_members(std::move(members));
  result.spread_ms = result.window.spread_ms;
  result.windows_examined = combos;
  result.elapsed = since(t0);
  return result;
}

}  // namespace syncsim
