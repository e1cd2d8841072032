#include "syncsim/barrier_search.hpp"

#include <vector>

#include "doctest.h"
#include "syncsim/rng.hpp"
#include "syncsim/timeline.hpp"

using namespace syncsim;

namespace {

PredictionMatrix from_times(const std::vector<std::vector<TimeMs>>& times) {
  std::vector<std::vector<TimestampPoint>> rows;
  for (size_t p = 0; p < times.size(); ++p) {
    std::vector<TimestampPoint> row;
    for (size_t i = 0; i < times[p].size(); ++i)
      row.push_back({static_cast<int>(p) + 1, static_cast<int>(i) + 1, times[p][i]});
    rows.push_back(std::move(row));
  }
  return PredictionMatrix(std::move(rows));
}

// Small random instance. Even ids build tie-heavy integer timelines (steps in
// [1,3] collide across workers constantly); odd ids build spread-out ones.
PredictionMatrix random_instance(std::uint64_t id, int* n_out = nullptr) {
  const int n = 1 + static_cast<int>(rng::key(id, 1, 0) % 5);
  const int horizon = 1 + static_cast<int>(rng::key(id, 2, 0) % 6);
  const bool tie_heavy = id % 2 == 0;
  std::vector<std::vector<TimeMs>> times(static_cast<size_t>(n));
  for (int p = 1; p <= n; ++p) {
    TimeMs t = tie_heavy ? 0 : static_cast<TimeMs>(rng::key(id, 3, p) % 40);
    for (int i = 1; i <= horizon; ++i) {
      const std::uint64_t h = rng::key(id, static_cast<std::uint64_t>(p),
                                       static_cast<std::uint64_t>(i), 4);
      t += tie_heavy ? 1 + static_cast<TimeMs>(h % 3)
                     : 1 + static_cast<TimeMs>(h % 97);
      times[static_cast<size_t>(p) - 1].push_back(t);
    }
  }
  if (n_out) *n_out = n;
  return from_times(times);
}

const std::vector<std::vector<TimeMs>> kAbc{{10, 20, 30}, {12, 24, 36}, {15, 28, 41}};
const std::vector<std::vector<TimeMs>> kGap{{0, 20}, {10, 29}, {11, 30}};

}  // namespace

TEST_CASE("zipline on the three-worker example") {
  const auto m = from_times(kAbc);
  const SearchResult r = zipline(merge(m), 3);
  CHECK(r.spread_ms == 5);
  CHECK(r.window.anchor_ms == 15);
  CHECK(r.windows_examined == 7);  // n*R - n + 1 positions
  REQUIRE(r.window.members.size() == 3);
  CHECK(r.window.members[0] == TimestampPoint{1, 1, 10});
  CHECK(r.window.members[1] == TimestampPoint{2, 1, 12});
  CHECK(r.window.members[2] == TimestampPoint{3, 1, 15});
  CHECK(r.elapsed.count() >= 0);
}

TEST_CASE("gap trace separates the heuristics from the exact scan") {
  const auto m = from_times(kGap);

  const SearchResult z = zipline(merge(m), 3);
  CHECK(z.spread_ms == 10);
  CHECK(z.window.anchor_ms == 20);
  CHECK(z.window.members[0] == TimestampPoint{1, 2, 20});
  CHECK(z.window.members[1] == TimestampPoint{2, 1, 10});
  CHECK(z.window.members[2] == TimestampPoint{3, 1, 11});

  const SearchResult g = gridscan(m);
  CHECK(g.spread_ms == 11);
  CHECK(g.window.anchor_ms == 11);  // {A0, B10, C11}

  const SearchResult f = full_gridscan(m);
  CHECK(f.spread_ms == 10);
  CHECK(f.window.anchor_ms == 20);

  const SearchResult o = naive_search(m);
  CHECK(o.spread_ms == 10);
  CHECK(o.window.anchor_ms == 20);
}

TEST_CASE("gridscan and full_gridscan on the three-worker example") {
  const auto m = from_times(kAbc);
  const SearchResult g = gridscan(m);
  CHECK(g.spread_ms == 5);
  CHECK(g.window.anchor_ms == 15);
  CHECK(g.windows_examined == 3);  // one candidate per designated point

  const SearchResult f = full_gridscan(m);
  CHECK(f.spread_ms == 5);
  CHECK(f.window.anchor_ms == 15);
  CHECK(f.windows_examined == 9);

  const SearchResult o = naive_search(m);
  CHECK(o.spread_ms == 5);
  CHECK(o.window.anchor_ms == 15);
  CHECK(o.windows_examined == 27);
}

TEST_CASE("single worker degenerates to the first point") {
  const auto m = from_times({{7, 19, 23}});
  for (const SearchResult& r :
       {zipline(merge(m), 1), gridscan(m), full_gridscan(m), naive_search(m)}) {
    CHECK(r.spread_ms == 0);
    CHECK(r.window.anchor_ms == 7);
    REQUIRE(r.window.members.size() == 1);
    CHECK(r.window.members[0].iter == 1);
  }
}

TEST_CASE("all-equal timestamps collapse to zero spread") {
  const auto m = from_times({{5, 6}, {5, 6}, {5, 6}});
  const SearchResult z = zipline(merge(m), 3);
  CHECK(z.spread_ms == 0);
  CHECK(z.window.anchor_ms == 5);  // first full window wins the tie
  const SearchResult o = naive_search(m);
  CHECK(o.spread_ms == 0);
  CHECK(o.window.anchor_ms == 5);
}

TEST_CASE("zipline equals the exhaustive oracle") {
  int checked = 0;
  for (std::uint64_t id = 0; id < 300; ++id) {
    int n = 0;
    const PredictionMatrix m = random_instance(id, &n);
    const SearchResult z = zipline(merge(m), n);
    const SearchResult o = naive_search(m);
    REQUIRE_MESSAGE(z.spread_ms == o.spread_ms, "instance ", id);
    REQUIRE_MESSAGE(z.window.anchor_ms == o.window.anchor_ms, "instance ", id);
    ++checked;
  }
  CHECK(checked == 300);
}

TEST_CASE("heuristic spreads are ordered") {
  for (std::uint64_t id = 0; id < 300; ++id) {
    int n = 0;
    const PredictionMatrix m = random_instance(id, &n);
    const TimeMs z = zipline(merge(m), n).spread_ms;
    const TimeMs f = full_gridscan(m).spread_ms;
    const TimeMs g = gridscan(m).spread_ms;
    REQUIRE_MESSAGE(z <= f, "instance ", id);
    REQUIRE_MESSAGE(f <= g, "instance ", id);
  }
}

TEST_CASE("zipline window count stays within the scan bound") {
  for (std::uint64_t id = 0; id < 200; ++id) {
    int n = 0;
    const PredictionMatrix m = random_instance(id, &n);
    const SearchResult z = zipline(merge(m), n);
    const long long bound =
        static_cast<long long>(n) * m.horizon() - n + 1;
    CHECK(z.windows_examined >= 1);
    CHECK(z.windows_examined <= bound);
  }
}

TEST_CASE("searches are deterministic") {
  const PredictionMatrix m = random_instance(77);
  const MergedTimeline t = merge(m);
  const int n = m.workers();
  const SearchResult a = zipline(t, n);
  const SearchResult b = zipline(t, n);
  CHECK(a.spread_ms == b.spread_ms);
  CHECK(a.window.members == b.window.members);
  CHECK(a.windows_examined == b.windows_examined);
  CHECK(gridscan(m).window.members == gridscan(m).window.members);
  CHECK(full_gridscan(m).window.members == full_gridscan(m).window.members);
}

TEST_CASE("gridscan designates the row with the earliest start") {
  // worker 2 starts first, so its points anchor the scan
  const auto m = from_times({{50, 100}, {10, 60}});
  const SearchResult g = gridscan(m);
  CHECK(g.windows_examined == 2);
  CHECK(g.spread_ms == 10);  // {50, 60} via designated point 60

  // tie on the first timestamp goes to the smaller worker id
  const auto tie = from_times({{10, 21}, {10, 23}});
  CHECK(gridscan(tie).spread_ms == 0);
}

TEST_CASE("naive oracle refuses oversized instances") {
  // 15^6 combinations exceed the default budget
  std::vector<std::vector<TimeMs>> times(6);
  for (int p = 0; p < 6; ++p)
    for (int i = 1; i <= 15; ++i)
      times[static_cast<size_t>(p)].push_back(i * 10 + p);
  const auto m = from_times(times);
  CHECK_THROWS_WITH_AS(naive_search(m), doctest::Contains("budget"),
                       std::runtime_error);

  // custom budget trips earlier
  const auto small = from_times({{1, 2, 3, 4}, {1, 2, 3, 4}});
  CHECK_THROWS_AS(naive_search(small, 10), std::runtime_error);
  CHECK_NOTHROW(naive_search(small, 16));
  CHECK_THROWS_AS(naive_search(small, 0), std::invalid_argument);
}

TEST_CASE("zipline validates its input") {
  CHECK_THROWS_AS(zipline(MergedTimeline{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(zipline(merge(from_times({{1, 2}})), 0), std::invalid_argument);

  // point of a worker outside 1..n
  MergedTimeline foreign;
  foreign.points = {{1, 1, 5}, {3, 1, 6}};
  CHECK_THROWS_AS(zipline(foreign, 2), std::invalid_argument);

  // not in scan order
  MergedTimeline unsorted;
  unsorted.points = {{1, 1, 9}, {2, 1, 3}};
  CHECK_THROWS_AS(zipline(unsorted, 2), std::invalid_argument);

  // a worker never appears
  MergedTimeline missing;
  missing.points = {{1, 1, 3}, {1, 2, 9}};
  CHECK_THROWS_AS(zipline(missing, 2), std::invalid_argument);
}
