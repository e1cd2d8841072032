#include "syncsim/predictor.hpp"

#include <vector>

#include "doctest.h"
#include "syncsim/rng.hpp"

using namespace syncsim;

namespace {

ObservationBuffer buffer_from(const std::vector<std::vector<TimeMs>>& obs,
                              int window = 3) {
  ObservationBuffer buf(static_cast<int>(obs.size()), window);
  for (size_t p = 0; p < obs.size(); ++p)
    for (TimeMs t : obs[p]) buf.record(static_cast<int>(p) + 1, t);
  return buf;
}

std::vector<TimeMs> row_times(const PredictionMatrix& m, int worker) {
  std::vector<TimeMs> out;
  for (const auto& pt : m.row(worker)) out.push_back(pt.end_time);
  return out;
}

}  // namespace

TEST_CASE("constant intervals extrapolate exactly") {
  const auto buf = buffer_from({{700, 800, 900, 1000}});
  const auto m = predict(buf, 3);
  CHECK(row_times(m, 1) == std::vector<TimeMs>{1100, 1200, 1300});
}

TEST_CASE("mean of mixed intervals") {
  // intervals 90, 100, 110 -> mean 100
  const auto buf = buffer_from({{700, 790, 890, 1000}});
  const auto m = predict(buf, 2);
  CHECK(row_times(m, 1) == std::vector<TimeMs>{1100, 1200});
}

TEST_CASE("window limits how many intervals count") {
  // intervals 10, 10, 50, 50, 50; window 3 -> mean 50
  const auto buf = buffer_from({{0, 10, 20, 70, 120, 170}}, 3);
  const auto m = predict(buf, 2);
  CHECK(row_times(m, 1) == std::vector<TimeMs>{220, 270});

  // window 1 behaves like last_interval
  const auto buf1 = buffer_from({{0, 30, 70}}, 1);
  CHECK(row_times(predict(buf1, 2), 1) == std::vector<TimeMs>{110, 150});
}

TEST_CASE("last_interval mode ignores older intervals") {
  const auto buf = buffer_from({{0, 100, 130}});
  CHECK(row_times(predict(buf, 3, PredictMode::last_interval), 1) ==
        std::vector<TimeMs>{160, 190, 220});
  // mean mode on the same data: mean interval 65
  CHECK(row_times(predict(buf, 2, PredictMode::mean_interval), 1) ==
        std::vector<TimeMs>{195, 260});
}

TEST_CASE("fractional means round to nearest without drifting") {
  // intervals 100, 101 -> mean 100.5; predictions round half up per step
  const auto buf = buffer_from({{0, 100, 201}});
  const auto m = predict(buf, 4);
  CHECK(row_times(m, 1) == std::vector<TimeMs>{302, 402, 503, 603});
  // i * 100.5 = 100.5, 201, 301.5, 402: rounded 101, 201, 302, 402 from 201
}

TEST_CASE("predictions stay strictly increasing") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ObservationBuffer buf(2, 3);
    TimeMs t1 = 0, t2 = 0;
    for (int i = 0; i < 5; ++i) {
      t1 += 1 + static_cast<TimeMs>(rng::key(seed, 1, i) % 3);  // tiny intervals
      t2 += 1 + static_cast<TimeMs>(rng::key(seed, 2, i) % 200);
      buf.record(1, t1);
      buf.record(2, t2);
    }
    const auto m = predict(buf, 6);
    for (int p = 1; p <= 2; ++p) {
      const auto& row = m.row(p);
      CHECK(row.front().end_time > buf.last_time(p));
      for (size_t i = 1; i < row.size(); ++i)
        CHECK(row[i].end_time > row[i - 1].end_time);
    }
  }
}

TEST_CASE("prediction is shift equivariant") {
  const std::vector<TimeMs> base{40, 151, 263, 391};
  for (TimeMs shift : {1, 37, 5000}) {
    std::vector<TimeMs> shifted;
    for (TimeMs t : base) shifted.push_back(t + shift);
    const auto a = predict(buffer_from({base}), 5);
    const auto b = predict(buffer_from({shifted}), 5);
    for (size_t i = 0; i < 5; ++i)
      CHECK(b.row(1)[i].end_time == a.row(1)[i].end_time + shift);
  }
}

TEST_CASE("prediction scales with interval length on exact means") {
  // constant intervals: scaling the cadence scales the forecast
  for (TimeMs scale : {2, 7}) {
    const auto a = predict(buffer_from({{100, 130, 160}}), 4);
    const auto b = predict(buffer_from({{100 * scale, 130 * scale, 160 * scale}}), 4);
    for (size_t i = 0; i < 4; ++i)
      CHECK(b.row(1)[i].end_time == a.row(1)[i].end_time * scale);
  }
}

TEST_CASE("observation buffer bookkeeping") {
  ObservationBuffer buf(2, 3);
  CHECK(buf.workers() == 2);
  CHECK_FALSE(buf.ready());
  buf.record(1, 10);
  buf.record(1, 20);
  CHECK_FALSE(buf.ready());  // worker 2 still empty
  buf.record(2, 5);
  CHECK_FALSE(buf.ready());
  buf.record(2, 6);
  CHECK(buf.ready());
  CHECK(buf.observation_count(1) == 2);
  CHECK(buf.last_time(2) == 6);

  // ring keeps interval_window + 1 newest stamps
  for (TimeMs t = 30; t <= 100; t += 10) buf.record(1, t);
  CHECK(buf.ring(1) == std::vector<TimeMs>{70, 80, 90, 100});
  CHECK(buf.observation_count(1) == 4);
  CHECK(buf.last_time(1) == 100);
}

TEST_CASE("observation buffer rejects bad input") {
  CHECK_THROWS_AS(ObservationBuffer(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(ObservationBuffer(2, 0), std::invalid_argument);
  ObservationBuffer buf(1, 3);
  buf.record(1, 10);
  CHECK_THROWS_AS(buf.record(1, 10), std::invalid_argument);  // not increasing
  CHECK_THROWS_AS(buf.record(1, 9), std::invalid_argument);
  CHECK_THROWS_AS(buf.record(0, 50), std::invalid_argument);
  CHECK_THROWS_AS(buf.record(2, 50), std::invalid_argument);
}

TEST_CASE("predict preconditions") {
  ObservationBuffer buf(2, 3);
  buf.record(1, 10);
  buf.record(1, 20);
  buf.record(2, 15);  // only one observation
  CHECK_THROWS_WITH_AS(predict(buf, 3), doctest::Contains("worker 2"),
                       std::invalid_argument);
  buf.record(2, 30);
  CHECK_NOTHROW(predict(buf, 3));
  CHECK_THROWS_AS(predict(buf, 0), std::invalid_argument);
}
