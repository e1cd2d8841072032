#include "syncsim/predictor.hpp"

#include <stdexcept>
#include <string>

namespace syncsim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// round(num / den) to the nearest integer, half away from zero, all in exact
// integer arithmetic. num >= 0, den > 0.
TimeMs div_round(TimeMs num, TimeMs den) { return (2 * num + den) / (2 * den); }

}  // namespace

ObservationBuffer::ObservationBuffer(int workers, int interval_window)
    : interval_window_(interval_window) {
  if (workers < 1) fail("need at least one worker");
  if (interval_window < 1) fail("interval window must be >= 1");
  rings_.resize(static_cast<size_t>(workers));
}

void ObservationBuffer::record(int worker, TimeMs end_time) {
  if (worker < 1 || worker > workers()) fail("worker index out of range");
  auto& ring = rings_[static_cast<size_t>(worker) - 1];
  if (!ring.empty() && end_time <= ring.back())
    fail("observations for worker " + std::to_string(worker) +
         " must be strictly increasing");
  ring.push_back(end_time);
  // interval_window_ intervals need interval_window_ + 1 timestamps.
  if (ring.size() > static_cast<size_t>(interval_window_) + 1)
    ring.erase(ring.begin());
}

bool ObservationBuffer::ready() const {
  for (const auto& ring : rings_)
    if (ring.size() < 2) return false;
  return true;
}

int ObservationBuffer::observation_count(int worker) const {
  return static_cast<int>(ring(worker).size());
}

TimeMs ObservationBuffer::last_time(int worker) const {
  const auto& r = ring(worker);
  if (r.empty()) fail("no observations for worker " + std::to_string(worker));
  return r.back();
}

const std::vector<TimeMs>& ObservationBuffer::ring(int worker) const {
  if (worker < 1 || worker > workers()) fail("worker index out of range");
  return rings_[static_cast<size_t>(worker) - 1];
}

PredictionMatrix predict(const ObservationBuffer& buffer, int horizon,
                         PredictMode mode) {
  if (horizon < 1) fail("horizon must be >= 1");
  std::vector<std::vector<TimestampPoint>> rows(
      static_cast<size_t>(buffer.workers()));
  for (int p = 1; p <= buffer.workers(); ++p) {
    const auto& ring = buffer.ring(p);
    if (ring.size() < 2)
      fail("worker " + std::to_string(p) +
           " has fewer than two observations; cannot predict");
    const size_t last = ring.size() - 1;
    // The mean of the last c intervals telescopes to a single difference, so
    // it stays an exact rational (num / den).
    size_t c = mode == PredictMode::last_interval
                   ? 1
                   : std::min<size_t>(static_cast<size_t>(buffer.interval_window()), last);
    const TimeMs num = ring[last] - ring[last - c];
    const TimeMs den = static_cast<TimeMs>(c);
    auto& row = rows[static_cast<size_t>(p) - 1];
    row.reserve(static_cast<size_t>(horizon));
    for (int i = 1; i <= horizon; ++i)
      row.push_back({p, i, ring[last] + div_round(static_cast<TimeMs>(i) * num, den)});
  }
  return PredictionMatrix(std::move(rows));
}

}  // namespace syncsim
