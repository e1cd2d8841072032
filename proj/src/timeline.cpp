#include "syncsim/timeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "syncsim/rng.hpp"

namespace syncsim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void WorkerProfile::validate() const {
  if (worker < 1) fail("worker id must be >= 1");
  if (!(compute_ms > 0)) fail("compute_ms must be > 0");
  if (trans_ms < 0) fail("trans_ms must be >= 0");
  if (jitter < 0 || jitter >= 1) fail("jitter must be in [0, 1)");
}

PredictionMatrix::PredictionMatrix(std::vector<std::vector<TimestampPoint>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) fail("matrix needs at least one worker row");
  const size_t horizon = rows_.front().size();
  if (horizon == 0) fail("matrix rows must not be empty");
  for (size_t p = 0; p < rows_.size(); ++p) {
    const auto& row = rows_[p];
    const int worker = static_cast<int>(p) + 1;
    if (row.size() != horizon) {
      fail("row " + std::to_string(worker) + " has " + std::to_string(row.size()) +
           " points, expected " + std::to_string(horizon));
    }
    for (size_t i = 0; i < row.size(); ++i) {
      if (row[i].worker != worker)
        fail("row " + std::to_string(worker) + " holds a point of worker " +
             std::to_string(row[i].worker));
      if (row[i].iter != static_cast<int>(i) + 1)
        fail("row " + std::to_string(worker) + " iteration indices must be 1..horizon");
      if (row[i].end_time < 0) fail("end times must be >= 0");
      if (i > 0 && row[i].end_time <= row[i - 1].end_time)
        fail("row " + std::to_string(worker) + " end times must be strictly increasing");
    }
  }
}

const std::vector<TimestampPoint>& PredictionMatrix::row(int worker) const {
  if (worker < 1 || worker > workers()) fail("worker index out of range");
  return rows_[static_cast<size_t>(worker) - 1];
}

Window Window::from_members(std::vector<TimestampPoint> members) {
  if (members.empty()) fail("window needs at least one member");
  std::sort(members.begin(), members.end(),
            [](const TimestampPoint& a, const TimestampPoint& b) {
              return a.worker < b.worker;
            });
  const int n = static_cast<int>(members.size());
  TimeMs lo = members.front().end_time;
  TimeMs hi = lo;
  for (int p = 0; p < n; ++p) {
    if (members[static_cast<size_t>(p)].worker != p + 1)
      fail("window must hold exactly one point per worker 1..n");
    lo = std::min(lo, members[static_cast<size_t>(p)].end_time);
    hi = std::max(hi, members[static_cast<size_t>(p)].end_time);
  }
  Window w;
  w.members = std::move(members);
  w.spread_ms = hi - lo;
  w.anchor_ms = hi;
  return w;
}

PredictionMatrix generate_trace(const std::vector<WorkerProfile>& profiles,
                                int horizon, std::uint64_t seed) {
  if (profiles.empty()) fail("need at least one worker profile");
  if (horizon < 1) fail("horizon must be >= 1");
  for (size_t p = 0; p < profiles.size(); ++p) {
    profiles[p].validate();
    if (profiles[p].worker != static_cast<int>(p) + 1)
      fail("profiles must be ordered by contiguous worker ids starting at 1");
  }
  std::vector<std::vector<TimestampPoint>> rows(profiles.size());
  for (size_t p = 0; p < profiles.size(); ++p) {
    const auto& prof = profiles[p];
    const double base = prof.compute_ms + prof.trans_ms;
    TimeMs acc = 0;
    rows[p].reserve(static_cast<size_t>(horizon));
    for (int i = 1; i <= horizon; ++i) {
      const double d = rng::symmetric(
          rng::key(seed, static_cast<std::uint64_t>(prof.worker),
                   static_cast<std::uint64_t>(i)),
          prof.jitter);
      const TimeMs step = std::max<TimeMs>(1, std::llround(base * (1.0 + d)));
      acc += step;
      rows[p].push_back({prof.worker, i, acc});
    }
  }
  return PredictionMatrix(std::move(rows));
}

MergedTimeline merge(const PredictionMatrix& matrix) {
  MergedTimeline out;
  out.points.reserve(static_cast<size_t>(matrix.workers()) *
                     static_cast<size_t>(matrix.horizon()));
  for (const auto& row : matrix.rows())
    out.points.insert(out.points.end(), row.begin(), row.end());
  std::sort(out.points.begin(), out.points.end(), timeline_less);
  return out;
}

namespace {

constexpr const char* kTraceHeader = "worker,iter,end_ms";

[[noreturn]] void trace_fail(const std::filesystem::path& path, size_t line,
                             const std::string& msg) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + msg);
}

long long parse_field(const std::filesystem::path& path, size_t line_no,
                      std::string_view field, const char* name) {
  long long value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    trace_fail(path, line_no, std::string("malformed ") + name + " '" +
                                  std::string(field) + "'");
  return value;
}

}  // namespace

PredictionMatrix read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());

  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty trace file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    trace_fail(path, line_no, std::string("expected header '") + kTraceHeader + "'");

  // worker -> iter -> end_time, filled in file order, validated afterwards.
  std::vector<std::vector<std::pair<int, TimeMs>>> per_worker;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view view(line);
    const size_t c1 = view.find(',');
    const size_t c2 = c1 == std::string_view::npos ? std::string_view::npos
                                                   : view.find(',', c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
        view.find(',', c2 + 1) != std::string_view::npos)
      trace_fail(path, line_no, "expected 3 comma-separated fields");
    const long long worker = parse_field(path, line_no, view.substr(0, c1), "worker");
    const long long iter =
        parse_field(path, line_no, view.substr(c1 + 1, c2 - c1 - 1), "iter");
    const long long end_ms = parse_field(path, line_no, view.substr(c2 + 1), "end_ms");
    if (worker < 1 || worker > 1'000'000) trace_fail(path, line_no, "worker id out of range");
    if (iter < 1) trace_fail(path, line_no, "iteration index out of range");
    if (end_ms < 0) trace_fail(path, line_no, "end_ms must be >= 0");
    if (per_worker.size() < static_cast<size_t>(worker))
      per_worker.resize(static_cast<size_t>(worker));
    auto& row = per_worker[static_cast<size_t>(worker) - 1];
    for (const auto& [it, _] : row)
      if (it == iter)
        trace_fail(path, line_no, "duplicate point (" + std::to_string(worker) + ", " +
                                      std::to_string(iter) + ")");
    row.emplace_back(static_cast<int>(iter), static_cast<TimeMs>(end_ms));
  }
  if (per_worker.empty()) throw std::runtime_error(path.string() + ": trace has no points");

  std::vector<std::vector<TimestampPoint>> rows(per_worker.size());
  for (size_t p = 0; p < per_worker.size(); ++p) {
    auto& src = per_worker[p];
    if (src.empty())
      throw std::runtime_error(path.string() + ": no points for worker " +
                               std::to_string(p + 1));
    std::sort(src.begin(), src.end());
    for (size_t i = 0; i < src.size(); ++i) {
      if (src[i].first != static_cast<int>(i) + 1)
        throw std::runtime_error(path.string() + ": worker " + std::to_string(p + 1) +
                                 " is missing iteration " + std::to_string(i + 1));
      if (i > 0 && src[i].second <= src[i - 1].second)
        throw std::runtime_error(path.string() + ": worker " + std::to_string(p + 1) +
                                 " end times are not strictly increasing at iteration " +
                                 std::to_string(i + 1));
      rows[p].push_back({static_cast<int>(p) + 1, static_cast<int>(i) + 1, src[i].second});
    }
  }
  return PredictionMatrix(std::move(rows));  // validates row lengths match
}

void write_trace(const PredictionMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical reruns
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kTraceHeader << '\n';
  for (const auto& row : matrix.rows())
    for (const auto& pt : row)
      out << pt.worker << ',' << pt.iter << ',' << pt.end_time << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace syncsim
