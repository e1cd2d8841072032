#include "syncsim/sync_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "syncsim/barrier_search.hpp"
#include "syncsim/rng.hpp"

namespace syncsim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

SyncModel SyncModel::bsp(int k) {
  SyncModel m;
  m.kind = SyncKind::bsp;
  m.k = k;
  return m;
}

SyncModel SyncModel::asp() {
  SyncModel m;
  m.kind = SyncKind::asp;
  return m;
}

SyncModel SyncModel::ssp(int s) {
  SyncModel m;
  m.kind = SyncKind::ssp;
  m.staleness_bound = s;
  return m;
}

SyncModel SyncModel::elastic(int lookahead, int predictor_window) {
  SyncModel m;
  m.kind = SyncKind::elastic;
  m.lookahead = lookahead;
  m.predictor_window = predictor_window;
  return m;
}

void SyncModel::validate() const {
  switch (kind) {
    case SyncKind::bsp:
      if (k < 1) fail("bsp: k must be >= 1");
      break;
    case SyncKind::asp:
      break;
    case SyncKind::ssp:
      if (staleness_bound < 1) fail("ssp: staleness bound must be >= 1");
      break;
    case SyncKind::elastic:
      if (lookahead < 2) fail("elastic: lookahead must be >= 2");
      if (predictor_window < 1) fail("elastic: predictor window must be >= 1");
      break;
  }
}

std::string SyncModel::name() const {
  switch (kind) {
    case SyncKind::bsp: return "bsp";
    case SyncKind::asp: return "asp";
    case SyncKind::ssp: return "ssp";
    case SyncKind::elastic: return "elastic";
  }
  return "?";
}

SyncModel parse_model(const std::string& name) {
  if (name == "bsp") return SyncModel::bsp();
  if (name == "asp") return SyncModel::asp();
  if (name == "ssp") return SyncModel::ssp();
  if (name == "elastic") return SyncModel::elastic();
  fail("unknown model '" + name + "' (expected bsp, asp, ssp, or elastic)");
}

BarrierPlan plan_superstep(const ObservationBuffer& buffer, int horizon,
                           PredictMode mode) {
  const PredictionMatrix matrix = predict(buffer, horizon, mode);
  const SearchResult best = zipline(merge(matrix), buffer.workers());
  BarrierPlan plan;
  plan.target_iter.assign(static_cast<size_t>(buffer.workers()), 0);
  for (const TimestampPoint& pt : best.window.members)
    plan.target_iter[static_cast<size_t>(pt.worker) - 1] = pt.iter;
  plan.barrier_estimate_ms = best.window.anchor_ms;
  plan.planned_wait_ms = best.spread_ms;
  return plan;
}

void SimConfig::validate() const {
  if (profiles.empty()) fail("need at least one worker profile");
  for (size_t p = 0; p < profiles.size(); ++p) {
    profiles[p].validate();
    if (profiles[p].worker != static_cast<int>(p) + 1)
      fail("profiles must be ordered by contiguous worker ids starting at 1");
  }
  model.validate();
  if (duration_ms < 0) fail("duration_ms must be >= 0");
  if (server_update_ms < 0) fail("server_update_ms must be >= 0");
  if (iteration_limit < 0) fail("iteration_limit must be >= 0");
  if (duration_ms == 0 && iteration_limit == 0)
    fail("need a stop condition: duration_ms or iteration_limit");
}

TimeMs SimReport::total_wait_ms() const {
  TimeMs total = 0;
  for (const auto& w : workers) total += w.wait_ms;
  return total;
}

long SimReport::total_iterations() const {
  long total = 0;
  for (const auto& w : workers) total += w.iterations;
  return total;
}

namespace {

struct EventAfter {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    if (a.worker != b.worker) return a.worker > b.worker;
    return a.seq > b.seq;
  }
};

enum class Seg { compute, queue, wait, trans_in, gate, idle };

struct WorkerState {
  // static
  double compute_ms = 0;
  double jitter = 0;
  TimeMs half_out = 0;
  TimeMs half_in = 0;
  // progress
  long completed = 0;
  bool gate_blocked = false;
  bool barrier_blocked = false;
  // in-flight bookkeeping
  TimeMs scheduled_compute = 0;
  TimeMs applied_time = 0;
  // per-round barrier bookkeeping
  bool member = false;
  long target_abs = 0;
  long superstep_base = 0;
  TimeMs predicted_end = 0;  // predicted time of the horizon's last iteration
  // accounting
  Seg seg = Seg::trans_in;
  TimeMs seg_start = 0;
  WorkerStats stats;
};

struct PendingPush {
  int worker = 0;
  long iter = 0;
  TimeMs arrival = 0;
};

class Simulator {
 public:
  Simulator(const SimConfig& config, SimClient* client)
      : cfg_(config),
        kind_(config.model.kind),
        n_(static_cast<int>(config.profiles.size())),
        su_(config.server_update_ms),
        limit_(config.iteration_limit),
        client_(client ? client : &noop_),
        obs_(static_cast<int>(config.profiles.size()),
             config.model.predictor_window) {
    workers_.resize(static_cast<size_t>(n_) + 1);
    for (int w = 1; w <= n_; ++w) {
      const auto& prof = cfg_.profiles[static_cast<size_t>(w) - 1];
      auto& ws = workers_[static_cast<size_t>(w)];
      ws.compute_ms = prof.compute_ms;
      ws.jitter = prof.jitter;
      const TimeMs tr = std::llround(prof.trans_ms);
      ws.half_out = tr / 2;
      ws.half_in = tr - ws.half_out;
    }
  }

  SimReport run() {
    // Every worker starts by receiving the initial weights; the pull leg of
    // the cycle is charged up front so iteration cadence is compute + trans
    // from the very first iteration.
    for (int w = 1; w <= n_; ++w) {
      client_->on_pull(w, 0);
      schedule(workers_[static_cast<size_t>(w)].half_in, SimEventKind::pull_grant, w);
    }
    if (kind_ == SyncKind::bsp) {
      setup_bsp_round();
    } else if (kind_ == SyncKind::elastic) {
      setup_warmup_round();
    }

    TimeMs last_event = 0;
    while (!events_.empty()) {
      const SimEvent ev = events_.top();
      if (cfg_.duration_ms > 0 && ev.time > cfg_.duration_ms) break;
      events_.pop();
      last_event = ev.time;
      switch (ev.kind) {
        case SimEventKind::push_arrival: on_push_arrival(ev.worker, ev.time); break;
        case SimEventKind::server_update_complete: on_server_apply(ev.time); break;
        case SimEventKind::barrier_complete: on_barrier_complete(ev.time); break;
        case SimEventKind::pull_grant: on_pull_grant(ev.worker, ev.time); break;
      }
    }
    const TimeMs end = events_.empty() ? last_event : cfg_.duration_ms;
    flush_segments(end);
    return assemble(end);
  }

 private:
  void schedule(TimeMs t, SimEventKind kind, int worker) {
    events_.push({t, kind, worker, seq_++});
  }

  bool worker_done(const WorkerState& ws) const {
    return limit_ > 0 && ws.completed >= limit_;
  }

  TimeMs compute_duration(int worker, long iter) const {
    const auto& ws = workers_[static_cast<size_t>(worker)];
    const double d = rng::symmetric(
        rng::key(cfg_.seed, static_cast<std::uint64_t>(worker),
                 static_cast<std::uint64_t>(iter), /*salt=*/1),
        ws.jitter);
    return std::max<TimeMs>(1, std::llround(ws.compute_ms * (1.0 + d)));
  }

  void close_segment(WorkerState& ws, TimeMs t, Seg next) {
    const TimeMs elapsed = t - ws.seg_start;
    switch (ws.seg) {
      case Seg::compute: ws.stats.compute_ms += elapsed; break;
      case Seg::queue: ws.stats.queue_ms += elapsed; break;
      case Seg::wait:
      case Seg::gate: ws.stats.wait_ms += elapsed; break;
      case Seg::trans_in: ws.stats.trans_ms += elapsed; break;
      case Seg::idle: ws.stats.idle_ms += elapsed; break;
    }
    ws.seg = next;
    ws.seg_start = t;
  }

  // ---- event handlers ----

  void on_pull_grant(int worker, TimeMs t) {
    auto& ws = workers_[static_cast<size_t>(worker)];
    close_segment(ws, t, Seg::compute);
    if (worker_done(ws)) {
      ws.seg = Seg::idle;
      return;
    }
    if (kind_ == SyncKind::ssp && !gate_passes(worker)) {
      ws.seg = Seg::gate;
      ws.gate_blocked = true;
      return;
    }
    start_compute(worker, t);
  }

  void start_compute(int worker, TimeMs t) {
    auto& ws = workers_[static_cast<size_t>(worker)];
    const long iter = ws.completed + 1;
    ws.scheduled_compute = compute_duration(worker, iter);
    ws.seg = Seg::compute;
    ws.seg_start = t;
    schedule(t + ws.scheduled_compute + ws.half_out, SimEventKind::push_arrival, worker);
  }

  // True when `worker` may start its next iteration under the ssp gate: its
  // lead over the slowest unfinished worker must not exceed the bound.
  bool gate_passes(int worker) const {
    const long next_iter = workers_[static_cast<size_t>(worker)].completed + 1;
    return next_iter - min_completed_active() <= cfg_.model.staleness_bound;
  }

  long min_completed_active() const {
    long min_c = -1;
    for (int w = 1; w <= n_; ++w) {
      const auto& ws = workers_[static_cast<size_t>(w)];
      if (worker_done(ws)) continue;
      if (min_c < 0 || ws.completed < min_c) min_c = ws.completed;
    }
    return min_c < 0 ? 0 : min_c;
  }

  // Iteration lead of the frontier over worker `worker` at iteration `iter`,
  // measured from each worker's current round base so that barrier models
  // reset the count per superstep (asp and ssp bases stay 0 for the whole
  // run).
  long progress_gap(int worker, long iter) const {
    const auto& self = workers_[static_cast<size_t>(worker)];
    const long own = iter - self.superstep_base;
    long hi = own;
    for (int w = 1; w <= n_; ++w) {
      const auto& ws = workers_[static_cast<size_t>(w)];
      if (worker_done(ws)) continue;
      hi = std::max(hi, ws.completed - ws.superstep_base);
    }
    return hi - own;
  }

  void on_push_arrival(int worker, TimeMs t) {
    auto& ws = workers_[static_cast<size_t>(worker)];
    ++ws.completed;
    ++ws.stats.iterations;
    // The span since compute start covers the compute itself plus the push's
    // travel to the server; split it exactly.
    ws.stats.compute_ms += ws.scheduled_compute;
    ws.stats.trans_ms += (t - ws.seg_start) - ws.scheduled_compute;
    ws.seg = Seg::queue;
    ws.seg_start = t;

    if (kind_ == SyncKind::elastic) obs_.record(worker, t);
    if (ws.member && ws.completed == ws.target_abs) {
      round_arrival_lo_ = round_arrivals_ == 0 ? t : std::min(round_arrival_lo_, t);
      round_arrival_hi_ = round_arrivals_ == 0 ? t : std::max(round_arrival_hi_, t);
      ++round_arrivals_;
      if (round_planned_ && t > ws.predicted_end) round_overrun_ = true;
    }
    note_staleness();
    client_->on_push_arrival(worker, ws.completed, t);

    fifo_.push_back({worker, ws.completed, t});
    if (!server_busy_) {
      server_busy_ = true;
      schedule(t + su_, SimEventKind::server_update_complete, 0);
    }
    if (kind_ == SyncKind::ssp) release_gates(t);
  }

  void release_gates(TimeMs t) {
    for (int w = 1; w <= n_; ++w) {
      auto& ws = workers_[static_cast<size_t>(w)];
      if (!ws.gate_blocked || !gate_passes(w)) continue;
      ws.gate_blocked = false;
      close_segment(ws, t, Seg::compute);  // gate time lands in wait_ms
      start_compute(w, t);
    }
  }

  void on_server_apply(TimeMs t) {
    const PendingPush push = fifo_.front();
    fifo_.pop_front();
    if (!fifo_.empty()) {
      schedule(t + su_, SimEventKind::server_update_complete, 0);
    } else {
      server_busy_ = false;
    }

    auto& ws = workers_[static_cast<size_t>(push.worker)];
    close_segment(ws, t, Seg::wait);
    ws.applied_time = t;

    if (ws.member && push.iter == ws.target_abs) {
      // Barrier push: held for the batch commit, worker blocks.
      ws.barrier_blocked = true;
      ++round_applied_;
      if (round_applied_ == round_members_)
        schedule(t, SimEventKind::barrier_complete, 0);
      return;
    }
    client_->on_apply(push.worker, push.iter, t,
                      progress_gap(push.worker, push.iter));
    grant(push.worker, t);
  }

  void grant(int worker, TimeMs t) {
    auto& ws = workers_[static_cast<size_t>(worker)];
    close_segment(ws, t, Seg::trans_in);
    client_->on_pull(worker, t);
    schedule(t + ws.half_in, SimEventKind::pull_grant, worker);
  }

  void on_barrier_complete(TimeMs t) {
    // Every member sits at its target, so the batch staleness is the spread
    // of the per-superstep iteration quotas.
    std::vector<BarrierMember> batch;
    long hi_prog = 0;
    for (int w = 1; w <= n_; ++w) {
      const auto& ws = workers_[static_cast<size_t>(w)];
      if (ws.member)
        hi_prog = std::max(hi_prog, ws.target_abs - ws.superstep_base);
    }
    for (int w = 1; w <= n_; ++w) {
      const auto& ws = workers_[static_cast<size_t>(w)];
      if (ws.member)
        batch.push_back(
            {w, ws.target_abs, hi_prog - (ws.target_abs - ws.superstep_base)});
    }
    client_->on_barrier_apply(batch, t);

    SuperstepRecord rec;
    rec.superstep = round_planned_ ? superstep_ : 0;
    rec.planned_wait_ms = round_planned_wait_;
    rec.realized_wait_ms = round_arrivals_ > 0 ? round_arrival_hi_ - round_arrival_lo_ : 0;
    rec.barrier_time_ms = t;
    rec.planned = round_planned_;
    report_.supersteps.push_back(rec);
    ++report_.barriers_completed;
    if (round_planned_) {
      report_.supersteps_executed = superstep_;
      if (round_overrun_) ++report_.plan_overruns;
    }

    for (int w = 1; w <= n_; ++w) {
      auto& ws = workers_[static_cast<size_t>(w)];
      if (!ws.member) continue;
      ws.barrier_blocked = false;
      ws.member = false;
      ws.target_abs = 0;
      grant(w, t);
    }

    if (kind_ == SyncKind::bsp) {
      setup_bsp_round();
    } else if (kind_ == SyncKind::elastic) {
      if (warmup_rounds_done_ < 2) {
        setup_warmup_round();
      } else {
        setup_superstep();
      }
    }
  }

  // ---- round / superstep setup ----

  void reset_round_tracking() {
    round_members_ = 0;
    round_applied_ = 0;
    round_arrivals_ = 0;
    round_arrival_lo_ = 0;
    round_arrival_hi_ = 0;
    round_overrun_ = false;
    round_planned_ = false;
    round_planned_wait_ = 0;
  }

  void setup_bsp_round() {
    reset_round_tracking();
    ++bsp_round_;
    const long target = bsp_round_ * cfg_.model.k;
    for (int w = 1; w <= n_; ++w) {
      auto& ws = workers_[static_cast<size_t>(w)];
      if (worker_done(ws) || (limit_ > 0 && target > limit_)) continue;
      ws.member = true;
      ws.target_abs = target;
      ws.superstep_base = ws.completed;
      ++round_members_;
    }
  }

  void setup_warmup_round() {
    reset_round_tracking();
    ++warmup_rounds_done_;
    for (int w = 1; w <= n_; ++w) {
      auto& ws = workers_[static_cast<size_t>(w)];
      if (worker_done(ws)) continue;
      ws.member = true;
      ws.target_abs = ws.completed + 1;
      ws.superstep_base = ws.completed;
      ++round_members_;
    }
  }

  void setup_superstep() {
    reset_round_tracking();
    std::vector<int> active;
    for (int w = 1; w <= n_; ++w)
      if (!worker_done(workers_[static_cast<size_t>(w)])) active.push_back(w);
    if (active.empty()) return;

    // Plan over the active workers only; their ids compact to 1..m for the
    // prediction matrix and map back afterwards.
    ObservationBuffer buf(static_cast<int>(active.size()), cfg_.model.predictor_window);
    for (size_t i = 0; i < active.size(); ++i)
      for (TimeMs t : obs_.ring(active[i])) buf.record(static_cast<int>(i) + 1, t);
    const PredictionMatrix matrix =
        predict(buf, cfg_.model.lookahead, cfg_.model.predict_mode);
    const SearchResult best =
        zipline(merge(matrix), static_cast<int>(active.size()));
    report_.planning_us += best.elapsed.count();
    ++report_.planning_calls;

    ++superstep_;
    round_planned_ = true;
    round_planned_wait_ = best.spread_ms;
    for (size_t i = 0; i < active.size(); ++i) {
      auto& ws = workers_[static_cast<size_t>(active[i])];
      long rel = best.window.members[i].iter;
      if (limit_ > 0) rel = std::min<long>(rel, limit_ - ws.completed);
      ws.member = true;
      ws.target_abs = ws.completed + rel;
      ws.superstep_base = ws.completed;
      ws.predicted_end = matrix.row(static_cast<int>(i) + 1).back().end_time;
      ++round_members_;
    }
  }

  // ---- staleness metric ----

  void note_staleness() {
    long gap = 0;
    if (kind_ == SyncKind::elastic) {
      // Within-superstep progress gap across the current members.
      long lo = -1, hi = 0;
      for (int w = 1; w <= n_; ++w) {
        const auto& ws = workers_[static_cast<size_t>(w)];
        if (!ws.member) continue;
        const long prog = ws.completed - ws.superstep_base;
        if (lo < 0 || prog < lo) lo = prog;
        hi = std::max(hi, prog);
      }
      if (lo < 0) return;
      gap = hi - lo;
      if (gap > cfg_.model.lookahead) ++report_.staleness_violations;
    } else {
      long lo = -1, hi = 0;
      for (int w = 1; w <= n_; ++w) {
        const auto& ws = workers_[static_cast<size_t>(w)];
        if (worker_done(ws)) continue;
        if (lo < 0 || ws.completed < lo) lo = ws.completed;
        hi = std::max(hi, ws.completed);
      }
      if (lo < 0) return;
      gap = hi - lo;
      if (kind_ == SyncKind::ssp && gap > cfg_.model.staleness_bound)
        ++report_.staleness_violations;
    }
    report_.max_observed_staleness = std::max(report_.max_observed_staleness, gap);
  }

  // ---- wrap-up ----

  void flush_segments(TimeMs end) {
    for (int w = 1; w <= n_; ++w) {
      auto& ws = workers_[static_cast<size_t>(w)];
      const TimeMs elapsed = end - ws.seg_start;
      if (elapsed <= 0) continue;
      if (ws.seg == Seg::compute && elapsed > ws.scheduled_compute) {
        // An in-flight push straddles the cutoff: only the compute part of
        // the leg belongs to compute time.
        ws.stats.compute_ms += ws.scheduled_compute;
        ws.stats.trans_ms += elapsed - ws.scheduled_compute;
      } else {
        ws.seg_start = end;  // close_segment semantics, in place
        switch (ws.seg) {
          case Seg::compute: ws.stats.compute_ms += elapsed; break;
          case Seg::queue: ws.stats.queue_ms += elapsed; break;
          case Seg::wait:
          case Seg::gate: ws.stats.wait_ms += elapsed; break;
          case Seg::trans_in: ws.stats.trans_ms += elapsed; break;
          case Seg::idle: ws.stats.idle_ms += elapsed; break;
        }
      }
    }
  }

  SimReport assemble(TimeMs end) {
    report_.model = cfg_.model.name();
    report_.wall_clock_ms = end;
    report_.workers.reserve(static_cast<size_t>(n_));
    for (int w = 1; w <= n_; ++w)
      report_.workers.push_back(workers_[static_cast<size_t>(w)].stats);
    return report_;
  }

  const SimConfig& cfg_;
  SyncKind kind_;
  int n_;
  TimeMs su_;
  long limit_;
  SimClient noop_;
  SimClient* client_;

  std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> events_;
  std::uint64_t seq_ = 0;
  std::vector<WorkerState> workers_;  // 1-based
  std::deque<PendingPush> fifo_;
  bool server_busy_ = false;
  ObservationBuffer obs_;

  long bsp_round_ = 0;
  int warmup_rounds_done_ = 0;
  int superstep_ = 0;
  int round_members_ = 0;
  int round_applied_ = 0;
  int round_arrivals_ = 0;
  TimeMs round_arrival_lo_ = 0;
  TimeMs round_arrival_hi_ = 0;
  bool round_overrun_ = false;
  bool round_planned_ = false;
  TimeMs round_planned_wait_ = 0;

  SimReport report_;
};

}  // namespace

SimReport simulate(const SimConfig& config, SimClient* client) {
  config.validate();
  Simulator sim(config, client);
  return sim.run();
}

void write_report_csv(const SimReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "superstep,planned_wait_ms,realized_wait_ms,barrier_time_ms\n";
  for (const auto& rec : report.supersteps)
    out << rec.superstep << ',' << rec.planned_wait_ms << ',' << rec.realized_wait_ms
        << ',' << rec.barrier_time_ms << '\n';
  out << "summary," << report.total_wait_ms() << ',' << report.max_observed_staleness
      << ',' << report.wall_clock_ms << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace syncsim
