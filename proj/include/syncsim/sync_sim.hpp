#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "syncsim/predictor.hpp"
#include "syncsim/timeline.hpp"

namespace syncsim {

enum class SyncKind { bsp, asp, ssp, elastic };

struct SyncModel {
  SyncKind kind = SyncKind::bsp;
  int k = 1;                  // bsp: iterations per superstep
  int staleness_bound = 3;    // ssp: max iteration lead over the slowest
  int lookahead = 15;         // elastic: prediction horizon R (>= 2)
  int predictor_window = 3;   // elastic: intervals per worker fed to predict
  PredictMode predict_mode = PredictMode::mean_interval;

  static SyncModel bsp(int k = 1);
  static SyncModel asp();
  static SyncModel ssp(int s = 3);
  static SyncModel elastic(int lookahead = 15, int predictor_window = 3);

  void validate() const;
  std::string name() const;
};

SyncModel parse_model(const std::string& name);  // "bsp"|"asp"|"ssp"|"elastic"

// One planned synchronization point: for every worker the future iteration
// (1-based, relative to the planning instant) after which it must block.
struct BarrierPlan {
  int superstep = 0;
  std::vector<int> target_iter;     // index p-1 holds worker p's target, in [1, horizon]
  TimeMs barrier_estimate_ms = 0;   // anchor of the chosen window
  TimeMs planned_wait_ms = 0;       // spread of the chosen window
};

// Predicts every worker's next `horizon` push times from `buffer` and places
// the barrier with zipline on the predicted matrix.
BarrierPlan plan_superstep(const ObservationBuffer& buffer, int horizon,
                           PredictMode mode = PredictMode::mean_interval);

struct SimConfig {
  std::vector<WorkerProfile> profiles;
  SyncModel model;
  TimeMs duration_ms = 0;       // stop at this simulated time (0 = unbounded)
  TimeMs server_update_ms = 1;  // cost of applying one push
  std::uint64_t seed = 0;
  long iteration_limit = 0;     // per-worker iteration budget (0 = unbounded)

  void validate() const;
};

// Discrete event kinds, in tie-break priority order: server-side events
// resolve before worker-side events at the same instant, then worker id.
enum class SimEventKind {
  server_update_complete = 0,
  barrier_complete = 1,
  push_arrival = 2,
  pull_grant = 3,
};

struct SimEvent {
  TimeMs time = 0;
  SimEventKind kind = SimEventKind::push_arrival;
  int worker = 0;  // 0 for events not tied to a worker
  std::uint64_t seq = 0;
};

struct SuperstepRecord {
  int superstep = 0;            // 0 for warm-up barriers (no plan)
  TimeMs planned_wait_ms = 0;   // 0 when no plan was formed
  TimeMs realized_wait_ms = 0;  // spread of the realized barrier-push arrivals
  TimeMs barrier_time_ms = 0;   // when the last barrier push was applied
  bool planned = false;
};

struct WorkerStats {
  long iterations = 0;
  TimeMs compute_ms = 0;
  TimeMs trans_ms = 0;
  TimeMs queue_ms = 0;  // push arrival -> applied (includes the apply itself)
  TimeMs wait_ms = 0;   // barrier blocking plus staleness-gate blocking
  TimeMs idle_ms = 0;   // only after a worker exhausts its iteration budget
};

struct SimReport {
  std::string model;
  TimeMs wall_clock_ms = 0;
  std::vector<WorkerStats> workers;
  std::vector<SuperstepRecord> supersteps;
  long supersteps_executed = 0;        // planned supersteps only
  long barriers_completed = 0;         // includes warm-up and bsp barriers
  long max_observed_staleness = 0;     // largest iteration gap seen at any event
  long staleness_violations = 0;       // must stay 0; counted, never masked
  long plan_overruns = 0;              // supersteps where a target slipped past
                                       // the worker's predicted horizon end
  std::int64_t planning_us = 0;        // host-side cost of the zipline calls
  long planning_calls = 0;

  TimeMs total_wait_ms() const;
  long total_iterations() const;
};

// Hooks for layering training (or any observer) over the event loop. Workers
// and times arrive in deterministic event order.
struct BarrierMember {
  int worker = 0;
  long iter = 0;
  long staleness = 0;
};

class SimClient {
 public:
  virtual ~SimClient() = default;
  // Worker received the current weights (sim start and after each release).
  virtual void on_pull(int worker, TimeMs t) { (void)worker, (void)t; }
  // Worker's push landed at the server.
  virtual void on_push_arrival(int worker, long iter, TimeMs t) {
    (void)worker, (void)iter, (void)t;
  }
  // Push applied individually (asp, ssp, and pushes before a barrier point).
  virtual void on_apply(int worker, long iter, TimeMs t, long staleness) {
    (void)worker, (void)iter, (void)t, (void)staleness;
  }
  // Barrier resolved: members' held pushes commit as one batch, in worker order.
  virtual void on_barrier_apply(const std::vector<BarrierMember>& members, TimeMs t) {
    (void)members, (void)t;
  }
};

// Runs the parameter-server event loop under the configured model. Worker
// cycle: compute (jittered) -> push travels trans/2 -> FIFO apply at the
// server (server_update_ms each) -> model-specific release -> pull travels
// trans/2 -> next compute. Deterministic for a fixed config and seed.
SimReport simulate(const SimConfig& config, SimClient* client = nullptr);

void write_report_csv(const SimReport& report, const std::filesystem::path& path);

}  // namespace syncsim
