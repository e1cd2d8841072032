#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "syncsim/sync_sim.hpp"

namespace syncsim {

// Strongly convex quadratic f(w) = 1/2 w'Aw - b'w with the data split into
// one shard per worker. A, b, and the shards have integer entries, so the
// shards sum to the full problem exactly even in floating point.
struct QuadraticProblem {
  int dim = 0;
  int workers = 0;
  std::vector<double> a;               // dim x dim, row major, SPD
  std::vector<double> b;               // dim
  std::vector<double> w_star;          // solves A w = b
  std::vector<std::vector<double>> shard_a;  // per worker, sums to a
  std::vector<std::vector<double>> shard_b;  // per worker, sums to b
  double noise_sigma = 0;              // optional gradient noise
  double lambda_max = 0;               // largest eigenvalue of A

  static QuadraticProblem random(int dim, int workers, std::uint64_t seed,
                                 double noise_sigma = 0);

  double loss(const std::vector<double>& w) const;
  double loss_gap(const std::vector<double>& w) const;  // loss(w) - loss(w*)
  // Shard gradient A_p w - b_p, plus seeded gaussian noise when sigma > 0.
  std::vector<double> shard_gradient(int worker, const std::vector<double>& w,
                                     long iter, std::uint64_t seed) const;
};

struct TrainConfig {
  double learning_rate = 0;  // 0 -> 0.1 / lambda_max
  long iterations = 100;     // per-worker iteration budget
  SyncModel model;
  std::uint64_t seed = 0;
  TimeMs server_update_ms = 1;
};

struct LossSample {
  TimeMs wall_ms = 0;
  long epoch = 0;  // applied gradients / workers
  double loss_gap = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  std::vector<LossSample> trajectory;
  double final_loss_gap = 0;
  long gradients_applied = 0;
  long max_gradient_staleness = 0;
  // Weights after each barrier commit (bsp / elastic), for trajectory checks.
  std::vector<std::vector<double>> barrier_weights;
  SimReport sim;
};

// Runs the synchronization simulator with a gradient-descent client on top:
// each push carries the shard gradient evaluated at the weights from that
// worker's last pull; pushes apply as w -= eta * g individually, or as one
// summed batch (in worker-id order) at barriers. Throws DivergenceError when
// the loss gap exceeds 1e6 times its initial value.
TrainResult train(const QuadraticProblem& problem, const TrainConfig& config,
                  const std::vector<WorkerProfile>& profiles);

void write_trajectory_csv(const TrainResult& result, const std::string& model,
                          const std::filesystem::path& path);

}  // namespace syncsim
