#include "syncsim/train_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "syncsim/rng.hpp"

namespace syncsim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

long long int_draw(std::uint64_t h, long long lo, long long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<long long>(h % span);
}

}  // namespace

QuadraticProblem QuadraticProblem::random(int dim, int workers, std::uint64_t seed,
                                          double noise_sigma) {
  if (dim < 1) fail("dim must be >= 1");
  if (workers < 1) fail("need at least one worker");
  QuadraticProblem p;
  p.dim = dim;
  p.workers = workers;
  p.noise_sigma = noise_sigma;
  const auto d = static_cast<size_t>(dim);

  // A = B'B + dim*I with small integer B: SPD, integer entries, so shard
  // splits below can sum back to A without rounding.
  std::vector<long long> bmat(d * d);
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j)
      bmat[i * d + j] = int_draw(rng::key(seed, i, j, 10), -3, 3);
  std::vector<long long> amat(d * d, 0);
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) {
      long long acc = 0;
      for (size_t k = 0; k < d; ++k) acc += bmat[k * d + i] * bmat[k * d + j];
      amat[i * d + j] = acc + (i == j ? dim : 0);
    }
  std::vector<long long> bvec(d);
  bool any = false;
  for (size_t i = 0; i < d; ++i) {
    bvec[i] = int_draw(rng::key(seed, i, 0, 11), -9, 9);
    any = any || bvec[i] != 0;
  }
  if (!any) bvec[0] = 1;

  p.a.assign(amat.begin(), amat.end());
  p.b.assign(bvec.begin(), bvec.end());

  // Integer random split across workers; the last shard takes the remainder,
  // so the shards sum to the full problem exactly.
  const auto n = static_cast<size_t>(workers);
  p.shard_a.assign(n, std::vector<double>(d * d, 0));
  p.shard_b.assign(n, std::vector<double>(d, 0));
  for (size_t e = 0; e < d * d; ++e) {
    long long rest = amat[e];
    for (size_t w = 0; w + 1 < n; ++w) {
      const long long part = int_draw(rng::key(seed, w, e, 12), -4, 4);
      p.shard_a[w][e] = static_cast<double>(part);
      rest -= part;
    }
    p.shard_a[n - 1][e] = static_cast<double>(rest);
  }
  for (size_t e = 0; e < d; ++e) {
    long long rest = bvec[e];
    for (size_t w = 0; w + 1 < n; ++w) {
      const long long part = int_draw(rng::key(seed, w, e, 13), -4, 4);
      p.shard_b[w][e] = static_cast<double>(part);
      rest -= part;
    }
    p.shard_b[n - 1][e] = static_cast<double>(rest);
  }

  // w* from A w = b, Gaussian elimination with partial pivoting.
  std::vector<double> m(d * (d + 1));
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) m[i * (d + 1) + j] = p.a[i * d + j];
    m[i * (d + 1) + d] = p.b[i];
  }
  for (size_t col = 0; col < d; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < d; ++r)
      if (std::fabs(m[r * (d + 1) + col]) > std::fabs(m[pivot * (d + 1) + col]))
        pivot = r;
    if (pivot != col)
      for (size_t j = 0; j <= d; ++j)
        std::swap(m[col * (d + 1) + j], m[pivot * (d + 1) + j]);
    const double diag = m[col * (d + 1) + col];
    for (size_t r = col + 1; r < d; ++r) {
      const double factor = m[r * (d + 1) + col] / diag;
      for (size_t j = col; j <= d; ++j)
        m[r * (d + 1) + j] -= factor * m[col * (d + 1) + j];
    }
  }
  p.w_star.assign(d, 0);
  for (size_t i = d; i-- > 0;) {
    double acc = m[i * (d + 1) + d];
    for (size_t j = i + 1; j < d; ++j) acc -= m[i * (d + 1) + j] * p.w_star[j];
    p.w_star[i] = acc / m[i * (d + 1) + i];
  }

  // lambda_max by power iteration; A is SPD so this converges.
  std::vector<double> v(d, 1.0), av(d);
  double lambda = 1;
  for (int it = 0; it < 200; ++it) {
    for (size_t i = 0; i < d; ++i) {
      double acc = 0;
      for (size_t j = 0; j < d; ++j) acc += p.a[i * d + j] * v[j];
      av[i] = acc;
    }
    double norm = 0;
    for (size_t i = 0; i < d; ++i) norm += av[i] * av[i];
    norm = std::sqrt(norm);
    if (norm == 0) break;
    lambda = norm;
    for (size_t i = 0; i < d; ++i) v[i] = av[i] / norm;
  }
  p.lambda_max = lambda;
  return p;
}

double QuadraticProblem::loss(const std::vector<double>& w) const {
  const auto d = static_cast<size_t>(dim);
  double quad = 0, lin = 0;
  for (size_t i = 0; i < d; ++i) {
    double acc = 0;
    for (size_t j = 0; j < d; ++j) acc += a[i * d + j] * w[j];
    quad += w[i] * acc;
    lin += b[i] * w[i];
  }
  return 0.5 * quad - lin;
}

double QuadraticProblem::loss_gap(const std::vector<double>& w) const {
  return loss(w) - loss(w_star);
}

std::vector<double> QuadraticProblem::shard_gradient(int worker,
                                                     const std::vector<double>& w,
                                                     long iter,
                                                     std::uint64_t seed) const {
  const auto d = static_cast<size_t>(dim);
  const auto& sa = shard_a[static_cast<size_t>(worker) - 1];
  const auto& sb = shard_b[static_cast<size_t>(worker) - 1];
  std::vector<double> g(d);
  for (size_t i = 0; i < d; ++i) {
    double acc = 0;
    for (size_t j = 0; j < d; ++j) acc += sa[i * d + j] * w[j];
    g[i] = acc - sb[i];
  }
  if (noise_sigma > 0)
    for (size_t i = 0; i < d; ++i)
      g[i] += noise_sigma *
              rng::gaussian(rng::key(seed, static_cast<std::uint64_t>(worker),
                                     static_cast<std::uint64_t>(iter), 1000 + i));
  return g;
}

namespace {

class TrainClient : public SimClient {
 public:
  TrainClient(const QuadraticProblem& problem, const TrainConfig& config, double eta)
      : problem_(problem),
        config_(config),
        eta_(eta),
        weights_(static_cast<size_t>(problem.dim), 0.0),
        snapshots_(static_cast<size_t>(problem.workers) + 1),
        held_(static_cast<size_t>(problem.workers) + 1) {
    initial_gap_ = problem_.loss_gap(weights_);
    result_.trajectory.push_back({0, 0, initial_gap_});
  }

  void on_pull(int worker, TimeMs t) override {
    (void)t;
    snapshots_[static_cast<size_t>(worker)] = weights_;
  }

  void on_push_arrival(int worker, long iter, TimeMs t) override {
    (void)t;
    held_[static_cast<size_t>(worker)] =
        problem_.shard_gradient(worker, snapshots_[static_cast<size_t>(worker)],
                                iter, config_.seed);
  }

  void on_apply(int worker, long iter, TimeMs t, long staleness) override {
    (void)iter;
    const auto& g = held_[static_cast<size_t>(worker)];
    for (size_t i = 0; i < weights_.size(); ++i) weights_[i] -= eta_ * g[i];
    account(1, staleness, t);
  }

  void on_barrier_apply(const std::vector<BarrierMember>& members, TimeMs t) override {
    if (members.empty()) return;
    // Summation in worker-id order (members arrive sorted) keeps the batch
    // bitwise deterministic.
    std::vector<double> sum(weights_.size(), 0.0);
    long max_stal = 0;
    for (const BarrierMember& m : members) {
      const auto& g = held_[static_cast<size_t>(m.worker)];
      for (size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
      max_stal = std::max(max_stal, m.staleness);
    }
    for (size_t i = 0; i < weights_.size(); ++i) weights_[i] -= eta_ * sum[i];
    result_.barrier_weights.push_back(weights_);
    account(static_cast<long>(members.size()), max_stal, t);
  }

  TrainResult take_result(const QuadraticProblem& problem) {
    result_.final_loss_gap = problem.loss_gap(weights_);
    const long epoch = result_.gradients_applied / problem.workers;
    if (result_.trajectory.empty() || result_.trajectory.back().epoch != epoch ||
        result_.trajectory.back().loss_gap != result_.final_loss_gap)
      result_.trajectory.push_back({last_time_, epoch, result_.final_loss_gap});
    return std::move(result_);
  }

 private:
  void account(long gradients, long staleness, TimeMs t) {
    result_.gradients_applied += gradients;
    result_.max_gradient_staleness =
        std::max(result_.max_gradient_staleness, staleness);
    last_time_ = t;
    const double gap = problem_.loss_gap(weights_);
    if (gap > 1e6 * std::max(initial_gap_, 1e-12))
      throw DivergenceError("training diverged: loss gap " + std::to_string(gap) +
                            " exceeds 1e6 x initial gap " +
                            std::to_string(initial_gap_));
    const long epoch = result_.gradients_applied / problem_.workers;
    if (epoch > last_epoch_) {
      last_epoch_ = epoch;
      result_.trajectory.push_back({t, epoch, gap});
    }
  }

  const QuadraticProblem& problem_;
  const TrainConfig& config_;
  double eta_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> snapshots_;  // 1-based
  std::vector<std::vector<double>> held_;       // 1-based
  double initial_gap_ = 0;
  long last_epoch_ = 0;
  TimeMs last_time_ = 0;
  TrainResult result_;
};

}  // namespace

TrainResult train(const QuadraticProblem& problem, const TrainConfig& config,
                  const std::vector<WorkerProfile>& profiles) {
  if (static_cast<int>(profiles.size()) != problem.workers)
    fail("profile count must match the problem's worker count");
  if (config.iterations < 1) fail("iteration budget must be >= 1");
  const double eta =
      config.learning_rate > 0 ? config.learning_rate : 0.1 / problem.lambda_max;

  SimConfig sim_cfg;
  sim_cfg.profiles = profiles;
  sim_cfg.model = config.model;
  sim_cfg.duration_ms = 0;
  sim_cfg.server_update_ms = config.server_update_ms;
  sim_cfg.seed = config.seed;
  sim_cfg.iteration_limit = config.iterations;

  TrainClient client(problem, config, eta);
  SimReport report = simulate(sim_cfg, &client);
  TrainResult result = client.take_result(problem);
  result.sim = std::move(report);
  return result;
}

void write_trajectory_csv(const TrainResult& result, const std::string& model,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "wall_ms,epoch,loss_gap,model\n";
  out << std::setprecision(17);
  for (const auto& s : result.trajectory)
    out << s.wall_ms << ',' << s.epoch << ',' << s.loss_gap << ',' << model << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace syncsim
