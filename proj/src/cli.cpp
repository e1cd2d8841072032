#include "syncsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "syncsim/barrier_search.hpp"
#include "syncsim/rng.hpp"
#include "syncsim/sync_sim.hpp"
#include "syncsim/timeline.hpp"
#include "syncsim/train_sim.hpp"

namespace syncsim {

namespace {

std::vector<WorkerProfile> make_profiles(int workers,
                                         const std::vector<double>& compute,
                                         double trans, double jitter) {
  std::vector<WorkerProfile> profiles;
  profiles.reserve(static_cast<size_t>(workers));
  for (int w = 1; w <= workers; ++w) {
    WorkerProfile p;
    p.worker = w;
    p.compute_ms = compute[static_cast<size_t>(w - 1) % compute.size()];
    p.trans_ms = trans;
    p.jitter = jitter;
    profiles.push_back(p);
  }
  return profiles;
}

std::string fmt(double v, int prec) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << v;
  return ss.str();
}

std::string fmt_full(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

// Writes to the --out file when given, otherwise to the console stream.
void deliver(const std::string& text, const std::string& out_path,
             std::ostream& console) {
  if (out_path.empty()) {
    console << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + out_path + " for writing");
  file << text;
  if (!file) throw std::runtime_error("failed writing " + out_path);
}

template <class F>
double time_block_us(F&& fn, long reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (long i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(t1 - t0).count() /
         static_cast<double>(reps);
}

struct BenchRow {
  std::string algo;
  int n = 0;
  int horizon = 0;
  TimeMs spread = 0;
  double mean_us = 0;
  double stddev_us = 0;
};

// One warm run (excluded, also calibrates repetition count so a sample takes
// at least ~300 us), then `trials` timed samples.
template <class F>
BenchRow bench_one(const std::string& algo, int n, int horizon, int trials, F&& fn) {
  BenchRow row;
  row.algo = algo;
  row.n = n;
  row.horizon = horizon;
  row.spread = fn().spread_ms;

  const double floor_us = 300.0;
  const double warm_us = time_block_us([&] { fn(); }, 1);
  long reps = 1;
  if (warm_us < floor_us)
    reps = std::min<long>(1 + static_cast<long>(floor_us / std::max(warm_us, 0.01)),
                          1000000);

  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(trials));
  for (int t = 0; t < trials; ++t)
    samples.push_back(time_block_us([&] { fn(); }, reps));

  double mean = 0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0;
  for (double s : samples) var += (s - mean) * (s - mean);
  row.mean_us = mean;
  row.stddev_us = samples.size() > 1
                      ? std::sqrt(var / static_cast<double>(samples.size() - 1))
                      : 0.0;
  return row;
}

SyncModel build_model(const std::string& name, int k, int s, int lookahead,
                      int window, const std::string& predict_mode) {
  SyncModel m = parse_model(name);
  m.k = k;
  m.staleness_bound = s;
  m.lookahead = lookahead;
  m.predictor_window = window;
  m.predict_mode = predict_mode == "last" ? PredictMode::last_interval
                                          : PredictMode::mean_interval;
  m.validate();
  return m;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"synchronization-model laboratory for parameter-server training"};
  app.name("syncsim");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_path;
  std::string format = "csv";
  app.add_option("--seed", seed, "rng seed")->capture_default_str();
  app.add_option("--out", out_path, "output file (or directory for simulate/train)");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv"}))
      ->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic push-timestamp trace");
  gen->fallthrough();
  int gen_workers = 3;
  int gen_horizon = 15;
  std::vector<double> gen_compute{100};
  double gen_trans = 20;
  double gen_jitter = 0.1;
  gen->add_option("--workers", gen_workers, "worker count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--horizon", gen_horizon, "iterations per worker")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--compute", gen_compute,
                  "per-worker compute ms, cycled when shorter than --workers")
      ->delimiter(',');
  gen->add_option("--trans", gen_trans, "transmission ms per iteration")
      ->capture_default_str();
  gen->add_option("--jitter", gen_jitter, "relative iteration noise in [0,1)")
      ->capture_default_str();

  // search
  auto* search = app.add_subcommand("search", "run barrier searches on a trace");
  search->fallthrough();
  std::string trace_path;
  bool alg_zipline = false, alg_gridscan = false, alg_full = false,
       alg_oracle = false, alg_all = false;
  long long budget = kNaiveDefaultBudget;
  search->add_option("trace", trace_path, "trace csv file")->required();
  search->add_flag("--zipline", alg_zipline, "run zipline");
  search->add_flag("--gridscan", alg_gridscan, "run gridscan");
  search->add_flag("--full-gridscan", alg_full, "run full_gridscan");
  search->add_flag("--oracle", alg_oracle, "run the exhaustive oracle");
  search->add_flag("--all", alg_all, "run every algorithm including the oracle");
  search->add_option("--budget", budget, "oracle combination budget")
      ->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "time the search algorithms over a grid");
  bench->fallthrough();
  std::vector<int> bench_workers{10, 100, 1000};
  std::vector<int> bench_horizons{15, 150};
  int bench_trials = 10;
  std::vector<std::string> bench_algos{"zipline", "gridscan", "full_gridscan"};
  bench->add_option("--workers", bench_workers, "worker counts")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--horizons", bench_horizons, "lookahead horizons")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--trials", bench_trials, "timed samples per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--algorithms", bench_algos,
                    "subset of zipline,gridscan,full_gridscan")
      ->delimiter(',')
      ->check(CLI::IsMember({"zipline", "gridscan", "full_gridscan"}));

  // shared model knobs for simulate/train
  int opt_k = 1, opt_s = 3, opt_lookahead = 15, opt_window = 3;
  std::string opt_predict = "mean";
  std::vector<std::string> models{"bsp", "asp", "ssp", "elastic"};
  std::vector<double> sim_compute{80, 100, 120, 200};
  double sim_trans = 0, sim_jitter = 0;
  int sim_workers = 0;  // 0 -> size of the compute list
  TimeMs server_update_ms = 1;

  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--model", models, "models to run (bsp, asp, ssp, elastic)")
        ->delimiter(',');
    cmd->add_option("--k", opt_k, "bsp iterations per superstep")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--s", opt_s, "ssp staleness threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--R,--lookahead", opt_lookahead, "elastic lookahead horizon")
        ->check(CLI::Range(2, 1000000))
        ->capture_default_str();
    cmd->add_option("--window", opt_window, "elastic predictor interval window")
        ->check(CLI::Range(2, 1000000))
        ->capture_default_str();
    cmd->add_option("--predict-mode", opt_predict, "mean or last")
        ->check(CLI::IsMember({"mean", "last"}))
        ->capture_default_str();
    cmd->add_option("--compute", sim_compute,
                    "per-worker compute ms, cycled when shorter than --workers")
        ->delimiter(',');
    cmd->add_option("--trans", sim_trans, "transmission ms per iteration")
        ->capture_default_str();
    cmd->add_option("--jitter", sim_jitter, "relative iteration noise in [0,1)")
        ->capture_default_str();
    cmd->add_option("--workers", sim_workers,
                    "worker count (default: length of --compute)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--server-update-ms", server_update_ms,
                    "server cost per applied push")
        ->capture_default_str();
  };

  // simulate
  auto* simulate_cmd =
      app.add_subcommand("simulate", "run the synchronization simulator");
  simulate_cmd->fallthrough();
  TimeMs duration_ms = 60000;
  long sim_iterations = 0;
  add_model_opts(simulate_cmd);
  simulate_cmd->add_option("--duration-ms", duration_ms, "simulated time budget")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--iterations", sim_iterations,
                   "per-worker iteration budget (0 = none)")
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a quadratic under each model");
  train_cmd->fallthrough();
  int dim = 8;
  long train_iterations = 100;
  double eta = 0, sigma = 0;
  add_model_opts(train_cmd);
  train_cmd->add_option("--dim", dim, "problem dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--iterations", train_iterations, "per-worker iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--eta", eta, "learning rate (0 = 0.1/lambda_max)")
      ->capture_default_str();
  train_cmd->add_option("--sigma", sigma, "gradient noise scale")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (gen->parsed()) {
      if (out_path.empty())
        throw std::runtime_error("gen requires --out <file> for the trace");
      const auto profiles = make_profiles(gen_workers, gen_compute, gen_trans,
                                          gen_jitter);
      write_trace(generate_trace(profiles, gen_horizon, seed), out_path);
      return 0;
    }

    if (search->parsed()) {
      const PredictionMatrix matrix = read_trace(trace_path);
      const MergedTimeline merged = merge(matrix);
      if (alg_all) alg_zipline = alg_gridscan = alg_full = alg_oracle = true;
      if (!alg_zipline && !alg_gridscan && !alg_full && !alg_oracle)
        alg_zipline = alg_gridscan = alg_full = true;

      std::ostringstream csv;
      csv << "algorithm,spread_ms,anchor_ms,windows_examined,elapsed_us\n";
      auto emit = [&](const std::string& name, const SearchResult& r) {
        csv << name << ',' << r.spread_ms << ',' << r.window.anchor_ms << ','
            << r.windows_examined << ',' << r.elapsed.count() << '\n';
        return r.spread_ms;
      };
      TimeMs z = -1, g = -1, f = -1;
      if (alg_zipline) z = emit("zipline", zipline(merged, matrix.workers()));
      if (alg_gridscan) g = emit("gridscan", gridscan(matrix));
      if (alg_full) f = emit("full_gridscan", full_gridscan(matrix));
      if (alg_oracle) emit("oracle", naive_search(matrix, budget));
      deliver(csv.str(), out_path, out);

      bool ordered = true;
      if (z >= 0 && f >= 0) ordered = ordered && z <= f;
      if (f >= 0 && g >= 0) ordered = ordered && f <= g;
      if (z >= 0 && g >= 0) ordered = ordered && z <= g;
      if (!ordered) err << "spread ordering violated\n";
      return ordered ? 0 : 1;
    }

    if (bench->parsed()) {
      std::vector<BenchRow> rows;
      for (int n : bench_workers) {
        if (n < 1) throw std::runtime_error("bench worker counts must be >= 1");
        std::vector<double> compute;
        for (int w = 1; w <= n; ++w)
          compute.push_back(60.0 + 15.0 * ((w - 1) % 10));
        const auto profiles = make_profiles(n, compute, 20.0, 0.15);
        for (int horizon : bench_horizons) {
          if (horizon < 1) throw std::runtime_error("bench horizons must be >= 1");
          const PredictionMatrix matrix = generate_trace(
              profiles, horizon, rng::key(seed, static_cast<std::uint64_t>(n),
                                          static_cast<std::uint64_t>(horizon), 30));
          const MergedTimeline merged = merge(matrix);
          for (const std::string& algo : bench_algos) {
            if (algo == "zipline")
              rows.push_back(bench_one(algo, n, horizon, bench_trials,
                                       [&] { return zipline(merged, n); }));
            else if (algo == "gridscan")
              rows.push_back(bench_one(algo, n, horizon, bench_trials,
                                       [&] { return gridscan(matrix); }));
            else
              rows.push_back(bench_one(algo, n, horizon, bench_trials,
                                       [&] { return full_gridscan(matrix); }));
          }
        }
      }

      const int min_n = *std::min_element(bench_workers.begin(), bench_workers.end());
      const int min_r =
          *std::min_element(bench_horizons.begin(), bench_horizons.end());
      auto mean_of = [&](const std::string& algo, int n, int horizon) {
        for (const BenchRow& r : rows)
          if (r.algo == algo && r.n == n && r.horizon == horizon) return r.mean_us;
        return 0.0;
      };
      std::ostringstream csv;
      csv << "algorithm,n,R,spread_ms,mean_us,stddev_us,ratio_vs_min_R,"
             "ratio_vs_min_n\n";
      for (const BenchRow& r : rows) {
        const double base_r = mean_of(r.algo, r.n, min_r);
        const double base_n = mean_of(r.algo, min_n, r.horizon);
        csv << r.algo << ',' << r.n << ',' << r.horizon << ',' << r.spread << ','
            << fmt(r.mean_us, 3) << ',' << fmt(r.stddev_us, 3) << ','
            << fmt(base_r > 0 ? r.mean_us / base_r : 0.0, 4) << ','
            << fmt(base_n > 0 ? r.mean_us / base_n : 0.0, 4) << '\n';
      }
      deliver(csv.str(), out_path, out);
      return 0;
    }

    if (simulate_cmd->parsed()) {
      const int n = sim_workers > 0 ? sim_workers
                                    : static_cast<int>(sim_compute.size());
      const auto profiles = make_profiles(n, sim_compute, sim_trans, sim_jitter);
      if (!out_path.empty()) std::filesystem::create_directories(out_path);

      out << "model,total_wait_ms,max_observed_staleness,staleness_violations,"
             "supersteps,plan_overruns,iterations,wall_clock_ms\n";
      long violations = 0;
      for (const std::string& name : models) {
        SimConfig cfg;
        cfg.profiles = profiles;
        cfg.model = build_model(name, opt_k, opt_s, opt_lookahead, opt_window,
                                opt_predict);
        cfg.duration_ms = duration_ms;
        cfg.server_update_ms = server_update_ms;
        cfg.seed = seed;
        cfg.iteration_limit = sim_iterations;
        const SimReport report = simulate(cfg);
        if (!out_path.empty())
          write_report_csv(report, std::filesystem::path(out_path) /
                                       ("sim_" + name + ".csv"));
        out << name << ',' << report.total_wait_ms() << ','
            << report.max_observed_staleness << ',' << report.staleness_violations
            << ',' << report.supersteps_executed << ',' << report.plan_overruns
            << ',' << report.total_iterations() << ',' << report.wall_clock_ms
            << '\n';
        violations += report.staleness_violations;
      }
      if (violations > 0) err << "staleness bound violated\n";
      return violations == 0 ? 0 : 1;
    }

    if (train_cmd->parsed()) {
      const int n = sim_workers > 0 ? sim_workers
                                    : static_cast<int>(sim_compute.size());
      const auto profiles = make_profiles(n, sim_compute, sim_trans, sim_jitter);
      const QuadraticProblem problem = QuadraticProblem::random(dim, n, seed, sigma);
      if (!out_path.empty()) std::filesystem::create_directories(out_path);

      out << "model,final_loss_gap,gradients_applied,max_gradient_staleness,"
             "total_wait_ms,wall_clock_ms\n";
      for (const std::string& name : models) {
        TrainConfig cfg;
        cfg.learning_rate = eta;
        cfg.iterations = train_iterations;
        cfg.model = build_model(name, opt_k, opt_s, opt_lookahead, opt_window,
                                opt_predict);
        cfg.seed = seed;
        cfg.server_update_ms = server_update_ms;
        const TrainResult result = train(problem, cfg, profiles);
        if (!out_path.empty())
          write_trajectory_csv(result, name, std::filesystem::path(out_path) /
                                                 ("train_" + name + ".csv"));
        out << name << ',' << fmt_full(result.final_loss_gap) << ','
            << result.gradients_applied << ',' << result.max_gradient_staleness
            << ',' << result.sim.total_wait_ms() << ',' << result.sim.wall_clock_ms
            << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace syncsim
