#pragma once

// Experiment engine: seeded simulation runs feeding monitors, coverage
// statistics, the error-ratio study and latency measurements. Runs are
// independent and execute in parallel (OpenMP); every parallel entry point has
// a serial counterpart that produces identical results apart from timings.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairmon/bayesian.hpp"
#include "fairmon/frequentist.hpp"
#include "fairmon/markov.hpp"

namespace fairmon {

enum class MonitorKind { freq, freq_baseline, bayes };

/// "freq", "freq-baseline" or "bayes". Throws ValidationError.
MonitorKind parse_monitor_kind(std::string_view name);
std::string_view monitor_kind_name(MonitorKind kind);

/// Uniform view of any monitor's current verdict.
struct Reading {
  std::optional<PendingReason> pending;
  Interval interval;
  double mean = 0.0;

  bool is_pending() const { return pending.has_value(); }
  bool operator==(const Reading&) const = default;
};

Reading to_reading(const MonitorOutput& o);
Reading to_reading(const BayesOutput& o);

class StreamMonitor {
 public:
  virtual ~StreamMonitor() = default;
  virtual Reading next(StateId s) = 0;
  virtual Reading reading() const = 0;
  /// Register count (frequentist) or counter count (Bayesian).
  virtual std::size_t registers() const = 0;
  /// Throws ValidationError for monitors without snapshot support.
  virtual nlohmann::json snapshot() const = 0;
  virtual void restore(const nlohmann::json& j) = 0;
};

/// Builds a monitor. `seed` is the run seed; the frequentist monitor derives
/// its own reshuffling stream from it so that it never shares random numbers
/// with a simulator seeded identically. `prior` defaults to all ones.
std::unique_ptr<StreamMonitor> make_monitor(MonitorKind kind, const StateSpace& states, const Pse& phi,
                                            double delta, const std::optional<PriorTheta>& prior,
                                            std::uint64_t seed, StateId initial);

enum class ExperimentKind { trajectory, coverage, ratio, latency };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::trajectory;
  std::optional<ChainSpec> chain;
  std::string pse;
  double delta = 0.05;
  MonitorKind monitor = MonitorKind::freq;
  std::optional<PriorTheta> prior;
  bool sample_chain_from_prior = false;  // coverage: draw M from the prior per run
  std::uint64_t steps = 10000;
  std::uint64_t runs = 1;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // explicit per-run seeds, overrides `seed`
  std::uint64_t stride = 1;
  std::uint64_t warmup = 0;
  std::string output;
  int n_max = 10;
  std::vector<std::uint64_t> trace_lengths{1000, 10000};

  /// Seed of run r: seeds[r] if given, else seed + r.
  std::uint64_t run_seed(std::uint64_t r) const;
  /// Parsed PSE over the chain's state space.
  Pse parsed_pse() const;
  /// Throws ValidationError.
  void validate() const;

  /// Relative paths inside the JSON resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct MetricsRow {
  std::uint64_t run = 0;
  std::uint64_t step = 0;
  StateId state;
  Reading reading;
  std::int64_t update_ns = 0;
};

/// `run,step,state,lo,hi,mean,width,update_ns`.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row, const StateSpace& states);
/// `lo,hi,mean,width` with round-trip precision, or `pending,pending,,`.
void write_reading_fields(std::ostream& out, const Reading& reading);

/// Per run: simulator thread -> bounded FIFO -> monitor; rows every `stride`
/// steps (steps 1..T are transitions). Runs execute in parallel.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& config);
/// Same rows, computed inline and sequentially.
std::vector<MetricsRow> run_experiment_serial(const ExperimentConfig& config);

struct CoverageResult {
  std::uint64_t runs = 0;
  std::uint64_t covered = 0;
  std::uint64_t pending = 0;  // runs that never produced an estimate (counted as misses)
  double fraction = 0.0;
  double std_error = 0.0;     // binomial sqrt(f (1 - f) / runs)
  bool operator==(const CoverageResult&) const = default;
};

/// Fraction of runs whose final interval contains phi(M).
CoverageResult coverage(const ExperimentConfig& config);
CoverageResult coverage_serial(const ExperimentConfig& config);

/// One draw of a transition matrix from the matrix-beta prior: each row is
/// Dirichlet(theta_i), sampled by normalized Gamma variates.
TransitionMatrix sample_prior_matrix(const PriorTheta& theta, Rng& rng);

struct RatioRow {
  int n = 0;
  double analytic = 0.0;
  std::vector<double> empirical;  // one per trace length
};

/// phi_n = sum_{i=1..n} v_1i on a uniform n_max-state chain: baseline width over
/// aggregated-monitor width at the end of each trace.
std::vector<RatioRow> error_ratio_study(int n_max, double delta,
                                        const std::vector<std::uint64_t>& trace_lengths,
                                        std::uint64_t seed);

struct LatencyReport {
  double mean_ns = 0.0;
  double max_ns = 0.0;
  std::size_t registers = 0;
  std::uint64_t updates = 0;
};

/// Untimed warmup of `config.warmup` steps, then `config.steps` timed updates
/// on a single simulated run. Throws ValidationError for zero warmup.
LatencyReport latency_report(const ExperimentConfig& config);

}  // namespace fairmon
