#include "fairmon/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "fairmon/bounded_queue.hpp"
#include "fairmon/errors.hpp"
#include "fairmon/parser.hpp"

namespace fairmon {

MonitorKind parse_monitor_kind(std::string_view name) {
  if (name == "freq") return MonitorKind::freq;
  if (name == "freq-baseline") return MonitorKind::freq_baseline;
  if (name == "bayes") return MonitorKind::bayes;
  throw ValidationError("unknown monitor kind '" + std::string(name) + "'");
}

std::string_view monitor_kind_name(MonitorKind kind) {
  switch (kind) {
    case MonitorKind::freq:
      return "freq";
    case MonitorKind::freq_baseline:
      return "freq-baseline";
    case MonitorKind::bayes:
      return "bayes";
  }
  return "?";
}

Reading to_reading(const MonitorOutput& o) {
  if (auto* p = std::get_if<Pending>(&o)) return {p->reason, {}, 0.0};
  const auto& e = std::get<Estimate>(o);
  return {std::nullopt, e.interval, e.mean};
}

Reading to_reading(const BayesOutput& o) {
  if (auto* p = std::get_if<Pending>(&o)) return {p->reason, {}, 0.0};
  const auto& e = std::get<BayesEstimate>(o);
  return {std::nullopt, e.interval, e.mean};
}

namespace {

constexpr std::uint64_t kMonitorStream = 0x6d6f6e69746f72ULL;

class FreqAdapter final : public StreamMonitor {
 public:
  template <class... A>
  explicit FreqAdapter(A&&... a) : m_(std::forward<A>(a)...) {}
  Reading next(StateId s) override { return to_reading(m_.next(s)); }
  Reading reading() const override { return to_reading(m_.output()); }
  std::size_t registers() const override { return m_.registers(); }
  nlohmann::json snapshot() const override { return m_.snapshot(); }
  void restore(const nlohmann::json& j) override { m_.restore(j); }

 private:
  FrequentistMonitor m_;
};

class BaselineAdapter final : public StreamMonitor {
 public:
  template <class... A>
  explicit BaselineAdapter(A&&... a) : m_(std::forward<A>(a)...) {}
  Reading next(StateId s) override { return to_reading(m_.next(s)); }
  Reading reading() const override { return to_reading(m_.output()); }
  std::size_t registers() const override { return m_.registers(); }
  nlohmann::json snapshot() const override {
    throw ValidationError("the baseline monitor does not support snapshots");
  }
  void restore(const nlohmann::json&) override {
    throw ValidationError("the baseline monitor does not support snapshots");
  }

 private:
  BaselineMonitor m_;
};

class BayesAdapter final : public StreamMonitor {
 public:
  template <class... A>
  explicit BayesAdapter(A&&... a) : m_(std::forward<A>(a)...) {}
  Reading next(StateId s) override { return to_reading(m_.next(s)); }
  Reading reading() const override { return to_reading(m_.output()); }
  std::size_t registers() const override { return m_.counters(); }
  nlohmann::json snapshot() const override { return m_.snapshot(); }
  void restore(const nlohmann::json& j) override { m_.restore(j); }

 private:
  BayesianMonitor m_;
};

}  // namespace

std::unique_ptr<StreamMonitor> make_monitor(MonitorKind kind, const StateSpace& states, const Pse& phi,
                                            double delta, const std::optional<PriorTheta>& prior,
                                            std::uint64_t seed, StateId initial) {
  switch (kind) {
    case MonitorKind::freq:
      return std::make_unique<FreqAdapter>(states, phi, delta, derive_seed(seed, kMonitorStream), initial);
    case MonitorKind::freq_baseline:
      return std::make_unique<BaselineAdapter>(states, phi, delta, initial);
    case MonitorKind::bayes:
      return std::make_unique<BayesAdapter>(states, phi, prior ? *prior : PriorTheta::uniform(states.size()),
                                            delta, initial);
  }
  throw ValidationError("unknown monitor kind");
}

// Config -----------------------------------------------------------------

std::uint64_t ExperimentConfig::run_seed(std::uint64_t r) const {
  return seeds.empty() ? seed + r : seeds.at(r);
}

Pse ExperimentConfig::parsed_pse() const {
  if (!chain) throw ValidationError("experiment config has no chain");
  return parse_pse(pse, chain->states);
}

void ExperimentConfig::validate() const {
  if (kind == ExperimentKind::ratio) {
    if (n_max < 1) throw ValidationError("n_max must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
    if (trace_lengths.empty()) throw ValidationError("trace_lengths must not be empty");
    for (auto t : trace_lengths)
      if (t == 0) throw ValidationError("trace lengths must be positive");
    return;
  }
  if (!chain) throw ValidationError("experiment config has no chain");
  if (pse.empty()) throw ValidationError("experiment config has no pse");
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (steps < 1) throw ValidationError("steps must be at least 1");
  if (stride < 1) throw ValidationError("stride must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (!seeds.empty() && seeds.size() != runs) throw ValidationError("seeds must list one seed per run");
  if (prior && prior->size() != chain->states.size())
    throw ValidationError("prior size does not match the chain");
  if (sample_chain_from_prior && kind != ExperimentKind::coverage)
    throw ValidationError("sample_chain_from_prior applies to coverage experiments only");
  if (kind == ExperimentKind::latency && warmup == 0)
    throw ValidationError("latency experiments need a nonzero warmup");
  parsed_pse();
}

namespace {

ExperimentKind parse_kind(const std::string& s) {
  if (s == "trajectory") return ExperimentKind::trajectory;
  if (s == "coverage") return ExperimentKind::coverage;
  if (s == "ratio") return ExperimentKind::ratio;
  if (s == "latency") return ExperimentKind::latency;
  throw ValidationError("unknown experiment kind '" + s + "'");
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.string();
}

ChainSpec chain_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "lending") return lending_chain();
    if (name == "admission") return admission_chain();
    return load_chain_file(resolve(name, base));
  }
  if (j.contains("bundled")) {
    const auto name = j.at("bundled").get<std::string>();
    const auto params = j.value("params", nlohmann::json::object());
    if (name == "lending") {
      LendingParams p;
      p.p_group_g = params.value("p_group_g", p.p_group_g);
      p.grant_g = params.value("grant_g", p.grant_g);
      p.grant_gbar = params.value("grant_gbar", p.grant_gbar);
      p.repay_g = params.value("repay_g", p.repay_g);
      p.repay_gbar = params.value("repay_gbar", p.repay_gbar);
      return lending_chain(p);
    }
    if (name == "admission") {
      AdmissionParams p;
      p.levels = params.value("levels", p.levels);
      p.p_group_g = params.value("p_group_g", p.p_group_g);
      p.weights_g = params.value("weights_g", p.weights_g);
      p.weights_gbar = params.value("weights_gbar", p.weights_gbar);
      return admission_chain(p);
    }
    throw ValidationError("unknown bundled chain '" + name + "'");
  }
  if (j.contains("file")) return load_chain_file(resolve(j.at("file").get<std::string>(), base));
  std::istringstream in(j.dump());
  return load_chain(in);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  ExperimentConfig c;
  try {
    c.kind = parse_kind(j.value("kind", std::string("trajectory")));
    if (j.contains("chain")) c.chain = chain_from_json(j.at("chain"), base);
    c.pse = j.value("pse", std::string());
    c.delta = j.value("delta", c.delta);
    c.monitor = parse_monitor_kind(j.value("monitor", std::string("freq")));
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      if (p.is_string() && p.get<std::string>() == "uniform") {
        if (!c.chain) throw ValidationError("a uniform prior needs a chain");
        c.prior = PriorTheta::uniform(c.chain->states.size());
      } else if (p.is_string()) {
        c.prior = PriorTheta::read_file(resolve(p.get<std::string>(), base));
      } else {
        c.prior = PriorTheta(p.get<std::vector<std::vector<std::int64_t>>>());
      }
    }
    c.sample_chain_from_prior = j.value("sample_chain_from_prior", false);
    c.steps = j.value("steps", c.steps);
    c.runs = j.value("runs", c.runs);
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      if (!j.contains("runs")) c.runs = c.seeds.size();
    }
    c.seed = j.value("seed", c.seed);
    c.stride = j.value("stride", c.stride);
    c.warmup = j.value("warmup", c.warmup);
    if (j.contains("output")) c.output = resolve(j.at("output").get<std::string>(), base);
    c.n_max = j.value("n_max", c.n_max);
    c.trace_lengths = j.value("trace_lengths", c.trace_lengths);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
  return from_json(j, path.parent_path());
}

// Metrics CSV -------------------------------------------------------------

void write_metrics_header(std::ostream& out) { out << "run,step,state,lo,hi,mean,width,update_ns\n"; }

void write_metrics_row(std::ostream& out, const MetricsRow& row, const StateSpace& states) {
  out << row.run << ',' << row.step << ',' << states.label(row.state) << ',';
  write_reading_fields(out, row.reading);
  out << ',' << row.update_ns << '\n';
}

void write_reading_fields(std::ostream& out, const Reading& reading) {
  if (reading.is_pending()) {
    out << "pending,pending,,";
    return;
  }
  const auto saved = out.precision(17);
  out << reading.interval.lo << ',' << reading.interval.hi << ',' << reading.mean << ','
      << reading.interval.width();
  out.precision(saved);
}

// Runs --------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kChunk = 256;
constexpr std::size_t kQueueChunks = 64;

struct RunContext {
  const ExperimentConfig& config;
  Pse phi;
};

// Feeds one run's monitor. `threaded` moves simulation to a producer thread
// connected by a bounded FIFO of state chunks.
template <class OnStep>
Reading drive_run(const RunContext& ctx, std::uint64_t r, const MarkovChain& chain, bool threaded,
                  OnStep&& on_step) {
  const auto& cfg = ctx.config;
  const std::uint64_t seed = cfg.run_seed(r);
  auto monitor = make_monitor(cfg.monitor, cfg.chain->states, ctx.phi, cfg.delta, cfg.prior, seed, chain.initial());
  Simulator sim(chain, seed);

  auto consume = [&](std::uint64_t step, StateId s) {
    const auto t0 = Clock::now();
    Reading reading = monitor->next(s);
    const auto t1 = Clock::now();
    on_step(step, s, reading, std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  };

  if (!threaded) {
    for (std::uint64_t t = 1; t <= cfg.steps; ++t) consume(t, sim.step());
    return monitor->reading();
  }

  BoundedQueue<std::vector<StateId>> queue(kQueueChunks);
  std::thread producer([&] {
    std::vector<StateId> chunk;
    chunk.reserve(kChunk);
    for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
      chunk.push_back(sim.step());
      if (chunk.size() == kChunk) {
        queue.push(std::move(chunk));
        chunk = {};
        chunk.reserve(kChunk);
      }
    }
    if (!chunk.empty()) queue.push(std::move(chunk));
    queue.close();
  });
  std::uint64_t step = 0;
  while (auto chunk = queue.pop())
    for (StateId s : *chunk) consume(++step, s);
  producer.join();
  return monitor->reading();
}

std::vector<MetricsRow> trajectory_rows(const RunContext& ctx, std::uint64_t r, bool threaded) {
  std::vector<MetricsRow> rows;
  const auto& cfg = ctx.config;
  drive_run(ctx, r, cfg.chain->chain, threaded,
            [&](std::uint64_t step, StateId s, const Reading& reading, std::int64_t ns) {
              if (step % cfg.stride == 0) rows.push_back({r, step, s, reading, ns});
            });
  return rows;
}

std::vector<MetricsRow> flatten(std::vector<std::vector<MetricsRow>>& per_run) {
  std::vector<MetricsRow> out;
  for (auto& rows : per_run) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

// Outcome of one coverage run: 1 covered, 0 missed, -1 pending.
int coverage_run(const RunContext& ctx, std::uint64_t r) {
  const auto& cfg = ctx.config;
  if (!cfg.sample_chain_from_prior) {
    const double truth = ground_truth(cfg.chain->chain, ctx.phi);
    const Reading final = drive_run(ctx, r, cfg.chain->chain, false, [](auto&&...) {});
    if (final.is_pending()) return -1;
    return final.interval.contains(truth) ? 1 : 0;
  }
  Rng rng(derive_seed(cfg.run_seed(r), 0x7072696f72ULL));
  const PriorTheta theta = cfg.prior ? *cfg.prior : PriorTheta::uniform(cfg.chain->states.size());
  MarkovChain chain(sample_prior_matrix(theta, rng), cfg.chain->chain.initial());
  const double truth = ground_truth(chain, ctx.phi);
  const Reading final = drive_run(ctx, r, chain, false, [](auto&&...) {});
  if (final.is_pending()) return -1;
  return final.interval.contains(truth) ? 1 : 0;
}

CoverageResult summarize(const std::vector<int>& outcomes) {
  CoverageResult c;
  c.runs = outcomes.size();
  for (int o : outcomes) {
    if (o == 1) ++c.covered;
    if (o < 0) ++c.pending;
  }
  c.fraction = static_cast<double>(c.covered) / static_cast<double>(c.runs);
  c.std_error = std::sqrt(c.fraction * (1.0 - c.fraction) / static_cast<double>(c.runs));
  return c;
}

void require_kind(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind == ExperimentKind::ratio) throw ValidationError("ratio experiments have no runs");
}

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config) {
  require_kind(config);
  const RunContext ctx{config, config.parsed_pse()};
  std::vector<std::vector<MetricsRow>> per_run(config.runs);
  const auto runs = static_cast<std::int64_t>(config.runs);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < runs; ++r) {
    try {
      per_run[r] = trajectory_rows(ctx, static_cast<std::uint64_t>(r), true);
    } catch (...) {
#pragma omp critical
      error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return flatten(per_run);
}

std::vector<MetricsRow> run_experiment_serial(const ExperimentConfig& config) {
  require_kind(config);
  const RunContext ctx{config, config.parsed_pse()};
  std::vector<std::vector<MetricsRow>> per_run(config.runs);
  for (std::uint64_t r = 0; r < config.runs; ++r) per_run[r] = trajectory_rows(ctx, r, false);
  return flatten(per_run);
}

CoverageResult coverage(const ExperimentConfig& config) {
  require_kind(config);
  const RunContext ctx{config, config.parsed_pse()};
  std::vector<int> outcomes(config.runs);
  const auto runs = static_cast<std::int64_t>(config.runs);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < runs; ++r) {
    try {
      outcomes[r] = coverage_run(ctx, static_cast<std::uint64_t>(r));
    } catch (...) {
#pragma omp critical
      error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(outcomes);
}

CoverageResult coverage_serial(const ExperimentConfig& config) {
  require_kind(config);
  const RunContext ctx{config, config.parsed_pse()};
  std::vector<int> outcomes(config.runs);
  for (std::uint64_t r = 0; r < config.runs; ++r) outcomes[r] = coverage_run(ctx, r);
  return summarize(outcomes);
}

TransitionMatrix sample_prior_matrix(const PriorTheta& theta, Rng& rng) {
  const std::size_t n = theta.size();
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (std::uint32_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::uint32_t j = 0; j < n; ++j) {
      std::gamma_distribution<double> gamma(static_cast<double>(theta(StateId{i}, StateId{j})), 1.0);
      rows[i][j] = gamma(rng);
      total += rows[i][j];
    }
    for (double& x : rows[i]) x /= total;
  }
  return TransitionMatrix(rows);
}

// Ratio study ---------------------------------------------------------------

std::vector<RatioRow> error_ratio_study(int n_max, double delta, const std::vector<std::uint64_t>& trace_lengths,
                                        std::uint64_t seed) {
  if (n_max < 1) throw ValidationError("n_max must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  const std::size_t states_n = static_cast<std::size_t>(std::max(n_max, 2));
  const StateSpace states(states_n);
  const MarkovChain chain = new_chain(
      std::vector<std::vector<double>>(states_n, std::vector<double>(states_n, 1.0 / states_n)), StateId{0});

  std::vector<RatioRow> out;
  for (int n = 1; n <= n_max; ++n) {
    std::optional<Pse> phi;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) {
      Pse v = Pse::variable(StateId{0}, StateId{i});
      phi = phi ? Pse::add(*phi, v) : v;
    }
    RatioRow row{n, std::sqrt(std::log(2.0 * n / delta) / std::log(2.0 / delta)), {}};
    for (std::uint64_t len : trace_lengths) {
      const Path path = simulate(chain, len, seed);
      DivFreeMonitor ours(states, *phi, delta, derive_seed(seed, kMonitorStream), chain.initial());
      BaselineMonitor base(states, *phi, delta, chain.initial());
      for (std::size_t t = 1; t < path.size(); ++t) {
        ours.next(path[t]);
        base.next(path[t]);
      }
      const auto a = ours.output();
      const auto b = base.output();
      if (is_pending(a) || is_pending(b)) throw ValidationError("trace too short for the ratio study");
      row.empirical.push_back(std::get<Estimate>(b).interval.width() / std::get<Estimate>(a).interval.width());
    }
    out.push_back(std::move(row));
  }
  return out;
}

// Latency -------------------------------------------------------------------

LatencyReport latency_report(const ExperimentConfig& config) {
  config.validate();
  if (config.warmup == 0) throw ValidationError("latency experiments need a nonzero warmup");
  const Pse phi = config.parsed_pse();
  const MarkovChain& chain = config.chain->chain;
  const std::uint64_t seed = config.run_seed(0);
  auto monitor = make_monitor(config.monitor, config.chain->states, phi, config.delta, config.prior, seed,
                              chain.initial());
  Simulator sim(chain, seed);
  for (std::uint64_t t = 0; t < config.warmup; ++t) monitor->next(sim.step());

  std::vector<StateId> trace(config.steps);
  for (auto& s : trace) s = sim.step();
  LatencyReport report;
  double total = 0.0;
  for (StateId s : trace) {
    const auto t0 = Clock::now();
    monitor->next(s);
    const auto t1 = Clock::now();
    const double ns = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    total += ns;
    report.max_ns = std::max(report.max_ns, ns);
  }
  report.updates = config.steps;
  report.mean_ns = total / static_cast<double>(config.steps);
  report.registers = monitor->registers();
  return report;
}

}  // namespace fairmon
