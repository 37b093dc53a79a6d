// fairmon: evaluate PSEs, simulate chains, monitor streamed traces and run
// experiments.
//
// Exit codes: 0 success, 1 I/O failure, 2 parse or validation error,
// 3 zero denominator, 4 unknown state token.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fairmon/errors.hpp"
#include "fairmon/harness.hpp"
#include "fairmon/parser.hpp"
#include "fairmon/polynomial.hpp"

#ifndef FAIRMON_VERSION
#define FAIRMON_VERSION "0.0.0"
#endif

using namespace fairmon;

namespace {

enum Exit { kOk = 0, kIo = 1, kInvalid = 2, kZeroDenominator = 3, kUnknownState = 4 };


ChainSpec chain_arg(const std::string& arg) {
  if (arg == "lending") return lending_chain();
  if (arg == "admission") return admission_chain();
  return load_chain_file(arg);
}

// A spec argument naming an existing file is read from it.
std::string spec_text(const std::string& arg) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(arg, ec)) return arg;
  std::ifstream in(arg);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

// Unknown states inside the spec are input errors (exit 2); exit 4 is
// reserved for trace tokens.
Pse parse_spec(const std::string& text, const StateSpace& states) {
  try {
    return parse_pse(text, states);
  } catch (const UnknownStateError& e) {
    throw ValidationError(e.what());
  }
}

// eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string chain, spec;
};

int run_eval(const EvalArgs& a) {
  const ChainSpec spec = chain_arg(a.chain);
  const Pse phi = parse_spec(spec_text(a.spec), spec.states);
  std::cout << std::setprecision(12) << evaluate(phi, spec.chain.matrix()) << '\n';
  return kOk;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  std::string chain;
  std::uint64_t steps = 0;
  std::uint64_t seed = 1;
};

int run_simulate(const SimulateArgs& a) {
  const ChainSpec spec = chain_arg(a.chain);
  Simulator sim(spec.chain, a.seed);
  std::ostream& out = std::cout;
  out << spec.states.label(sim.current()) << '\n';
  for (std::uint64_t t = 0; t < a.steps; ++t) out << spec.states.label(sim.step()) << '\n';
  out.flush();
  return kOk;
}

// monitor --------------------------------------------------------------------

struct MonitorArgs {
  std::string spec;
  double delta = 0.05;
  std::string mode = "freq";
  std::string prior;
  std::uint64_t seed = 1;
  std::string states;
  std::string chain;
  std::uint64_t emit_every = 1;
  std::string snapshot_out;
  std::string resume;
};

constexpr int kSnapshotVersion = 1;

int run_monitor(const MonitorArgs& a) {
  if (a.states.empty() == a.chain.empty()) throw ValidationError("give exactly one of --states and --chain");
  if (a.emit_every == 0) throw ValidationError("--emit-every must be positive");
  const StateSpace states =
      a.states.empty() ? chain_arg(a.chain).states : StateSpace::from_declaration_file(a.states);
  const std::string text = spec_text(a.spec);
  const Pse phi = parse_spec(text, states);
  const MonitorKind kind = parse_monitor_kind(a.mode);
  std::optional<PriorTheta> prior;
  if (kind == MonitorKind::bayes) {
    if (a.prior.empty()) {
      std::cerr << "fairmon: no --prior given, assuming the uniform prior (all ones)\n";
      prior = PriorTheta::uniform(states.size());
    } else {
      prior = PriorTheta::read_file(a.prior);
      if (prior->size() != states.size())
        throw ValidationError("prior is " + std::to_string(prior->size()) + "x" + std::to_string(prior->size()) +
                              " but " + std::to_string(states.size()) + " states are declared");
    }
  } else if (!a.prior.empty()) {
    throw ValidationError("--prior applies to --mode bayes only");
  }

  std::istream& in = std::cin;
  std::string line;
  std::size_t line_no = 0;
  std::istringstream ls;
  auto next_token = [&](std::string& token) {
    while (true) {
      if (ls >> token) return true;
      if (!std::getline(in, line)) return false;
      ++line_no;
      ls.clear();
      ls.str(line);
    }
  };
  auto resolve = [&](const std::string& token) {
    auto s = states.find(token);
    if (!s) throw UnknownStateError("unknown state '" + token + "' on line " + std::to_string(line_no));
    return *s;
  };

  std::unique_ptr<StreamMonitor> monitor;
  std::uint64_t step = 0;
  StateId current;
  if (!a.resume.empty()) {
    std::ifstream rs(a.resume);
    if (!rs) throw IoError("cannot open snapshot '" + a.resume + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(rs);
      if (j.at("version").get<int>() != kSnapshotVersion) throw ValidationError("unsupported snapshot version");
      if (j.at("mode").get<std::string>() != a.mode || j.at("spec").get<std::string>() != text ||
          j.at("delta").get<double>() != a.delta)
        throw ValidationError("snapshot was taken with a different spec, mode or delta");
      step = j.at("step").get<std::uint64_t>();
      current = states.resolve(j.at("state").get<std::string>());
      monitor = make_monitor(kind, states, phi, a.delta, prior, a.seed, current);
      monitor->restore(j.at("monitor"));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("snapshot: ") + e.what());
    }
  } else {
    std::string token;
    if (!next_token(token)) throw ValidationError("empty trace: expected an initial state");
    current = resolve(token);
    monitor = make_monitor(kind, states, phi, a.delta, prior, a.seed, current);
  }

  std::ostream& out = std::cout;
  out << "step,state,lo,hi,mean,width\n";
  std::string token;
  while (next_token(token)) {
    current = resolve(token);
    const Reading r = monitor->next(current);
    if (++step % a.emit_every != 0) continue;
    out << step << ',' << states.label(current) << ',';
    write_reading_fields(out, r);
    out << '\n' << std::flush;
  }
  out.flush();

  if (!a.snapshot_out.empty()) {
    nlohmann::json j{{"version", kSnapshotVersion},
                     {"mode", a.mode},
                     {"spec", text},
                     {"delta", a.delta},
                     {"step", step},
                     {"state", states.label(current)},
                     {"monitor", monitor->snapshot()}};
    open_output(a.snapshot_out) << j.dump(2) << '\n';
  }
  return kOk;
}

// experiment -----------------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::string output;
  bool serial = false;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  const ExperimentConfig cfg = ExperimentConfig::load(a.config);
  const std::string path = a.output.empty() ? cfg.output : a.output;
  std::ofstream file;
  if (!path.empty()) file = open_output(path);
  std::ostream& out = path.empty() ? std::cout : file;
  out << std::setprecision(12);

  switch (cfg.kind) {
    case ExperimentKind::trajectory: {
      const auto rows = a.serial ? run_experiment_serial(cfg) : run_experiment(cfg);
      write_metrics_header(out);
      for (const auto& row : rows) write_metrics_row(out, row, cfg.chain->states);
      break;
    }
    case ExperimentKind::coverage: {
      const auto c = a.serial ? coverage_serial(cfg) : coverage(cfg);
      out << "runs,covered,pending,fraction,std_error\n"
          << c.runs << ',' << c.covered << ',' << c.pending << ',' << c.fraction << ',' << c.std_error << '\n';
      break;
    }
    case ExperimentKind::ratio: {
      const auto rows = error_ratio_study(cfg.n_max, cfg.delta, cfg.trace_lengths, cfg.seed);
      out << "n,analytic";
      for (auto len : cfg.trace_lengths) out << ",empirical_" << len;
      out << '\n';
      for (const auto& row : rows) {
        out << row.n << ',' << row.analytic;
        for (double e : row.empirical) out << ',' << e;
        out << '\n';
      }
      break;
    }
    case ExperimentKind::latency: {
      const auto r = latency_report(cfg);
      out << "monitor,size,mean_ns,max_ns,registers,updates\n"
          << monitor_kind_name(cfg.monitor) << ',' << size(cfg.parsed_pse()) << ',' << r.mean_ns << ','
          << r.max_ns << ',' << r.registers << ',' << r.updates << '\n';
      break;
    }
  }
  out.flush();
  if (!out) throw IoError("write failed");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monitor probabilistic specification expressions over Markov chains", "fairmon"};
  app.set_version_flag("--version", FAIRMON_VERSION);
  app.require_subcommand(1);

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a PSE on a known chain");
  c_eval->add_option("--chain", eval.chain, "Chain config (JSON) or 'lending' / 'admission'")->required();
  c_eval->add_option("--spec", eval.spec, "PSE text or a file containing it")->required();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Print a simulated trace, one state per line");
  c_sim->add_option("--chain", sim.chain, "Chain config (JSON) or 'lending' / 'admission'")->required();
  c_sim->add_option("--steps", sim.steps, "Number of transitions")->required();
  c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();

  MonitorArgs mon;
  auto* c_mon = app.add_subcommand("monitor", "Monitor a trace read from standard input");
  c_mon->add_option("--spec", mon.spec, "PSE text or a file containing it")->required();
  c_mon->add_option("--delta", mon.delta, "Error probability")->capture_default_str();
  c_mon->add_option("--mode", mon.mode, "freq, freq-baseline or bayes")
      ->capture_default_str()
      ->check(CLI::IsMember({"freq", "freq-baseline", "bayes"}));
  c_mon->add_option("--prior", mon.prior, "Prior matrix file (bayes), whitespace-separated integers >= 1");
  c_mon->add_option("--seed", mon.seed, "Random seed")->capture_default_str();
  c_mon->add_option("--states", mon.states, "State declaration file ('<index> <name>' per line)");
  c_mon->add_option("--chain", mon.chain, "Take the state space from a chain config instead");
  c_mon->add_option("--emit-every", mon.emit_every, "Emit every K-th step")->capture_default_str();
  c_mon->add_option("--snapshot-out", mon.snapshot_out, "Write the monitor state to FILE at end of input");
  c_mon->add_option("--resume", mon.resume, "Continue from a snapshot; input then holds successor states only");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Run an experiment config");
  c_exp->add_option("--config", exp.config, "Experiment config (JSON)")->required();
  c_exp->add_option("--output", exp.output, "Output CSV (overrides the config)");
  c_exp->add_flag("--serial", exp.serial, "Use the serial reference implementation");

  for (auto* sub : {c_eval, c_sim, c_mon, c_exp}) sub->set_version_flag("--version", FAIRMON_VERSION);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*c_eval) return run_eval(eval);
    if (*c_sim) return run_simulate(sim);
    if (*c_mon) return run_monitor(mon);
    if (*c_exp) return run_experiment_cmd(exp);
  } catch (const UnknownStateError& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kUnknownState;
  } catch (const ZeroDenominatorError& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kZeroDenominator;
  } catch (const ParseError& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kInvalid;
  } catch (const ConsistencyError& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "fairmon: " << e.what() << '\n';
    return kIo;
  }
  return kInvalid;
}
