#pragma once

// Frequentist monitors. The division-free monitor aggregates the per-visit
// Bernoulli outcomes of every variable into a single i.i.d. sequence W whose
// mean is phi(M), and reports a Hoeffding interval around the running mean of
// W. The general monitor splits phi into a + b / c and combines three
// division-free monitors at delta / 3 each.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fairmon/interval.hpp"
#include "fairmon/pse.hpp"
#include "fairmon/random.hpp"
#include "fairmon/state_space.hpp"

namespace fairmon {

enum class PendingReason {
  no_samples,                 // nothing aggregated yet
  denominator_contains_zero,  // interval of c straddles 0
  inactive,                   // Bayesian consistency condition not met yet
};

struct Pending {
  PendingReason reason = PendingReason::no_samples;
  bool operator==(const Pending&) const = default;
};

struct Estimate {
  Interval interval;
  double mean = 0.0;
  std::uint64_t samples = 0;
  bool operator==(const Estimate&) const = default;
};

using MonitorOutput = std::variant<Pending, Estimate>;

inline bool is_pending(const MonitorOutput& o) { return std::holds_alternative<Pending>(o); }

/// Hoeffding half-width (b - a) sqrt(ln(2/delta) / (2n)). Throws
/// ValidationError for n == 0.
double hoeffding_epsilon(std::uint64_t n, Interval range, double delta);
/// mean +/- hoeffding_epsilon(n, range, delta).
Interval hoeffding_interval(double mean, std::uint64_t n, Interval range, double delta);

/// Per-state reshuffle register x_i. Counts the successors seen after visits
/// to state i (irrelevant successors collapse into the dummy symbol top) and
/// materializes on demand a uniformly random draw, without replacement, from
/// the successors not consumed yet.
class ReshuffleBuffer {
 public:
  static constexpr int kTop = -1;

  ReshuffleBuffer() = default;
  /// `successors` are the j with v_ij in V_phi, ascending.
  ReshuffleBuffer(StateId state, std::vector<StateId> successors);

  StateId state() const noexcept { return state_; }
  const std::vector<StateId>& successors() const noexcept { return successors_; }

  /// Records one visit to i followed by `next`.
  void record(StateId next);

  std::uint64_t visits() const noexcept { return visits_; }                  // c_i
  std::uint64_t edge_count(std::size_t k) const { return edge_counts_[k]; }  // c_ij
  std::uint64_t slack() const;  // visits followed by an irrelevant state
  /// Visits recorded but not materialized yet.
  std::uint64_t residual() const noexcept { return visits_ - consumed_total_; }
  /// Materialized-so-far count of successor k (k == successors().size() is top).
  std::uint64_t consumed(std::size_t k) const { return consumed_[k]; }

  /// Appends `needed` symbols to x_i. Returns false, leaving x_i unchanged, if
  /// fewer than `needed` unconsumed visits exist.
  bool extract(std::size_t needed, Rng& rng);

  /// Successor index into successors() or kTop.
  int slot(std::size_t k) const { return x_[k]; }
  std::size_t materialized() const noexcept { return x_.size(); }
  std::size_t high_water() const noexcept { return high_water_; }
  void reset() { x_.clear(); }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  StateId state_;
  std::vector<StateId> successors_;
  std::uint64_t visits_ = 0;
  std::vector<std::uint64_t> edge_counts_;
  std::vector<std::uint64_t> consumed_;  // per successor, then top
  std::uint64_t consumed_total_ = 0;
  std::vector<int> x_;
  std::size_t high_water_ = 0;
};

/// Monitor for division-free PSEs.
///
/// Register inventory (see registers()):
///   c_i                  one per state in Dep(phi)
///   c_ij                 one per variable in V_phi
///   consumed counters    one per variable plus one top counter per Dep state
///   x_i slots            need_i per Dep state
///   t_ij^l               one per labeled variable occurrence
///   n_W, sum W, sigma    three scalars
/// which is at most 6 (n + 1) + 3 <= 9 (n + 1)^2 for a PSE of size n.
class DivFreeMonitor {
 public:
  /// Throws ValidationError if phi contains a division or delta is not in
  /// (0, 1), UnknownStateError if phi or `initial` is outside `states`.
  DivFreeMonitor(const StateSpace& states, const Pse& phi, double delta, std::uint64_t seed,
                 StateId initial);

  /// Observes the next state of the run.
  MonitorOutput next(StateId next_state);
  MonitorOutput output() const;

  const Pse& relabeled() const noexcept { return phi_; }
  Interval range() const noexcept { return range_; }
  double delta() const noexcept { return delta_; }
  std::uint64_t samples() const noexcept { return n_w_; }
  double sum() const noexcept { return sum_w_; }
  /// Last aggregated outcome w, if any.
  std::optional<double> last_outcome() const noexcept { return last_w_; }

  /// Visits of state i consumed per W sample (0 if i is not in Dep).
  std::size_t need(StateId i) const;
  /// max_i need_i.
  std::size_t visits_per_sample() const noexcept { return visits_per_sample_; }

  const std::vector<ReshuffleBuffer>& buffers() const noexcept { return buffers_; }
  std::size_t registers() const;

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  struct Op {
    Pse::Kind kind;
    double value = 0.0;     // constant
    int buffer = -1;        // variable: index into buffers_
    int successor = -1;     // variable: index into buffer successors
    std::size_t slot = 0;   // variable: t_ij^l, offset within the block
    int lhs = -1, rhs = -1;
  };

  int compile(const Pse& node, std::vector<std::size_t>& base, std::vector<std::size_t>& need);
  bool try_sample();

  StateSpace states_;
  Pse phi_;
  Interval range_;
  double delta_;
  Rng rng_;
  StateId current_;
  std::vector<int> buffer_of_state_;  // -1 if not in Dep
  std::vector<ReshuffleBuffer> buffers_;
  std::vector<std::size_t> need_;     // per buffer
  std::size_t visits_per_sample_ = 0;
  std::vector<Op> program_;           // post-order, root last
  std::vector<double> scratch_;
  std::size_t labeled_vars_ = 0;
  std::uint64_t n_w_ = 0;
  double sum_w_ = 0.0;
  std::optional<double> last_w_;
};

/// Monitor for arbitrary PSEs: a + b / c with three division-free monitors at
/// delta / 3 each, combined by interval arithmetic. Division-free input runs a
/// single monitor on the original tree at the full delta.
class FrequentistMonitor {
 public:
  FrequentistMonitor(const StateSpace& states, const Pse& phi, double delta, std::uint64_t seed,
                     StateId initial);

  MonitorOutput next(StateId next_state);
  MonitorOutput output() const;

  bool decomposed() const noexcept { return parts_.size() == 3; }
  const std::vector<DivFreeMonitor>& parts() const noexcept { return parts_; }
  std::size_t registers() const;

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  std::vector<DivFreeMonitor> parts_;
};

/// a + b / c by interval arithmetic; Pending when c straddles zero.
MonitorOutput combine_quotient(const Estimate& a, const Estimate& b, const Estimate& c);

/// Per-variable comparison baseline: every variable occurrence gets its own
/// Hoeffding interval c_ij / c_i +/- sqrt(ln(2k/delta) / (2 c_i)) at delta / k,
/// and the intervals are composed along the tree.
class BaselineMonitor {
 public:
  BaselineMonitor(const StateSpace& states, const Pse& phi, double delta, StateId initial);

  MonitorOutput next(StateId next_state);
  MonitorOutput output() const;

  std::size_t occurrences() const noexcept { return occurrences_; }
  std::size_t registers() const;

 private:
  struct Eval {
    Interval interval;
    double mean;
  };
  std::optional<Eval> evaluate(const Pse& node) const;

  Pse phi_;
  double delta_;
  std::size_t occurrences_ = 0;
  StateId current_;
  std::size_t n_;
  std::vector<std::uint64_t> visits_;       // per state (only Dep used)
  std::vector<std::uint64_t> edge_counts_;  // dense n x n, only V_phi used
  std::vector<char> tracked_state_;
  std::vector<char> tracked_edge_;
};

/// Minimum visits to every Dep state after which the division-free monitor's
/// half-width is at most `epsilon`: the Hoeffding sample count times the
/// visits consumed per sample. Throws ValidationError for epsilon <= 0 or a
/// PSE with division.
std::uint64_t required_visits(const Pse& phi, double epsilon, double delta);

}  // namespace fairmon
