#pragma once

// Bayesian monitors under a matrix-beta prior with integer parameter theta >= 1.
//
// For a monomial xi with exponent matrix d, the posterior expectation given
// smoothed counts cbar_ij = c_ij + theta_ij and cbar_i = c_i + sum_j theta_ij is
//
//   H = prod_{d_ij > 0} rising(cbar_ij, d_ij)  / prod_{d_i > 0} rising(cbar_i, d_i)
//     * prod_{d_i < 0} falling(cbar_i - 1, |d_i|) / prod_{d_ij < 0} falling(cbar_ij - 1, |d_ij|)
//
// with rising(x, k) = x (x+1) ... (x+k-1) and falling(x, k) = x (x-1) ... (x-k+1).
// After a transition (a, b) with counters already incremented,
//
//   H' = H * (cbar_ab - 1 + d_ab) / (cbar_ab - 1) * (cbar_a - 1) / (cbar_a - 1 + d_a).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fairmon/frequentist.hpp"
#include "fairmon/polynomial.hpp"
#include "fairmon/state_space.hpp"

namespace fairmon {

/// Integer matrix-beta parameter, theta >= 1 elementwise.
class PriorTheta {
 public:
  PriorTheta() = default;
  /// Throws ValidationError on a non-square matrix or an entry < 1.
  explicit PriorTheta(std::vector<std::vector<std::int64_t>> rows);
  static PriorTheta uniform(std::size_t n);

  /// Whitespace-separated N x N integers, one row per line.
  static PriorTheta read(std::istream& in);
  static PriorTheta read_file(const std::string& path);

  std::size_t size() const noexcept { return n_; }
  std::int64_t operator()(StateId i, StateId j) const { return theta_[i.index * n_ + j.index]; }
  std::int64_t row_sum(StateId i) const { return row_sum_[i.index]; }

 private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> theta_;
  std::vector<std::int64_t> row_sum_;
};

/// Dense smoothed counters cbar for a full N x N chain.
struct SmoothedCounts {
  std::size_t n = 0;
  std::vector<std::int64_t> edge;  // cbar_ij, row-major
  std::vector<std::int64_t> row;   // cbar_i

  explicit SmoothedCounts(const PriorTheta& theta);
  void record(StateId from, StateId to);
  std::int64_t operator()(StateId i, StateId j) const { return edge[i.index * n + j.index]; }
  std::int64_t row_total(StateId i) const { return row[i.index]; }
};

/// Consistency condition for one monomial: cbar_ij + d_ij > 0 for all (i, j).
bool consistent(const SmoothedCounts& counts, const Monomial& xi);

/// H for the monomial (coefficient ignored). Throws ConsistencyError.
double h_initial(const SmoothedCounts& counts, const Monomial& xi);

/// One recurrence step; `counts` already include the transition (from, to).
double h_update(double h, StateId from, StateId to, const SmoothedCounts& counts,
                const Monomial& xi);

struct BayesEstimate {
  Interval interval;
  double mean = 0.0;
  double variance = 0.0;
  bool operator==(const BayesEstimate&) const = default;
};

using BayesOutput = std::variant<Pending, BayesEstimate>;

/// Posterior expectation of a polynomial, updated in O(p) per transition.
class ExpectationMonitor {
 public:
  /// Batch recomputation period that caps floating-point drift.
  static constexpr std::uint64_t kRefreshPeriod = std::uint64_t{1} << 13;

  ExpectationMonitor(const StateSpace& states, const Polynomial& phi, const PriorTheta& theta,
                     StateId initial);

  /// Empty until the consistency condition holds for V_phi.
  std::optional<double> next(StateId next_state);
  std::optional<double> expectation() const noexcept { return expectation_; }

  bool active() const noexcept { return active_; }
  const Polynomial& polynomial() const noexcept { return phi_; }
  const std::vector<double>& h() const noexcept { return h_; }

  /// cbar_ij for a tracked variable, cbar_i for a tracked row.
  std::int64_t edge_counter(Edge e) const;
  std::int64_t row_counter(StateId i) const;

  /// h^l recomputed from the current counters.
  double recompute(std::size_t l) const;

  /// Mutable counters: cbar_ij per variable, cbar_i per Dep row, h^l per monomial.
  std::size_t counters() const noexcept {
    return edge_slots_ + row_slots_ + phi_.term_count();
  }
  std::size_t tracked_edges() const noexcept { return edge_slots_; }
  std::size_t tracked_rows() const noexcept { return row_slots_; }

  /// Arithmetic operations spent by the last next() call.
  std::uint64_t last_step_operations() const noexcept { return last_ops_; }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  void activate();
  void refresh();

  std::size_t n_;
  Polynomial phi_;
  StateId current_;
  std::vector<int> edge_slot_;  // dense n x n -> slot or -1
  std::vector<int> row_slot_;   // n -> slot or -1
  std::size_t edge_slots_ = 0;
  std::size_t row_slots_ = 0;
  std::vector<std::int64_t> edge_count_;  // cbar per edge slot
  std::vector<std::int64_t> row_count_;   // cbar per row slot
  std::vector<int> min_exponent_;         // m_ij per edge slot
  std::vector<int> d_edge_;               // p x edge_slots
  std::vector<int> d_row_;                // p x row_slots
  std::vector<double> h_;
  bool active_ = false;
  std::optional<double> expectation_;
  std::uint64_t steps_since_refresh_ = 0;
  std::uint64_t last_ops_ = 0;
};

/// Chebyshev interval E +/- sqrt(S^2 / delta) from the posterior expectations
/// of phi and phi^2.
class BayesianMonitor {
 public:
  BayesianMonitor(const StateSpace& states, const Pse& phi, const PriorTheta& theta, double delta,
                  StateId initial);

  BayesOutput next(StateId next_state);
  BayesOutput output() const noexcept { return output_; }

  const ExpectationMonitor& first_moment() const noexcept { return exp_; }
  const ExpectationMonitor& second_moment() const noexcept { return exp2_; }
  std::size_t counters() const noexcept { return exp_.counters() + exp2_.counters(); }
  std::uint64_t last_step_operations() const noexcept {
    return exp_.last_step_operations() + exp2_.last_step_operations();
  }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  double delta_;
  ExpectationMonitor exp_;
  ExpectationMonitor exp2_;
  BayesOutput output_ = Pending{PendingReason::inactive};
};

/// E +/- sqrt(max(0, E2 - E^2) / delta).
BayesEstimate chebyshev_interval(double e, double e2, double delta);

}  // namespace fairmon
