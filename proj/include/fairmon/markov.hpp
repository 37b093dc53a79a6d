#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fairmon/pse.hpp"
#include "fairmon/random.hpp"
#include "fairmon/state_space.hpp"

namespace fairmon {

/// Row-stochastic n x n matrix, stored row-major.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;

  /// Validates entries in [0, 1] and row sums within 1e-9 of 1; such rows are
  /// renormalized. Throws ValidationError otherwise.
  explicit TransitionMatrix(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return n_; }
  double operator()(StateId i, StateId j) const { return p_[i.index * n_ + j.index]; }
  double at(std::size_t i, std::size_t j) const { return p_[i * n_ + j]; }
  std::span<const double> row(StateId i) const {
    return {p_.data() + i.index * n_, n_};
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> p_;
};

using Path = std::vector<StateId>;

/// Markov chain with a fixed initial state.
class MarkovChain {
 public:
  MarkovChain(TransitionMatrix matrix, StateId initial);

  const TransitionMatrix& matrix() const noexcept { return matrix_; }
  StateId initial() const noexcept { return initial_; }
  std::size_t size() const noexcept { return matrix_.size(); }

 private:
  TransitionMatrix matrix_;
  StateId initial_;
};

MarkovChain new_chain(const std::vector<std::vector<double>>& entries, StateId initial);

/// Seeded single-owner simulation cursor. Successors are drawn by inverse CDF
/// over the row in ascending state order.
class Simulator {
 public:
  Simulator(const MarkovChain& chain, std::uint64_t seed);

  StateId current() const noexcept { return current_; }
  StateId step();

 private:
  const MarkovChain* chain_;
  Rng rng_;
  StateId current_;
};

/// Path of length steps + 1 starting at the initial state.
Path simulate(const MarkovChain& chain, std::uint64_t steps, std::uint64_t seed);

/// phi evaluated on the generator's actual matrix.
double ground_truth(const MarkovChain& chain, const Pse& phi);

/// A chain together with its (possibly named) state space.
struct ChainSpec {
  StateSpace states;
  MarkovChain chain;
};

/// JSON chain config: {"states": N, "initial": <name|index>, "rows": [[...]],
/// "names": [...]} with "names" optional and indices one-based.
ChainSpec load_chain(std::istream& in);
ChainSpec load_chain_file(const std::string& path);
std::string chain_to_json(const ChainSpec& spec);

/// Trace files: one state token per line.
void write_path(std::ostream& out, const Path& path, const StateSpace& states);
Path read_path(std::istream& in, const StateSpace& states);

/// Reconstructed lending chain: states init, g, gbar, gy, gbary, ybar, z, zbar.
/// The numbers are harness defaults, not published values.
struct LendingParams {
  double p_group_g = 0.5;   // init -> g
  double grant_g = 0.7;     // g -> gy
  double grant_gbar = 0.4;  // gbar -> gbary
  double repay_g = 0.8;     // gy -> z
  double repay_gbar = 0.6;  // gbary -> z
};
ChainSpec lending_chain(const LendingParams& params = {});

/// Reconstructed college-admission chain: states init, g, gbar, 0..N.
/// g invests k with probability proportional to weights_g[k] (default N+1-k),
/// gbar uniformly.
struct AdmissionParams {
  int levels = 10;  // N
  double p_group_g = 0.5;
  std::vector<double> weights_g;
  std::vector<double> weights_gbar;
};
ChainSpec admission_chain(const AdmissionParams& params = {});

/// 1*p(g,1) + 2*p(g,2) + ... + N*p(g,N).
std::string social_burden_text(int levels);
inline constexpr const char* kDemographicParityText = "p(g,gy) - p(gbar,gbary)";

}  // namespace fairmon
