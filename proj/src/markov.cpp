#include "fairmon/markov.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fairmon/errors.hpp"

namespace fairmon {

TransitionMatrix::TransitionMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()) {
  if (n_ == 0) throw ValidationError("transition matrix is empty");
  p_.reserve(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (rows[i].size() != n_)
      throw ValidationError("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                            " entries, expected " + std::to_string(n_));
    double sum = 0.0;
    for (double v : rows[i]) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("row " + std::to_string(i + 1) + " has an entry outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("row " + std::to_string(i + 1) + " sums to " + std::to_string(sum));
    for (double v : rows[i]) p_.push_back(v / sum);
  }
}

MarkovChain::MarkovChain(TransitionMatrix matrix, StateId initial)
    : matrix_(std::move(matrix)), initial_(initial) {
  if (initial_.index >= matrix_.size()) throw UnknownStateError("initial state outside the chain");
}

MarkovChain new_chain(const std::vector<std::vector<double>>& entries, StateId initial) {
  return MarkovChain(TransitionMatrix(entries), initial);
}

Simulator::Simulator(const MarkovChain& chain, std::uint64_t seed)
    : chain_(&chain), rng_(seed), current_(chain.initial()) {}

StateId Simulator::step() {
  const auto row = chain_->matrix().row(current_);
  const double u = uniform01(rng_);
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    last = j;
    cum += row[j];
    if (u < cum) {
      current_ = StateId{static_cast<std::uint32_t>(j)};
      return current_;
    }
  }
  // u fell into the rounding gap above the last cumulative sum
  current_ = StateId{static_cast<std::uint32_t>(last)};
  return current_;
}

Path simulate(const MarkovChain& chain, std::uint64_t steps, std::uint64_t seed) {
  Simulator sim(chain, seed);
  Path path;
  path.reserve(steps + 1);
  path.push_back(sim.current());
  for (std::uint64_t t = 0; t < steps; ++t) path.push_back(sim.step());
  return path;
}

double ground_truth(const MarkovChain& chain, const Pse& phi) { return evaluate(phi, chain.matrix()); }

namespace {

StateId json_state(const nlohmann::json& j, const StateSpace& states) {
  if (j.is_string()) return states.resolve(j.get<std::string>());
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto k = j.get<std::int64_t>();
    if (k < 1 || static_cast<std::size_t>(k) > states.size())
      throw UnknownStateError("state index " + std::to_string(k) + " out of range");
    return StateId{static_cast<std::uint32_t>(k - 1)};
  }
  throw ValidationError("state must be a name or a one-based index");
}

}  // namespace

ChainSpec load_chain(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("chain config: ") + e.what());
  }
  try {
    auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    StateSpace states = j.contains("names")
                            ? StateSpace(j.at("names").get<std::vector<std::string>>())
                            : StateSpace(j.value("states", rows.size()));
    if (j.contains("states") && j.at("states").get<std::size_t>() != states.size())
      throw ValidationError("chain config: 'states' does not match the number of names");
    if (rows.size() != states.size())
      throw ValidationError("chain config: expected " + std::to_string(states.size()) + " rows");
    StateId initial = j.contains("initial") ? json_state(j.at("initial"), states) : StateId{0};
    MarkovChain chain(TransitionMatrix(rows), initial);
    return {std::move(states), std::move(chain)};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("chain config: ") + e.what());
  }
}

ChainSpec load_chain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open chain file '" + path + "'");
  return load_chain(in);
}

std::string chain_to_json(const ChainSpec& spec) {
  const auto& m = spec.chain.matrix();
  nlohmann::json j;
  j["states"] = m.size();
  if (spec.states.has_names()) {
    j["names"] = spec.states.names();
    j["initial"] = spec.states.label(spec.chain.initial());
  } else {
    j["initial"] = spec.chain.initial().index + 1;
  }
  std::vector<std::vector<double>> rows(m.size(), std::vector<double>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t k = 0; k < m.size(); ++k) rows[i][k] = m.at(i, k);
  j["rows"] = rows;
  return j.dump(2);
}

void write_path(std::ostream& out, const Path& path, const StateSpace& states) {
  for (StateId s : path) out << states.label(s) << '\n';
}

Path read_path(std::istream& in, const StateSpace& states) {
  Path path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    while (ls >> token) {
      auto s = states.find(token);
      if (!s)
        throw UnknownStateError("unknown state '" + token + "' on line " + std::to_string(line_no));
      path.push_back(*s);
    }
  }
  return path;
}

ChainSpec lending_chain(const LendingParams& p) {
  enum { init, g, gbar, gy, gbary, ybar, z, zbar, n };
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  rows[init][g] = p.p_group_g;
  rows[init][gbar] = 1.0 - p.p_group_g;
  rows[g][gy] = p.grant_g;
  rows[g][ybar] = 1.0 - p.grant_g;
  rows[gbar][gbary] = p.grant_gbar;
  rows[gbar][ybar] = 1.0 - p.grant_gbar;
  rows[gy][z] = p.repay_g;
  rows[gy][zbar] = 1.0 - p.repay_g;
  rows[gbary][z] = p.repay_gbar;
  rows[gbary][zbar] = 1.0 - p.repay_gbar;
  rows[ybar][init] = 1.0;
  rows[z][init] = 1.0;
  rows[zbar][init] = 1.0;
  StateSpace states({"init", "g", "gbar", "gy", "gbary", "ybar", "z", "zbar"});
  return {std::move(states), MarkovChain(TransitionMatrix(rows), StateId{init})};
}

ChainSpec admission_chain(const AdmissionParams& p) {
  if (p.levels < 1) throw ValidationError("admission chain needs at least one level");
  const std::size_t levels = static_cast<std::size_t>(p.levels) + 1;  // 0..N
  auto weights = [&](const std::vector<double>& given, bool descending) {
    std::vector<double> w = given;
    if (w.empty())
      for (std::size_t k = 0; k < levels; ++k) w.push_back(descending ? double(levels - k) : 1.0);
    if (w.size() != levels) throw ValidationError("admission weights need one entry per level");
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) throw ValidationError("admission weights must have a positive sum");
    for (double& x : w) x /= total;
    return w;
  };
  const auto wg = weights(p.weights_g, true);
  const auto wgbar = weights(p.weights_gbar, false);

  const std::size_t n = 3 + levels;
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  rows[0][1] = p.p_group_g;
  rows[0][2] = 1.0 - p.p_group_g;
  for (std::size_t k = 0; k < levels; ++k) {
    rows[1][3 + k] = wg[k];
    rows[2][3 + k] = wgbar[k];
    rows[3 + k][0] = 1.0;
  }
  std::vector<std::string> names{"init", "g", "gbar"};
  for (std::size_t k = 0; k < levels; ++k) names.push_back(std::to_string(k));
  return {StateSpace(std::move(names)), MarkovChain(TransitionMatrix(rows), StateId{0})};
}

std::string social_burden_text(int levels) {
  std::string out;
  for (int k = 1; k <= levels; ++k) {
    if (k > 1) out += " + ";
    out += std::to_string(k) + "*p(g," + std::to_string(k) + ")";
  }
  return out;
}

}  // namespace fairmon
