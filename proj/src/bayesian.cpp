#include "fairmon/bayesian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "fairmon/errors.hpp"

namespace fairmon {

namespace {

constexpr int kSnapshotVersion = 1;

// H for one monomial. `edge(e)` and `row(i)` return smoothed counters.
// Numerator and denominator factors are multiplied pairwise so that long
// products stay near 1 instead of overflowing.
template <class EdgeFn, class RowFn>
double posterior_moment(const Monomial& xi, EdgeFn edge, RowFn row) {
  std::vector<double> num, den;
  std::map<StateId, int> rows;
  for (auto& [e, d] : xi.exponents) {
    rows[e.from] += d;
    const double c = static_cast<double>(edge(e));
    if (c + d <= 0) throw ConsistencyError("posterior moment undefined for the current counts");
    if (d > 0)
      for (int k = 0; k < d; ++k) num.push_back(c + k);
    else
      for (int k = 0; k < -d; ++k) den.push_back(c - 1 - k);
  }
  for (auto& [i, d] : rows) {
    const double c = static_cast<double>(row(i));
    if (d > 0)
      for (int k = 0; k < d; ++k) den.push_back(c + k);
    else
      for (int k = 0; k < -d; ++k) num.push_back(c - 1 - k);
  }
  double h = 1.0;
  const std::size_t n = std::max(num.size(), den.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double a = k < num.size() ? num[k] : 1.0;
    const double b = k < den.size() ? den[k] : 1.0;
    h *= a / b;
  }
  return h;
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
}

}  // namespace

// PriorTheta -------------------------------------------------------------

PriorTheta::PriorTheta(std::vector<std::vector<std::int64_t>> rows) : n_(rows.size()) {
  if (n_ == 0) throw ValidationError("prior matrix is empty");
  row_sum_.assign(n_, 0);
  theta_.reserve(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (rows[i].size() != n_) throw ValidationError("prior matrix is not square");
    for (auto v : rows[i]) {
      if (v < 1) throw ValidationError("prior entries must be integers >= 1");
      theta_.push_back(v);
      row_sum_[i] += v;
    }
  }
}

PriorTheta PriorTheta::uniform(std::size_t n) {
  return PriorTheta(std::vector<std::vector<std::int64_t>>(n, std::vector<std::int64_t>(n, 1)));
}

PriorTheta PriorTheta::read(std::istream& in) {
  std::vector<std::vector<std::int64_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
      continue;
    std::istringstream ls(line);
    std::vector<std::int64_t> row;
    std::string token;
    while (ls >> token) {
      std::size_t used = 0;
      std::int64_t v = 0;
      try {
        v = std::stoll(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size())
        throw ValidationError("prior line " + std::to_string(line_no) + ": '" + token + "' is not an integer");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return PriorTheta(std::move(rows));
}

PriorTheta PriorTheta::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prior file '" + path + "'");
  return read(in);
}

// Free functions -----------------------------------------------------------

SmoothedCounts::SmoothedCounts(const PriorTheta& theta) : n(theta.size()), edge(n * n), row(n) {
  for (std::uint32_t i = 0; i < n; ++i) {
    row[i] = theta.row_sum(StateId{i});
    for (std::uint32_t j = 0; j < n; ++j) edge[i * n + j] = theta(StateId{i}, StateId{j});
  }
}

void SmoothedCounts::record(StateId from, StateId to) {
  ++edge[from.index * n + to.index];
  ++row[from.index];
}

bool consistent(const SmoothedCounts& counts, const Monomial& xi) {
  for (auto& [e, d] : xi.exponents)
    if (counts(e.from, e.to) + d <= 0) return false;
  return true;
}

double h_initial(const SmoothedCounts& counts, const Monomial& xi) {
  return posterior_moment(
      xi, [&](Edge e) { return counts(e.from, e.to); }, [&](StateId i) { return counts.row_total(i); });
}

double h_update(double h, StateId from, StateId to, const SmoothedCounts& counts, const Monomial& xi) {
  const int d_ab = xi.exponent(Edge{from, to});
  const int d_a = xi.row_exponent(from);
  const double c_ab = static_cast<double>(counts(from, to));
  const double c_a = static_cast<double>(counts.row_total(from));
  return h * (c_ab - 1 + d_ab) / (c_ab - 1) * (c_a - 1) / (c_a - 1 + d_a);
}

BayesEstimate chebyshev_interval(double e, double e2, double delta) {
  check_delta(delta);
  const double s2 = std::max(0.0, e2 - e * e);
  const double r = std::sqrt(s2 / delta);
  return {{e - r, e + r}, e, s2};
}

// ExpectationMonitor -------------------------------------------------------

ExpectationMonitor::ExpectationMonitor(const StateSpace& states, const Polynomial& phi,
                                       const PriorTheta& theta, StateId initial)
    : n_(states.size()), phi_(phi), current_(initial) {
  if (theta.size() != n_) throw ValidationError("prior size does not match the state space");
  if (!states.contains(initial)) throw UnknownStateError("initial state outside the state space");
  edge_slot_.assign(n_ * n_, -1);
  row_slot_.assign(n_, -1);
  for (const Edge& e : phi_.variables()) {
    if (!states.contains(e.from) || !states.contains(e.to))
      throw UnknownStateError("variable refers to a state outside the state space");
    edge_slot_[e.from.index * n_ + e.to.index] = static_cast<int>(edge_slots_++);
    edge_count_.push_back(theta(e.from, e.to));
    if (row_slot_[e.from.index] < 0) {
      row_slot_[e.from.index] = static_cast<int>(row_slots_++);
      row_count_.push_back(theta.row_sum(e.from));
    }
  }
  const std::size_t p = phi_.term_count();
  d_edge_.assign(p * edge_slots_, 0);
  d_row_.assign(p * row_slots_, 0);
  min_exponent_.assign(edge_slots_, 0);
  for (std::size_t l = 0; l < p; ++l) {
    for (auto& [e, d] : phi_.terms()[l].exponents) {
      const int s = edge_slot_[e.from.index * n_ + e.to.index];
      d_edge_[l * edge_slots_ + s] = d;
      d_row_[l * row_slots_ + row_slot_[e.from.index]] += d;
      min_exponent_[s] = std::min(min_exponent_[s], d);
    }
  }
  h_.assign(p, 0.0);
  activate();
}

std::int64_t ExpectationMonitor::edge_counter(Edge e) const {
  const int s = edge_slot_.at(e.from.index * n_ + e.to.index);
  if (s < 0) throw ValidationError("edge is not tracked");
  return edge_count_[s];
}

std::int64_t ExpectationMonitor::row_counter(StateId i) const {
  const int s = row_slot_.at(i.index);
  if (s < 0) throw ValidationError("row is not tracked");
  return row_count_[s];
}

double ExpectationMonitor::recompute(std::size_t l) const {
  return posterior_moment(
      phi_.terms().at(l), [&](Edge e) { return edge_counter(e); },
      [&](StateId i) { return row_counter(i); });
}

void ExpectationMonitor::activate() {
  for (std::size_t s = 0; s < edge_slots_; ++s)
    if (edge_count_[s] + min_exponent_[s] <= 0) return;
  active_ = true;
  refresh();
}

void ExpectationMonitor::refresh() {
  double e = 0.0;
  for (std::size_t l = 0; l < h_.size(); ++l) {
    h_[l] = recompute(l);
    e += phi_.terms()[l].coefficient * h_[l];
  }
  expectation_ = e;
  steps_since_refresh_ = 0;
}

std::optional<double> ExpectationMonitor::next(StateId next_state) {
  if (next_state.index >= n_) throw UnknownStateError("state outside the state space");
  const StateId a = current_;
  current_ = next_state;
  last_ops_ = 0;
  const int rs = row_slot_[a.index];
  if (rs < 0) return expectation_;

  const int es = edge_slot_[a.index * n_ + next_state.index];
  ++row_count_[rs];
  if (es >= 0) ++edge_count_[es];

  if (!active_) {
    activate();
    return expectation_;
  }
  if (++steps_since_refresh_ >= kRefreshPeriod) {
    refresh();
    return expectation_;
  }

  // Counted arithmetic: the two shifted counters, then per monomial at most
  // (x + d) / x and a multiply per touched factor plus the weighted sum.
  const double a1 = static_cast<double>(row_count_[rs]) - 1;
  const double ab1 = es >= 0 ? static_cast<double>(edge_count_[es]) - 1 : 0.0;
  std::uint64_t ops = 2;
  double e = 0.0;
  for (std::size_t l = 0; l < h_.size(); ++l) {
    const int d_a = d_row_[l * row_slots_ + rs];
    const int d_ab = es >= 0 ? d_edge_[l * edge_slots_ + es] : 0;
    if (d_ab != 0) h_[l] *= (ab1 + d_ab) / ab1, ops += 3;
    if (d_a != 0) h_[l] *= a1 / (a1 + d_a), ops += 3;
    e += phi_.terms()[l].coefficient * h_[l];
    ops += 2;
  }
  expectation_ = e;
  last_ops_ = ops;
  return expectation_;
}

nlohmann::json ExpectationMonitor::snapshot() const {
  nlohmann::json j{{"current", current_.index},
                   {"edge_counts", edge_count_},
                   {"row_counts", row_count_},
                   {"h", h_},
                   {"active", active_},
                   {"since_refresh", steps_since_refresh_}};
  j["expectation"] = expectation_ ? nlohmann::json(*expectation_) : nlohmann::json(nullptr);
  return j;
}

void ExpectationMonitor::restore(const nlohmann::json& j) {
  auto edges = j.at("edge_counts").get<std::vector<std::int64_t>>();
  auto rows = j.at("row_counts").get<std::vector<std::int64_t>>();
  auto h = j.at("h").get<std::vector<double>>();
  const StateId current{j.at("current").get<std::uint32_t>()};
  if (edges.size() != edge_count_.size() || rows.size() != row_count_.size() || h.size() != h_.size() ||
      current.index >= n_)
    throw ValidationError("snapshot: monitor shape mismatch");
  edge_count_ = std::move(edges);
  row_count_ = std::move(rows);
  h_ = std::move(h);
  current_ = current;
  active_ = j.at("active").get<bool>();
  steps_since_refresh_ = j.at("since_refresh").get<std::uint64_t>();
  expectation_ = j.at("expectation").is_null() ? std::nullopt
                                                : std::optional<double>(j.at("expectation").get<double>());
}

// BayesianMonitor ------------------------------------------------------------

BayesianMonitor::BayesianMonitor(const StateSpace& states, const Pse& phi, const PriorTheta& theta,
                                 double delta, StateId initial)
    : delta_(delta),
      exp_(states, to_polynomial(phi), theta, initial),
      exp2_(states, to_polynomial(phi) * to_polynomial(phi), theta, initial) {
  check_delta(delta);
  if (exp_.expectation() && exp2_.expectation())
    output_ = chebyshev_interval(*exp_.expectation(), *exp2_.expectation(), delta_);
}

BayesOutput BayesianMonitor::next(StateId next_state) {
  auto e = exp_.next(next_state);
  auto e2 = exp2_.next(next_state);
  if (e && e2) output_ = chebyshev_interval(*e, *e2, delta_);
  return output_;
}

nlohmann::json BayesianMonitor::snapshot() const {
  return {{"version", kSnapshotVersion},
          {"kind", "bayesian"},
          {"delta", delta_},
          {"first", exp_.snapshot()},
          {"second", exp2_.snapshot()}};
}

void BayesianMonitor::restore(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kSnapshotVersion || j.at("kind") != "bayesian")
      throw ValidationError("snapshot: unsupported format");
    if (j.at("delta").get<double>() != delta_) throw ValidationError("snapshot: delta mismatch");
    exp_.restore(j.at("first"));
    exp2_.restore(j.at("second"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("snapshot: ") + e.what());
  }
  output_ = Pending{PendingReason::inactive};
  if (exp_.expectation() && exp2_.expectation())
    output_ = chebyshev_interval(*exp_.expectation(), *exp2_.expectation(), delta_);
}

}  // namespace fairmon
