#include "fairmon/frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fairmon/errors.hpp"
#include "fairmon/polynomial.hpp"

namespace fairmon {

namespace {

constexpr int kSnapshotVersion = 1;

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
}

void check_states(const StateSpace& states, const Pse& phi, StateId initial) {
  if (!states.contains(initial)) throw UnknownStateError("initial state outside the state space");
  for (const Edge& e : variables(phi))
    if (!states.contains(e.from) || !states.contains(e.to))
      throw UnknownStateError("variable refers to a state outside the state space");
}

// Visits of each Dep state consumed by one evaluation of the subtree: sums of
// the factors' needs under *, maxima under + and -.
std::map<StateId, std::size_t> needs(const Pse& phi) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      return {};
    case Pse::Kind::variable:
      return {{phi.edge().from, 1}};
    case Pse::Kind::inv:
      throw ValidationError("expression contains a division");
    default: {
      auto l = needs(phi.lhs());
      for (auto& [s, k] : needs(phi.rhs())) {
        auto& slot = l[s];
        slot = phi.kind() == Pse::Kind::mul ? slot + k : std::max(slot, k);
      }
      return l;
    }
  }
}

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void set_rng_state(Rng& rng, const std::string& s) {
  std::istringstream in(s);
  in >> rng;
  if (!in) throw ValidationError("snapshot: corrupt generator state");
}

}  // namespace

double hoeffding_epsilon(std::uint64_t n, Interval range, double delta) {
  if (n == 0) throw ValidationError("Hoeffding bound needs at least one sample");
  check_delta(delta);
  return range.width() * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

Interval hoeffding_interval(double mean, std::uint64_t n, Interval range, double delta) {
  const double eps = hoeffding_epsilon(n, range, delta);
  return {mean - eps, mean + eps};
}

// ReshuffleBuffer --------------------------------------------------------

ReshuffleBuffer::ReshuffleBuffer(StateId state, std::vector<StateId> successors)
    : state_(state),
      successors_(std::move(successors)),
      edge_counts_(successors_.size(), 0),
      consumed_(successors_.size() + 1, 0) {}

void ReshuffleBuffer::record(StateId next) {
  ++visits_;
  auto it = std::lower_bound(successors_.begin(), successors_.end(), next);
  if (it != successors_.end() && *it == next) ++edge_counts_[it - successors_.begin()];
}

std::uint64_t ReshuffleBuffer::slack() const {
  std::uint64_t relevant = 0;
  for (auto c : edge_counts_) relevant += c;
  return visits_ - relevant;
}

bool ReshuffleBuffer::extract(std::size_t needed, Rng& rng) {
  if (residual() < needed) return false;
  const std::size_t top = successors_.size();
  for (std::size_t k = 0; k < needed; ++k) {
    std::uint64_t r = uniform_below(rng, residual());
    std::size_t pick = 0;
    for (;; ++pick) {
      const std::uint64_t total = pick == top ? slack() : edge_counts_[pick];
      const std::uint64_t left = total - consumed_[pick];
      if (r < left) break;
      r -= left;
    }
    ++consumed_[pick];
    ++consumed_total_;
    x_.push_back(pick == top ? kTop : static_cast<int>(pick));
  }
  high_water_ = std::max(high_water_, x_.size());
  return true;
}

nlohmann::json ReshuffleBuffer::snapshot() const {
  return {{"state", state_.index},
          {"visits", visits_},
          {"edge_counts", edge_counts_},
          {"consumed", consumed_},
          {"high_water", high_water_}};
}

void ReshuffleBuffer::restore(const nlohmann::json& j) {
  if (j.at("state").get<std::uint32_t>() != state_.index)
    throw ValidationError("snapshot: buffer state mismatch");
  auto edge_counts = j.at("edge_counts").get<std::vector<std::uint64_t>>();
  auto consumed = j.at("consumed").get<std::vector<std::uint64_t>>();
  if (edge_counts.size() != edge_counts_.size() || consumed.size() != consumed_.size())
    throw ValidationError("snapshot: buffer shape mismatch");
  visits_ = j.at("visits").get<std::uint64_t>();
  edge_counts_ = std::move(edge_counts);
  consumed_ = std::move(consumed);
  consumed_total_ = 0;
  for (auto c : consumed_) consumed_total_ += c;
  if (consumed_total_ > visits_) throw ValidationError("snapshot: inconsistent buffer counters");
  high_water_ = j.at("high_water").get<std::size_t>();
  x_.clear();
}

// DivFreeMonitor ---------------------------------------------------------

DivFreeMonitor::DivFreeMonitor(const StateSpace& states, const Pse& phi, double delta,
                               std::uint64_t seed, StateId initial)
    : states_(states), phi_(relabel_duplicates(phi)), delta_(delta), rng_(seed), current_(initial) {
  check_delta(delta);
  if (contains_division(phi)) throw ValidationError("expression contains a division");
  check_states(states, phi, initial);
  range_ = static_range(phi_);

  buffer_of_state_.assign(states.size(), -1);
  std::map<StateId, std::vector<StateId>> succ;
  for (const Edge& e : variables(phi_)) succ[e.from].push_back(e.to);
  for (auto& [i, js] : succ) {
    buffer_of_state_[i.index] = static_cast<int>(buffers_.size());
    buffers_.emplace_back(i, js);  // js ascending: set order
  }

  std::vector<std::size_t> base(buffers_.size(), 0);
  need_.assign(buffers_.size(), 0);
  compile(phi_, base, need_);
  visits_per_sample_ = need_.empty() ? 0 : *std::max_element(need_.begin(), need_.end());
  scratch_.resize(program_.size());
  labeled_vars_ = leaf_count(phi_);
}

int DivFreeMonitor::compile(const Pse& node, std::vector<std::size_t>& base,
                            std::vector<std::size_t>& need) {
  Op op{node.kind()};
  switch (node.kind()) {
    case Pse::Kind::constant:
      op.value = node.value();
      std::fill(need.begin(), need.end(), 0);
      break;
    case Pse::Kind::variable: {
      const int b = buffer_of_state_[node.edge().from.index];
      const auto& js = buffers_[b].successors();
      op.buffer = b;
      op.successor = static_cast<int>(std::lower_bound(js.begin(), js.end(), node.edge().to) - js.begin());
      op.slot = base[b];
      std::fill(need.begin(), need.end(), 0);
      need[b] = 1;
      break;
    }
    case Pse::Kind::add:
    case Pse::Kind::sub: {
      std::vector<std::size_t> nl(need.size()), nr(need.size());
      op.lhs = compile(node.lhs(), base, nl);
      op.rhs = compile(node.rhs(), base, nr);
      for (std::size_t b = 0; b < need.size(); ++b) need[b] = std::max(nl[b], nr[b]);
      break;
    }
    case Pse::Kind::mul: {
      std::vector<std::size_t> nl(need.size()), nr(need.size());
      op.lhs = compile(node.lhs(), base, nl);
      std::vector<std::size_t> shifted(base);
      for (std::size_t b = 0; b < base.size(); ++b) shifted[b] += nl[b];
      op.rhs = compile(node.rhs(), shifted, nr);
      for (std::size_t b = 0; b < need.size(); ++b) need[b] = nl[b] + nr[b];
      break;
    }
    case Pse::Kind::inv:
      throw ValidationError("expression contains a division");
  }
  program_.push_back(op);
  return static_cast<int>(program_.size()) - 1;
}

bool DivFreeMonitor::try_sample() {
  for (std::size_t b = 0; b < buffers_.size(); ++b)
    if (buffers_[b].residual() < need_[b]) return false;
  for (std::size_t b = 0; b < buffers_.size(); ++b) buffers_[b].extract(need_[b], rng_);

  for (std::size_t k = 0; k < program_.size(); ++k) {
    const Op& op = program_[k];
    double v = 0.0;
    switch (op.kind) {
      case Pse::Kind::constant:
        v = op.value;
        break;
      case Pse::Kind::variable:
        v = buffers_[op.buffer].slot(op.slot) == op.successor ? 1.0 : 0.0;
        break;
      case Pse::Kind::add:
        v = scratch_[op.lhs] + scratch_[op.rhs];
        break;
      case Pse::Kind::sub:
        v = scratch_[op.lhs] - scratch_[op.rhs];
        break;
      case Pse::Kind::mul:
        v = scratch_[op.lhs] * scratch_[op.rhs];
        break;
      case Pse::Kind::inv:
        break;
    }
    scratch_[k] = v;
  }
  const double w = scratch_.back();
  ++n_w_;
  sum_w_ += w;
  last_w_ = w;
  for (auto& buf : buffers_) buf.reset();
  return true;
}

MonitorOutput DivFreeMonitor::next(StateId next_state) {
  if (!states_.contains(next_state)) throw UnknownStateError("state outside the state space");
  if (const int b = buffer_of_state_[current_.index]; b >= 0) buffers_[b].record(next_state);
  current_ = next_state;
  try_sample();
  return output();
}

MonitorOutput DivFreeMonitor::output() const {
  if (n_w_ == 0) return Pending{PendingReason::no_samples};
  const double mean = sum_w_ / static_cast<double>(n_w_);
  return Estimate{hoeffding_interval(mean, n_w_, range_, delta_), mean, n_w_};
}

std::size_t DivFreeMonitor::need(StateId i) const {
  if (i.index >= buffer_of_state_.size() || buffer_of_state_[i.index] < 0) return 0;
  return need_[buffer_of_state_[i.index]];
}

std::size_t DivFreeMonitor::registers() const {
  std::size_t r = 3 + labeled_vars_;
  for (std::size_t b = 0; b < buffers_.size(); ++b) {
    const std::size_t k = buffers_[b].successors().size();
    r += 1 + k + (k + 1) + need_[b];
  }
  return r;
}

nlohmann::json DivFreeMonitor::snapshot() const {
  nlohmann::json bufs = nlohmann::json::array();
  for (auto& b : buffers_) bufs.push_back(b.snapshot());
  nlohmann::json j{{"version", kSnapshotVersion},
                   {"kind", "div_free"},
                   {"delta", delta_},
                   {"current", current_.index},
                   {"samples", n_w_},
                   {"sum", sum_w_},
                   {"rng", rng_state(rng_)},
                   {"buffers", bufs}};
  j["last"] = last_w_ ? nlohmann::json(*last_w_) : nlohmann::json(nullptr);
  return j;
}

void DivFreeMonitor::restore(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kSnapshotVersion || j.at("kind") != "div_free")
      throw ValidationError("snapshot: unsupported format");
    if (j.at("delta").get<double>() != delta_) throw ValidationError("snapshot: delta mismatch");
    const auto& bufs = j.at("buffers");
    if (bufs.size() != buffers_.size()) throw ValidationError("snapshot: buffer count mismatch");
    const StateId current{j.at("current").get<std::uint32_t>()};
    if (!states_.contains(current)) throw ValidationError("snapshot: current state out of range");
    for (std::size_t b = 0; b < buffers_.size(); ++b) buffers_[b].restore(bufs[b]);
    current_ = current;
    n_w_ = j.at("samples").get<std::uint64_t>();
    sum_w_ = j.at("sum").get<double>();
    last_w_ = j.at("last").is_null() ? std::nullopt : std::optional<double>(j.at("last").get<double>());
    set_rng_state(rng_, j.at("rng").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("snapshot: ") + e.what());
  }
}

// FrequentistMonitor ------------------------------------------------------

FrequentistMonitor::FrequentistMonitor(const StateSpace& states, const Pse& phi, double delta,
                                       std::uint64_t seed, StateId initial) {
  check_delta(delta);
  check_states(states, phi, initial);
  if (!contains_division(phi)) {
    parts_.emplace_back(states, phi, delta, seed, initial);
    return;
  }
  const DivisionDecomposition d = decompose_division(phi);
  Monomial c = d.denominator;
  c.coefficient = 1.0;
  parts_.emplace_back(states, to_pse(d.free_part), delta / 3.0, derive_seed(seed, 0), initial);
  parts_.emplace_back(states, to_pse(d.numerator), delta / 3.0, derive_seed(seed, 1), initial);
  parts_.emplace_back(states, to_pse(c), delta / 3.0, derive_seed(seed, 2), initial);
}

MonitorOutput FrequentistMonitor::next(StateId next_state) {
  for (auto& m : parts_) m.next(next_state);
  return output();
}

MonitorOutput FrequentistMonitor::output() const {
  if (parts_.size() == 1) return parts_.front().output();
  std::vector<Estimate> e;
  for (auto& m : parts_) {
    auto o = m.output();
    if (is_pending(o)) return o;
    e.push_back(std::get<Estimate>(o));
  }
  return combine_quotient(e[0], e[1], e[2]);
}

std::size_t FrequentistMonitor::registers() const {
  std::size_t r = 0;
  for (auto& m : parts_) r += m.registers();
  return r;
}

nlohmann::json FrequentistMonitor::snapshot() const {
  nlohmann::json parts = nlohmann::json::array();
  for (auto& m : parts_) parts.push_back(m.snapshot());
  return {{"version", kSnapshotVersion}, {"kind", "frequentist"}, {"parts", parts}};
}

void FrequentistMonitor::restore(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kSnapshotVersion || j.at("kind") != "frequentist")
      throw ValidationError("snapshot: unsupported format");
    const auto& parts = j.at("parts");
    if (parts.size() != parts_.size()) throw ValidationError("snapshot: monitor shape mismatch");
    for (std::size_t k = 0; k < parts_.size(); ++k) parts_[k].restore(parts[k]);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("snapshot: ") + e.what());
  }
}

MonitorOutput combine_quotient(const Estimate& a, const Estimate& b, const Estimate& c) {
  auto q = divide(b.interval, c.interval);
  if (!q) return Pending{PendingReason::denominator_contains_zero};
  return Estimate{a.interval + *q, a.mean + b.mean / c.mean,
                  std::min({a.samples, b.samples, c.samples})};
}

// BaselineMonitor ---------------------------------------------------------

BaselineMonitor::BaselineMonitor(const StateSpace& states, const Pse& phi, double delta,
                                 StateId initial)
    : phi_(phi), delta_(delta), occurrences_(leaf_count(phi)), current_(initial), n_(states.size()) {
  check_delta(delta);
  check_states(states, phi, initial);
  visits_.assign(n_, 0);
  edge_counts_.assign(n_ * n_, 0);
  tracked_state_.assign(n_, 0);
  tracked_edge_.assign(n_ * n_, 0);
  for (const Edge& e : variables(phi)) {
    tracked_state_[e.from.index] = 1;
    tracked_edge_[e.from.index * n_ + e.to.index] = 1;
  }
}

MonitorOutput BaselineMonitor::next(StateId next_state) {
  if (next_state.index >= n_) throw UnknownStateError("state outside the state space");
  const std::size_t i = current_.index;
  if (tracked_state_[i]) {
    ++visits_[i];
    const std::size_t e = i * n_ + next_state.index;
    if (tracked_edge_[e]) ++edge_counts_[e];
  }
  current_ = next_state;
  return output();
}

std::optional<BaselineMonitor::Eval> BaselineMonitor::evaluate(const Pse& node) const {
  switch (node.kind()) {
    case Pse::Kind::constant:
      return Eval{Interval::point(node.value()), node.value()};
    case Pse::Kind::variable: {
      const double c_i = static_cast<double>(visits_[node.edge().from.index]);
      const double c_ij = static_cast<double>(edge_counts_[node.edge().from.index * n_ + node.edge().to.index]);
      const double k = static_cast<double>(occurrences_);
      const double mean = c_ij / c_i;
      const double eps = std::sqrt(std::log(2.0 * k / delta_) / (2.0 * c_i));
      return Eval{{mean - eps, mean + eps}, mean};
    }
    case Pse::Kind::inv: {
      auto d = evaluate(node.operand());
      if (!d) return std::nullopt;
      auto r = reciprocal(d->interval);
      if (!r) return std::nullopt;
      return Eval{*r, 1.0 / d->mean};
    }
    default: {
      auto l = evaluate(node.lhs());
      if (!l) return std::nullopt;
      auto r = evaluate(node.rhs());
      if (!r) return std::nullopt;
      switch (node.kind()) {
        case Pse::Kind::add:
          return Eval{l->interval + r->interval, l->mean + r->mean};
        case Pse::Kind::sub:
          return Eval{l->interval - r->interval, l->mean - r->mean};
        default:
          return Eval{l->interval * r->interval, l->mean * r->mean};
      }
    }
  }
}

MonitorOutput BaselineMonitor::output() const {
  std::uint64_t least = ~std::uint64_t{0};
  for (std::size_t i = 0; i < n_; ++i)
    if (tracked_state_[i]) least = std::min(least, visits_[i]);
  if (least == 0) return Pending{PendingReason::no_samples};
  auto e = evaluate(phi_);
  if (!e) return Pending{PendingReason::denominator_contains_zero};
  return Estimate{e->interval, e->mean, least == ~std::uint64_t{0} ? 0 : least};
}

std::size_t BaselineMonitor::registers() const {
  std::size_t r = 0;
  for (char t : tracked_state_) r += t;
  for (char t : tracked_edge_) r += t;
  return r;
}

std::uint64_t required_visits(const Pse& phi, double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  check_delta(delta);
  const auto per_sample = needs(phi);
  std::size_t visits_per_sample = 0;
  for (auto& [s, k] : per_sample) visits_per_sample = std::max(visits_per_sample, k);
  const double w = static_cast<double>(static_range(phi).width());
  const double samples = std::ceil(w * w * std::log(2.0 / delta) / (2.0 * epsilon * epsilon));
  return static_cast<std::uint64_t>(samples) * visits_per_sample;
}

}  // namespace fairmon
