// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairmon/bayesian.hpp"
#include "fairmon/frequentist.hpp"
#include "fairmon/harness.hpp"
#include "fairmon/markov.hpp"
#include "fairmon/parser.hpp"
#include "fairmon/polynomial.hpp"
#include "generators.hpp"
#include "posterior_oracle.hpp"

using namespace fairmon;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

Pse v(std::uint32_t i, std::uint32_t j) { return Pse::variable(StateId{i - 1}, StateId{j - 1}); }

ChainSpec four_state() {
  return {StateSpace(4),
          new_chain({{0.1, 0.4, 0.3, 0.2}, {0.3, 0.2, 0.25, 0.25}, {0.25, 0.25, 0.2, 0.3}, {0.4, 0.2, 0.2, 0.2}},
                    StateId{0})};
}

std::vector<std::pair<std::string, Pse>> unbiasedness_fixtures() {
  return {
      {"v12", v(1, 2)},
      {"v12+v13", Pse::add(v(1, 2), v(1, 3))},
      {"v12-v13", Pse::sub(v(1, 2), v(1, 3))},
      {"v12*v13", Pse::mul(v(1, 2), v(1, 3))},
      {"v12*v34", Pse::mul(v(1, 2), v(3, 4))},
      {"(v12+v13)*v12", Pse::mul(Pse::add(v(1, 2), v(1, 3)), v(1, 2))},
  };
}

// 1. Frequentist coverage on the lending chain.
void frequentist_soundness(Outcome& o) {
  ExperimentConfig c;
  c.kind = ExperimentKind::coverage;
  c.chain = lending_chain();
  c.pse = kDemographicParityText;
  c.delta = 0.05;
  c.runs = 500;
  c.steps = 10000;
  c.seed = 1000;
  const auto r = coverage(c);
  o.detail << "coverage " << r.covered << "/" << r.runs << " = " << r.fraction << " (pending " << r.pending << ")";
  o.require(r.fraction >= 0.93, "coverage >= 0.93");
}

// 2. Running mean within its own interval of the true value.
void frequentist_unbiasedness(Outcome& o) {
  const ChainSpec chain = four_state();
  std::uint64_t seed = 2000;
  for (const auto& [name, phi] : unbiasedness_fixtures()) {
    ExperimentConfig c;
    c.kind = ExperimentKind::coverage;
    c.chain = chain;
    c.pse = to_string(phi, chain.states);
    c.runs = 100;
    c.steps = 100000;
    c.seed = seed;
    seed += 100;
    const auto r = coverage(c);
    o.detail << name << " " << r.covered << "/100; ";
    o.require(r.covered >= 93, name + " >= 93/100");
  }
}

// 3. Error-ratio study against the closed form.
void ratio_study(Outcome& o) {
  // sqrt(ln(2n/delta) / ln(2/delta)) at delta = 0.05, 50-digit reference.
  const double expected[] = {1.0,
                             1.08990909011215590363141750803,
                             1.13921786589792186071458869016,
                             1.17294656716246676236880826958,
                             1.19845505792777948146413577577,
                             1.21890080428643703306148998484,
                             1.23592358682109401357050018289,
                             1.25048209668404399270542045624,
                             1.26318434599310601416009003616,
                             1.27443962217979743903565295035};
  const auto rows = error_ratio_study(10, 0.05, {1000, 10000}, 3000);
  o.require(rows.size() == 10, "10 rows");
  double worst_analytic = 0, worst_empirical = 0, worst_spread = 0;
  bool increasing = true;
  for (std::size_t k = 0; k < rows.size() && k < 10; ++k) {
    const auto& r = rows[k];
    worst_analytic = std::max(worst_analytic, std::abs(r.analytic - expected[k]));
    for (double e : r.empirical) worst_empirical = std::max(worst_empirical, std::abs(e - r.analytic));
    worst_spread = std::max(worst_spread, std::abs(r.empirical.front() - r.empirical.back()));
    if (k > 0) increasing = increasing && r.analytic > rows[k - 1].analytic && r.empirical[0] > rows[k - 1].empirical[0];
    o.require(r.analytic >= 1.0, "ratio >= 1");
  }
  o.detail << "max analytic error " << worst_analytic << ", max empirical error " << worst_empirical
           << ", max spread across lengths " << worst_spread;
  o.require(worst_analytic <= 1e-9, "analytic within 1e-9");
  o.require(worst_empirical <= 1e-6, "empirical within 1e-6");
  o.require(worst_spread <= 1e-6, "invariant across trace lengths");
  o.require(increasing, "strictly increasing");
}

// 4. Incremental posterior expectations against batch and Monte-Carlo.
void bayesian_correctness(Outcome& o) {
  Rng rng(4000);
  double worst_rel = 0, worst_z = 0;
  int negative_fixtures = 0;
  for (int f = 0; f < 20; ++f) {
    const std::size_t n = 3 + f % 2;
    std::vector<std::vector<std::int64_t>> rows(n, std::vector<std::int64_t>(n));
    for (auto& row : rows)
      for (auto& x : row) x = 1 + static_cast<std::int64_t>(rng() % 3);
    const PriorTheta theta(rows);
    const TransitionMatrix m = testing::random_matrix(n, rng);
    Polynomial p;
    const int terms = 1 + f % 3;
    while (p.term_count() < static_cast<std::size_t>(terms)) p.add_term(testing::random_monomial(n, 3, 2, rng));
    // Every other fixture is forced to carry a negative exponent.
    if (f % 2 == 0 && std::none_of(p.terms().begin(), p.terms().end(), [](const Monomial& t) { return t.has_negative(); })) {
      Monomial t{1.0, {{Edge{StateId{0}, StateId{1}}, -1}}};
      p.add_term(t);
    }
    if (std::any_of(p.terms().begin(), p.terms().end(), [](const Monomial& t) { return t.has_negative(); }))
      ++negative_fixtures;

    const MarkovChain chain(m, StateId{0});
    const Path path = simulate(chain, 10000, 4100 + f);
    ExpectationMonitor mon(StateSpace(n), p, theta, chain.initial());
    SmoothedCounts counts(theta);
    for (std::size_t t = 1; t < path.size(); ++t) {
      mon.next(path[t]);
      counts.record(path[t - 1], path[t]);
      if (!mon.active()) continue;
      for (std::size_t l = 0; l < p.term_count(); ++l) {
        const double batch = h_initial(counts, p.terms()[l]);
        worst_rel = std::max(worst_rel, std::abs(mon.h()[l] - batch) / std::abs(batch));
      }
    }
    o.require(mon.active(), "fixture " + std::to_string(f) + " activates");
    if (!mon.active()) continue;
    const auto mc = testing::posterior_expectation_mc(p, counts, 100000, 4200 + f);
    const double z = std::abs(*mon.expectation() - mc.mean) / mc.std_error;
    worst_z = std::max(worst_z, z);
    o.require(z <= 3.0, "fixture " + std::to_string(f) + " within 3 SE");
  }
  o.detail << "20 fixtures (" << negative_fixtures << " with negative exponents), max relative drift " << worst_rel
           << ", max |E - MC| / SE " << worst_z;
  o.require(negative_fixtures >= 10, "negative exponents present");
  o.require(worst_rel <= 1e-9, "incremental within 1e-9");
}

// 5. Coverage of phi(M) for M drawn from the prior.
void bayesian_coverage(Outcome& o) {
  ExperimentConfig c;
  c.kind = ExperimentKind::coverage;
  c.chain = lending_chain();
  c.pse = kDemographicParityText;
  c.monitor = MonitorKind::bayes;
  c.prior = PriorTheta::uniform(c.chain->states.size());
  c.sample_chain_from_prior = true;
  c.delta = 0.05;
  c.runs = 500;
  c.steps = 2000;
  c.seed = 5000;
  const auto r = coverage(c);
  o.detail << "coverage " << r.covered << "/" << r.runs << " = " << r.fraction << " (pending " << r.pending << ")";
  o.require(r.fraction >= 1 - c.delta - 0.02, "coverage >= 0.93");
}

// 6. Laplace estimator and a Beta second moment.
void closed_forms(Outcome& o) {
  const PriorTheta theta({{2, 1, 3}, {1, 4, 1}, {2, 2, 2}});
  const MarkovChain chain = new_chain({{0.2, 0.5, 0.3}, {0.4, 0.4, 0.2}, {0.1, 0.6, 0.3}}, StateId{0});
  const Path path = simulate(chain, 10000, 6000);
  const StateSpace states(3);
  double worst = 0;
  for (std::uint32_t i = 0; i < 3; ++i) {
    for (std::uint32_t j = 0; j < 3; ++j) {
      const Edge x{StateId{i}, StateId{j}};
      ExpectationMonitor mon(states, Polynomial::from_monomial({1.0, {{x, 1}}}), theta, chain.initial());
      std::int64_t c_ij = 0, c_i = 0;
      for (std::size_t t = 1; t < path.size(); ++t) {
        const auto e = mon.next(path[t]);
        if (path[t - 1].index == i) {
          ++c_i;
          if (path[t].index == j) ++c_ij;
        }
        const double laplace = static_cast<double>(c_ij + theta(x.from, x.to)) /
                               static_cast<double>(c_i + theta.row_sum(x.from));
        worst = std::max(worst, e ? std::abs(*e - laplace) : 1.0);
      }
    }
  }
  const PriorTheta beta22({{2, 2}, {1, 1}});
  const double e2 = h_initial(SmoothedCounts(beta22), Monomial{1.0, {{Edge{StateId{0}, StateId{0}}, 2}}});
  o.detail << "max Laplace deviation " << worst << ", Beta(2,2) E[p^2] = " << e2;
  o.require(worst <= 1e-12, "Laplace within 1e-12");
  o.require(std::abs(e2 - 0.3) <= 1e-12, "E2 = 0.3");
}

// 7. Register and counter inventories, per-step work.
void resource_bounds(Outcome& o) {
  const ChainSpec chain = four_state();
  const Path path = simulate(chain.chain, 5000, 7000);
  std::vector<Pse> fixtures;
  for (const auto& f : unbiasedness_fixtures()) fixtures.push_back(f.second);
  Rng rng(7100);
  for (int k = 0; k < 100; ++k) fixtures.push_back(testing::random_pse(4, 12, false, rng));

  // Inventory: 3 + leaves + sum over Dep of (1 + k_i + (k_i + 1) + need_i) <= 6 (n + 1) + 3.
  constexpr double kC = 9.0;
  double worst_ratio = 0;
  std::size_t worst_water = 0;
  bool water_ok = true;
  for (std::size_t k = 0; k < fixtures.size(); ++k) {
    const Pse& phi = fixtures[k];
    DivFreeMonitor m(chain.states, phi, 0.05, k, chain.chain.initial());
    for (std::size_t t = 1; t < path.size(); ++t) m.next(path[t]);
    const double n = static_cast<double>(size(phi));
    worst_ratio = std::max(worst_ratio, static_cast<double>(m.registers()) / ((n + 1) * (n + 1)));
    for (const auto& b : m.buffers()) {
      worst_water = std::max(worst_water, b.high_water());
      water_ok = water_ok && b.high_water() <= size(phi) + 1;
    }
  }
  o.require(worst_ratio <= kC, "registers <= 9 (n+1)^2");
  o.require(water_ok, "high water <= size + 1");

  bool counters_ok = true, ops_ok = true;
  std::uint64_t max_ops_per_term = 0;
  for (int p = 1; p <= 64; p *= 2) {
    Polynomial poly;
    while (poly.term_count() < static_cast<std::size_t>(p)) poly.add_term(testing::random_monomial(4, 3, 2, rng));
    ExpectationMonitor m(chain.states, poly, PriorTheta::uniform(4), chain.chain.initial());
    std::set<StateId> dom;
    for (const Edge& x : poly.variables()) {
      dom.insert(x.from);
      dom.insert(x.to);
    }
    counters_ok = counters_ok && m.counters() < poly.variables().size() + dom.size() + 2 * poly.term_count();
    for (std::size_t t = 1; t < path.size(); ++t) {
      m.next(path[t]);
      if (m.last_step_operations() == 0) continue;  // untracked row, activation or batch refresh
      max_ops_per_term = std::max(max_ops_per_term, (m.last_step_operations() - 2) / poly.term_count());
      ops_ok = ops_ok && m.last_step_operations() <= 2 + 8 * poly.term_count();
    }
  }
  o.detail << "max registers / (n+1)^2 = " << worst_ratio << " (C = " << kC << "), max x_i high water "
           << worst_water << ", max ops per monomial " << max_ops_per_term;
  o.require(counters_ok, "counters < |V| + |Dom| + 2p");
  o.require(ops_ok, "ops <= 2 + 8p");
}

// 8. Mean update latency for the size-19 social-burden PSE.
void latency(Outcome& o) {
  for (MonitorKind kind : {MonitorKind::freq, MonitorKind::bayes}) {
    ExperimentConfig c;
    c.kind = ExperimentKind::latency;
    c.chain = admission_chain();
    c.pse = social_burden_text(10);
    c.monitor = kind;
    c.steps = 100000;
    c.warmup = 10000;
    c.seed = 8000;
    o.require(size(c.parsed_pse()) == 19, "social burden has size 19");
    const auto r = latency_report(c);
    o.detail << monitor_kind_name(kind) << " mean " << r.mean_ns / 1000 << " us (max " << r.max_ns / 1000
             << " us, " << r.registers << " registers); ";
    o.require(r.mean_ns < 1e6, std::string(monitor_kind_name(kind)) + " mean < 1 ms");
  }
}

// 9. Half-width after required_visits.
void convergence(Outcome& o) {
  const ChainSpec chain = four_state();
  const Path path = simulate(chain.chain, 60000, 9000);
  const std::vector<std::pair<std::string, Pse>> fixtures{{"v12", v(1, 2)},
                                                          {"v12*v13", Pse::mul(v(1, 2), v(1, 3))},
                                                          {"v12*v34", Pse::mul(v(1, 2), v(3, 4))}};
  for (const auto& [name, phi] : fixtures) {
    const std::uint64_t need = required_visits(phi, 0.05, 0.05);
    DivFreeMonitor m(chain.states, phi, 0.05, 9100, chain.chain.initial());
    std::vector<std::uint64_t> visits(4, 0);
    const auto deps = dep_states(phi);
    bool reached = false;
    for (std::size_t t = 1; t < path.size(); ++t) {
      ++visits[path[t - 1].index];
      const MonitorOutput out = m.next(path[t]);
      const bool enough = std::all_of(deps.begin(), deps.end(), [&](StateId s) { return visits[s.index] >= need; });
      if (!enough) continue;
      const auto* e = std::get_if<Estimate>(&out);
      const double half = e ? e->interval.width() / 2 : INFINITY;
      if (!reached) o.detail << name << ": " << need << " visits, half-width " << half << "; ";
      reached = true;
      o.require(half <= 0.05 + 1e-15, name + " half-width <= 0.05 at step " + std::to_string(t));
      if (half > 0.05 + 1e-15) break;
    }
    o.require(reached, name + " reached required visits");
  }
}

// 10. Transformations preserve semantics; written size of phi_m.
void transformations(Outcome& o) {
  Rng rng(10000);
  double worst_poly = 0, worst_split = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + k % 4;
    const Pse phi = testing::random_pse(n, 2 + k % 9, true, rng);
    const TransitionMatrix m = testing::random_matrix(n, rng);
    const double direct = evaluate(phi, m);
    const Polynomial p = to_polynomial(phi);
    const double scale = std::max(1.0, p.magnitude(m));
    worst_poly = std::max(worst_poly, std::abs(direct - p.evaluate(m)) / scale);
    const auto d = decompose_division(phi);
    const double split = d.free_part.evaluate(m) + d.numerator.evaluate(m) / d.denominator.evaluate(m);
    worst_split = std::max(worst_split, std::abs(direct - split) / scale);
  }
  o.detail << "1000 instances, max scaled error: polynomial " << worst_poly << ", decomposition " << worst_split
           << "; written sizes";
  o.require(worst_poly <= 1e-12, "polynomial form within 1e-12");
  o.require(worst_split <= 1e-12, "decomposition within 1e-12");
  for (int m = 2; m <= 4; ++m) {
    const std::size_t ws = written_size(to_polynomial(testing::formula_m(m)));
    o.detail << " m=" << m << ":" << ws;
    o.require(ws == (std::size_t{1} << (m + 1)) * m - 1, "written size for m=" + std::to_string(m));
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"frequentist soundness", frequentist_soundness},
      {"frequentist unbiasedness", frequentist_unbiasedness},
      {"error-ratio study", ratio_study},
      {"bayesian correctness", bayesian_correctness},
      {"bayesian coverage", bayesian_coverage},
      {"closed-form posterior checks", closed_forms},
      {"resource bounds", resource_bounds},
      {"update latency", latency},
      {"convergence bound", convergence},
      {"transformation suite", transformations},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
