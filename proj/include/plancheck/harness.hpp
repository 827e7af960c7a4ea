#pragma once

// Experiment harness: random plan generation (dense property-satisfying and
// sparse retry regimes), the two timing protocols (single-cell change under
// individually-owned plans; generalization of a jointly-owned product plan),
// suite aggregation with speedup columns, the evolutionary loop skeleton, and
// the rovers / three-state regression fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "plancheck/checker.hpp"
#include "plancheck/oracle.hpp"
#include "plancheck/property.hpp"
#include "plancheck/rng.hpp"

namespace plancheck {

// ---- fixtures ----

inline std::vector<ActionAlphabet> rovers_alphabets() {
  return {{"F", {"collect", "deliver"}},
          {"I", {"receive", "deliver"}},
          {"L", {"transmit", "receive", "pause"}}};
}

struct RoversFixture {
  UniversePtr universe;
  PlanFSA far_rover;      // F: COLLECTING / DELIVERING
  PlanFSA intermediary;   // I: RECEIVING / DELIVERING
  PlanFSA lander;         // L: TRANSMITTING / RECEIVING / PAUSING
  std::string property_suite;  // the ten-property experiment suite
};

/// The planetary exploration team: far rover F hands samples to intermediary
/// rover I, which delivers them to lander L. L's table is the canonical
/// twelve-column transition grid; F and I follow the narrative plans.
inline RoversFixture rovers_fixture() {
  UniversePtr u = AtomUniverse::create(rovers_alphabets());
  const std::size_t na = u->atom_count();  // 12

  auto build = [&](std::string name, std::vector<std::string> states,
                   std::vector<std::uint32_t> initial,
                   const std::vector<std::vector<std::string>>& grid) {
    std::vector<std::int32_t> delta(states.size() * na, kUndefined);
    for (std::size_t v = 0; v < grid.size(); ++v)
      for (std::size_t a = 0; a < na; ++a)
        if (grid[v][a] != "0") {
          std::uint32_t w = 0;
          while (states[w] != grid[v][a]) ++w;
          delta[v * na + a] = static_cast<std::int32_t>(w);
        }
    return PlanFSA(std::move(name), u, std::move(states), std::move(initial), {},
                   std::move(delta));
  };

  // Atom columns, in universe order:
  //   crt crr crp cdt cdr cdp drt drr drp ddt ddr ddp
  // (F action, I action, L action by first letter.)

  // F collects while I delivers; any handoff attempt (F collecting with I
  // ready, or F choosing to deliver) moves it to DELIVERING, where it stays
  // until I turns to deliver onward.
  PlanFSA f = build(
      "F", {"COLLECTING", "DELIVERING"}, {0},
      {// crt  crr  crp  cdt  cdr  cdp  drt  drr  drp  ddt  ddr  ddp
       {"DELIVERING", "DELIVERING", "DELIVERING", "COLLECTING", "COLLECTING", "COLLECTING",
        "DELIVERING", "DELIVERING", "DELIVERING", "DELIVERING", "DELIVERING", "DELIVERING"},
       {"0", "0", "0", "0", "0", "0", "DELIVERING", "DELIVERING", "DELIVERING", "COLLECTING",
        "COLLECTING", "COLLECTING"}});

  // I receives until F hands over while L is transmitting, then delivers; from
  // DELIVERING it stays put while L transmits and returns to RECEIVING once L
  // receives or pauses.
  PlanFSA i = build(
      "I", {"RECEIVING", "DELIVERING"}, {0},
      {{"RECEIVING", "RECEIVING", "RECEIVING", "0", "0", "0", "DELIVERING", "RECEIVING",
        "RECEIVING", "0", "0", "0"},
       {"0", "0", "0", "DELIVERING", "RECEIVING", "RECEIVING", "0", "0", "0", "DELIVERING",
        "RECEIVING", "RECEIVING"}});

  // L, cell for cell from the canonical grid.
  PlanFSA l = build(
      "L", {"TRANSMITTING", "RECEIVING", "PAUSING"}, {0, 1, 2},
      {{"RECEIVING", "0", "PAUSING", "TRANSMITTING", "0", "TRANSMITTING", "RECEIVING", "0",
        "PAUSING", "TRANSMITTING", "0", "TRANSMITTING"},
       {"0", "TRANSMITTING", "0", "0", "RECEIVING", "0", "0", "TRANSMITTING", "0", "0",
        "RECEIVING", "0"},
       {"0", "0", "RECEIVING", "0", "0", "TRANSMITTING", "0", "0", "RECEIVING", "0", "0",
        "TRANSMITTING"}});

  std::string props =
      "# Invariance suite\n"
      "invariant !(I-deliver & L-transmit)\n"
      "invariant !(I-deliver & L-pause)\n"
      "invariant !(F-collect & I-deliver)\n"
      "invariant !(F-collect & I-deliver & L-receive)\n"
      "invariant !(F-deliver & I-receive & L-pause)\n"
      "# Response suite\n"
      "response F-deliver => L-receive\n"
      "response F-deliver => I-receive\n"
      "response F-collect => L-transmit\n"
      "response F-collect & I-deliver => L-receive\n"
      "response F-deliver => I-receive & L-receive\n";

  return RoversFixture{u, std::move(f), std::move(i), std::move(l), std::move(props)};
}

/// Single-agent three-state regression automaton: b enters STATE2, e loops
/// there, a exits to STATE3, d returns home. Satisfies "every a is eventually
/// followed by d"; keeping-to-self applied to the a-cell breaks it.
inline PlanFSA fig9_s1() {
  UniversePtr u = AtomUniverse::create({{"M", {"a", "b", "c", "d", "e"}}});
  std::vector<std::int32_t> delta(3 * 5, kUndefined);
  auto at = [&](std::uint32_t v, std::uint32_t a) -> std::int32_t& { return delta[v * 5 + a]; };
  at(0, 1) = 1;  // STATE1 -b-> STATE2
  at(1, 4) = 1;  // STATE2 -e-> STATE2
  at(1, 0) = 2;  // STATE2 -a-> STATE3
  at(2, 3) = 0;  // STATE3 -d-> STATE1
  return PlanFSA("S1", u, {"STATE1", "STATE2", "STATE3"}, {0}, {}, std::move(delta));
}

/// The keeping-to-self operator instance from the regression example: move
/// the a-condition from (STATE2, STATE3) onto (STATE2, STATE2).
inline TableEdit fig9_stay_edit() {
  return TableEdit{TableEdit::kSelfAgent, 1, Atom{0}, 1};
}

// ---- random generation ----

enum class Density : std::uint8_t { DenseEngineered, SparseRetry };

struct GenConfig {
  std::vector<ActionAlphabet> alphabets = rovers_alphabets();
  std::size_t states_per_agent = 25;
  Density density = Density::DenseEngineered;
  double fill_probability = 0.35;
  std::uint64_t seed = 1;
  std::size_t retry_cap = 10000;
};

inline UniversePtr make_universe(const GenConfig& cfg) {
  return AtomUniverse::create(cfg.alphabets);
}

namespace harness_detail {

inline std::vector<std::string> numbered_states(std::size_t n) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = "s" + std::to_string(i);
  return out;
}

inline PlanFSA random_table(const UniversePtr& u, std::size_t n_states, const AtomSet& blocked,
                            bool dense, double fill_probability, std::string name, Rng& rng) {
  std::vector<std::int32_t> delta(n_states * u->atom_count(), kUndefined);
  for (std::size_t v = 0; v < n_states; ++v)
    for (std::uint32_t a = 0; a < u->atom_count(); ++a) {
      if (blocked.contains(Atom{a})) continue;
      if (dense || rng.chance(fill_probability))
        delta[v * u->atom_count() + a] = static_cast<std::int32_t>(rng.below(n_states));
    }
  return PlanFSA(std::move(name), u, numbered_states(n_states), {0}, {}, std::move(delta));
}

}  // namespace harness_detail

/// One random plan satisfying `property`. Dense mode blocks every column
/// whose atom lies in the forbidden set (invariance) or the trigger set
/// (response) and fills everything else; sparse mode fills cells with the
/// configured probability and regenerates until total verification passes.
inline PlanFSA gen_fsa(const GenConfig& cfg, const Property& property, const UniversePtr& u,
                       std::string name, Rng& rng) {
  if (property_trigger(property).universe()->signature() != u->signature())
    throw InputError("property is bound to a different universe");
  const AtomSet& blocked = property_trigger(property);
  if (cfg.density == Density::DenseEngineered)
    return harness_detail::random_table(u, cfg.states_per_agent, blocked, true,
                                        cfg.fill_probability, std::move(name), rng);
  AtomSet none(u);
  for (std::size_t attempt = 0; attempt < cfg.retry_cap; ++attempt) {
    PlanFSA candidate = harness_detail::random_table(
        u, cfg.states_per_agent, none, false, cfg.fill_probability, name, rng);
    if (is_invariance(property)) {
      auto [verdict, ctx] = total_i(candidate, property_trigger(property));
      if (verdict.passed()) return candidate;
    } else {
      const auto& resp = std::get<ResponseProperty>(property);
      ProductFSA check = product_with_property(candidate, neg_first_response_fsa(resp));
      auto [verdict, ctx] = total_at(check.fsa());
      if (verdict.passed()) return candidate;
    }
  }
  throw InputError("sparse generation gave up after " + std::to_string(cfg.retry_cap) +
                   " attempts; lower fill_probability or relax the property");
}

inline PlanFSA gen_fsa(const GenConfig& cfg, const Property& property) {
  if (make_universe(cfg)->signature() != property_trigger(property).universe()->signature())
    throw InputError("property is bound to a different universe than the generator config");
  Rng rng(cfg.seed);
  return gen_fsa(cfg, property, property_trigger(property).universe(), "gen", rng);
}

// ---- timing trials ----

template <typename F>
double timed_seconds(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

/// Mean per-call seconds over a small repeat loop; used for the
/// condition-level checks whose single-call cost sits below the clock and
/// allocator noise floor.
template <typename F>
double timed_seconds_mean(std::size_t reps, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < reps; ++i) f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(reps);
}

inline constexpr std::size_t kMicroTimingReps = 32;

inline constexpr double kNoErrCount = -1.0;

struct TrialRow {
  std::string algorithm;
  std::string role;  // "p", "v", "b", or "v+b"
  double seconds = 0;
  double err = kNoErrCount;
};

struct TrialReport {
  std::uint64_t seed = 0;
  PropertyClass cls = PropertyClass::Invariance;
  bool verdicts_agree = true;
  bool inc_counts_match_total = true;  // AT error-count comparison, where applicable
  bool gen_r_false_error = false;      // AVOID issued although the oracle sees no violation
  std::vector<TrialRow> rows;
};

/// Protocol for individually-owned plans: generate one dense plan per agent,
/// form and verify the joint product, apply a random single-cell change to a
/// random agent, then time re-forming and re-verifying through the three
/// pipelines (incremental product + total verify; incremental product with
/// restart states + incremental verify; everything from scratch) on
/// identical inputs.
inline TrialReport run_change_trial(const GenConfig& cfg, const Property& property,
                                    std::uint64_t seed, const UniversePtr& universe) {
  Rng rng(seed);
  TrialReport report;
  report.seed = seed;
  report.cls = is_invariance(property) ? PropertyClass::Invariance : PropertyClass::Response;

  const std::size_t n_agents = cfg.alphabets.size();
  std::vector<PlanFSA> agents;
  for (std::size_t k = 0; k < n_agents; ++k)
    agents.push_back(gen_fsa(cfg, property, universe, cfg.alphabets[k].agent_name, rng));

  const bool invariance = is_invariance(property);
  std::vector<PlanFSA> comps = agents;
  if (!invariance)
    comps.push_back(negation_fsa(property));

  ProductFSA base = total_product(std::span<const PlanFSA>(comps));
  const AtomSet& p = property_trigger(property);
  auto [pre_verdict, pre_ctx] =
      invariance ? total_i(base.fsa(), p) : total_at(base.fsa());
  if (!pre_verdict.passed())
    throw ContractViolation("dense generation produced a violating product");

  // Random single-cell change to a random agent: any cell, new target always
  // a state.
  auto agent = static_cast<std::uint32_t>(rng.below(n_agents));
  auto maybe_edit = random_edit(agents[agent], OperatorSchema::Change, rng);
  if (!maybe_edit) throw ContractViolation("change operator found no candidate cell");
  TableEdit edit = *maybe_edit;
  edit.agent = static_cast<std::int32_t>(agent);

  std::vector<PlanFSA> edited_comps = comps;
  edited_comps[agent] = apply_edit(comps[agent], edit);

  const std::string verify_name = invariance ? "Total_I" : "Total_AT";
  const std::string inc_verify_name = invariance ? "Inc_I-NI" : "Inc_AT-NI";
  const std::string inc_both_name = invariance ? "Inc_I" : "Inc_AT";

  // Pipeline A: incremental product, then total verification.
  ProductFSA prod_a = base;
  double a_p = timed_seconds([&] { prod_a = inc_product(std::move(prod_a), agent, edit); });
  Verdict verdict_a;
  double a_v = timed_seconds([&] {
    auto [v, c] = invariance ? total_i(prod_a.fsa(), p) : total_at(prod_a.fsa());
    verdict_a = std::move(v);
  });

  // Pipeline B: incremental product with restart states, then incremental
  // verification.
  ProductFSA prod_b = base;
  std::vector<std::uint32_t> restarts;
  double b_p = timed_seconds([&] {
    auto [next, ni] = inc_product_ni(std::move(prod_b), agent, edit, pre_ctx);
    prod_b = std::move(next);
    restarts = std::move(ni);
  });
  Verdict verdict_b;
  double b_v = timed_seconds([&] {
    auto [v, c] = invariance ? inc_i_ni(prod_b.fsa(), p, restarts, edit, pre_ctx)
                             : inc_at_ni(prod_b.fsa(), restarts, edit, pre_ctx);
    verdict_b = std::move(v);
  });

  // Pipeline C: everything from scratch.
  ProductFSA prod_c;
  double c_p = timed_seconds(
      [&] { prod_c = total_product(std::span<const PlanFSA>(edited_comps)); });
  Verdict verdict_c;
  double c_v = timed_seconds([&] {
    auto [v, c] = invariance ? total_i(prod_c.fsa(), p) : total_at(prod_c.fsa());
    verdict_c = std::move(v);
  });

  report.verdicts_agree =
      verdict_a.status == verdict_c.status && verdict_b.status == verdict_c.status;
  report.inc_counts_match_total =
      invariance || verdict_b.errors.size() == verdict_c.errors.size();

  auto err_count = [](const Verdict& v) { return static_cast<double>(v.errors.size()); };
  report.rows = {
      {"Inc_prod", "p", a_p, kNoErrCount},
      {verify_name, "v", a_v, err_count(verdict_a)},
      {inc_both_name, "b", a_p + a_v, kNoErrCount},
      {"Inc_prod-NI", "p", b_p, kNoErrCount},
      {inc_verify_name, "v", b_v, err_count(verdict_b)},
      {inc_verify_name, "b", b_p + b_v, kNoErrCount},
      {"Total_prod", "p", c_p, kNoErrCount},
      {verify_name + " (total)", "v", c_v, err_count(verdict_c)},
      {verify_name + " (total)", "b", c_p + c_v, kNoErrCount},
  };
  return report;
}

/// Protocol for a jointly-owned product plan: form and verify the product,
/// apply a random generalization to the product table itself, then time the
/// condition-level check against the incremental and total searches.
inline TrialReport run_gen_trial(const GenConfig& cfg, const Property& property,
                                 std::uint64_t seed, const UniversePtr& universe,
                                 bool collect_oracle = true) {
  Rng rng(seed);
  TrialReport report;
  report.seed = seed;
  report.cls = is_invariance(property) ? PropertyClass::Invariance : PropertyClass::Response;

  const std::size_t n_agents = cfg.alphabets.size();
  std::vector<PlanFSA> agents;
  for (std::size_t k = 0; k < n_agents; ++k)
    agents.push_back(gen_fsa(cfg, property, universe, cfg.alphabets[k].agent_name, rng));
  PlanFSA plan = total_product(std::span<const PlanFSA>(agents)).fsa();

  // The generalization: copy a defined target of a random row into a random
  // zero cell of the same row.
  auto maybe_edit = random_edit(plan, OperatorSchema::Gen, rng);
  if (!maybe_edit) throw ContractViolation("generalization found no candidate cell");
  TableEdit edit = *maybe_edit;
  PlanFSA edited = apply_edit(plan, edit);

  const AtomSet& p = property_trigger(property);
  AtomSet z(plan.universe());
  z.insert(edit.atom);

  if (is_invariance(property)) {
    auto [pre_verdict, pre_ctx] = total_i(plan, p);
    if (!pre_verdict.passed())
      throw ContractViolation("dense generation produced a violating product");

    Verdict v_gen;
    double t_gen = timed_seconds_mean(kMicroTimingReps, [&] {
      v_gen = inc_gen_i(pre_ctx.visited[edit.state] != 0, z, p);
    });
    Verdict v_inc;
    double t_inc = timed_seconds_mean(kMicroTimingReps, [&] {
      auto restarts = derive_new_initials_1plan(pre_ctx, edit);
      auto [v, c] = inc_i_ni(edited, p, restarts, edit, pre_ctx);
      v_inc = std::move(v);
    });
    Verdict v_tot;
    double t_tot = timed_seconds([&] {
      auto [v, c] = total_i(edited, p);
      v_tot = std::move(v);
    });

    bool gen_agrees = v_gen.passed() == v_tot.passed();
    bool inc_agrees = v_inc.status == v_tot.status;
    report.verdicts_agree = gen_agrees && inc_agrees;
    report.inc_counts_match_total = v_inc.errors.size() == v_tot.errors.size();
    report.rows = {
        {"Inc_gen-I", "v+b", t_gen, static_cast<double>(v_gen.errors.size())},
        {"Inc_I-NI", "v+b", t_inc, static_cast<double>(v_inc.errors.size())},
        {"Total_I", "v+b", t_tot, static_cast<double>(v_tot.errors.size())},
    };
    return report;
  }

  const auto& resp = std::get<ResponseProperty>(property);
  PlanFSA neg = neg_first_response_fsa(resp);
  ProductFSA base = product_with_property(plan, neg);
  auto [pre_verdict, pre_ctx] = total_at(base.fsa());
  if (!pre_verdict.passed())
    throw ContractViolation("dense generation produced a violating product");

  // Condition-level check: y is the prior condition on the generalized edge,
  // identified from the table as part of the timed work.
  Verdict v_gen;
  double t_gen = timed_seconds_mean(kMicroTimingReps, [&] {
    AtomSet y = transition_condition(plan, edit.state,
                                     static_cast<std::uint32_t>(edit.new_target));
    v_gen = inc_gen_r(y, z, resp.p, resp.q);
  });

  TableEdit prod_edit = edit;
  prod_edit.agent = 0;
  ProductFSA prod_b = base;
  std::vector<std::uint32_t> restarts;
  double b_p = timed_seconds([&] {
    auto [next, ni] = inc_product_ni(std::move(prod_b), 0, prod_edit, pre_ctx);
    prod_b = std::move(next);
    restarts = std::move(ni);
  });
  Verdict v_inc;
  double b_v = timed_seconds([&] {
    auto [v, c] = inc_at_ni(prod_b.fsa(), restarts, prod_edit, pre_ctx);
    v_inc = std::move(v);
  });

  ProductFSA prod_c;
  double c_p = timed_seconds([&] { prod_c = product_with_property(edited, neg); });
  Verdict v_tot;
  double c_v = timed_seconds([&] {
    auto [v, c] = total_at(prod_c.fsa());
    v_tot = std::move(v);
  });

  report.verdicts_agree = v_inc.status == v_tot.status;
  report.inc_counts_match_total = v_inc.errors.size() == v_tot.errors.size();
  if (collect_oracle) {
    bool violated = oracle_response(edited, resp.p, resp.q, false, edited.state_count());
    report.gen_r_false_error = v_gen.status == Status::Avoid && !violated;
    if (v_gen.passed() && violated)
      throw ContractViolation("condition-level response check passed a violating plan");
  }
  report.rows = {
      {"Inc_gen-R", "v+b", t_gen, static_cast<double>(v_gen.errors.size())},
      {"Inc_prod-NI", "p", b_p, kNoErrCount},
      {"Inc_AT-NI", "v", b_v, static_cast<double>(v_inc.errors.size())},
      {"Inc_AT-NI", "b", b_p + b_v, kNoErrCount},
      {"Total_prod", "p", c_p, kNoErrCount},
      {"Total_AT", "v", c_v, static_cast<double>(v_tot.errors.size())},
      {"Total_AT", "b", c_p + c_v, kNoErrCount},
  };
  return report;
}

// ---- suite aggregation ----

enum class Protocol : std::uint8_t { Change, Gen };

struct SuiteConfig {
  GenConfig base;
  Protocol protocol = Protocol::Change;
  std::vector<std::size_t> sizes = {8, 15};
  std::size_t runs_per_property = 6;
  std::size_t warmup_trials = 3;
  std::vector<Property> properties;  // mixed classes allowed
  std::uint64_t seed = 1;
  // Optional cap on the number of measured Response trials at the largest
  // size (the total search dominates the budget there).
  std::optional<std::size_t> max_response_trials_at_largest = std::nullopt;
  bool collect_oracle = true;
};

struct SuiteRow {
  PropertyClass cls;
  std::string algorithm;
  std::string role;
  std::size_t size = 0;
  std::size_t trials = 0;
  double mean_sec = 0;
  double median_sec = 0;
  double spd = 1.0;          // mean seconds over the total counterpart's mean
  double median_spd = 1.0;   // same ratio on medians
  double err_mean = kNoErrCount;
};

struct SuiteReport {
  Protocol protocol = Protocol::Change;
  std::vector<SuiteRow> rows;
  std::size_t trials_run = 0;
  std::size_t agreement_failures = 0;
  std::size_t count_mismatches = 0;
  std::size_t gen_r_false_errors = 0;
  std::size_t gen_r_avoid_total = 0;
};

namespace harness_detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// The total-pipeline row each incremental row is compared against.
inline std::string total_counterpart(Protocol protocol, PropertyClass cls,
                                     const std::string& role) {
  const bool inv = cls == PropertyClass::Invariance;
  if (role == "p") return "Total_prod";
  if (protocol == Protocol::Change) return inv ? "Total_I (total)" : "Total_AT (total)";
  return inv ? "Total_I" : "Total_AT";
}

}  // namespace harness_detail

/// Runs the selected protocol over the size grid and property suite and
/// aggregates per-algorithm timing rows. Trials are serial; each measured
/// cell is preceded by discarded warmup trials.
inline SuiteReport run_suite(const SuiteConfig& cfg) {
  SuiteReport report;
  report.protocol = cfg.protocol;
  UniversePtr u = make_universe(cfg.base);

  // Rebind properties onto the suite's universe instance.
  std::vector<Property> properties;
  for (const auto& prop : cfg.properties) {
    if (property_trigger(prop).universe()->signature() != u->signature())
      throw InputError("property suite universe mismatch");
    properties.push_back(prop);
  }
  if (properties.empty()) throw InputError("suite needs at least one property");

  Rng seeder(cfg.seed);
  const std::size_t largest = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());

  struct Key {
    PropertyClass cls;
    std::string algorithm;
    std::string role;
    std::size_t size;
    bool operator<(const Key& o) const {
      return std::tie(cls, algorithm, role, size) < std::tie(o.cls, o.algorithm, o.role, o.size);
    }
  };
  std::map<Key, std::vector<double>> secs;
  std::map<Key, std::vector<double>> errs;
  std::vector<Key> order;  // first-seen order, per size

  auto run_one = [&](const GenConfig& gen, const Property& prop, std::uint64_t seed,
                     bool measured) {
    TrialReport trial = cfg.protocol == Protocol::Change
                            ? run_change_trial(gen, prop, seed, u)
                            : run_gen_trial(gen, prop, seed, u, cfg.collect_oracle);
    if (!measured) return;
    ++report.trials_run;
    if (!trial.verdicts_agree) ++report.agreement_failures;
    if (!trial.inc_counts_match_total) ++report.count_mismatches;
    if (cfg.protocol == Protocol::Gen && trial.cls == PropertyClass::Response) {
      for (const auto& row : trial.rows)
        if (row.algorithm == "Inc_gen-R" && row.err > 0) ++report.gen_r_avoid_total;
      if (trial.gen_r_false_error) ++report.gen_r_false_errors;
    }
    for (const auto& row : trial.rows) {
      Key key{trial.cls, row.algorithm, row.role, gen.states_per_agent};
      auto [it, inserted] = secs.try_emplace(key);
      if (inserted) order.push_back(key);
      it->second.push_back(row.seconds);
      if (row.err != kNoErrCount) errs[key].push_back(row.err);
    }
  };

  for (std::size_t size : cfg.sizes) {
    GenConfig gen = cfg.base;
    gen.states_per_agent = size;
    for (PropertyClass cls : {PropertyClass::Invariance, PropertyClass::Response}) {
      std::vector<const Property*> in_class;
      for (const auto& prop : properties)
        if ((cls == PropertyClass::Invariance) == is_invariance(prop))
          in_class.push_back(&prop);
      if (in_class.empty()) continue;

      std::size_t budget = in_class.size() * cfg.runs_per_property;
      if (cls == PropertyClass::Response && size == largest &&
          cfg.max_response_trials_at_largest)
        budget = std::min(budget, *cfg.max_response_trials_at_largest);

      for (std::size_t w = 0; w < cfg.warmup_trials; ++w)
        run_one(gen, *in_class[w % in_class.size()], seeder.next(), false);
      for (std::size_t t = 0; t < budget; ++t)
        run_one(gen, *in_class[t % in_class.size()], seeder.next(), true);
    }
  }

  for (const auto& key : order) {
    SuiteRow row;
    row.cls = key.cls;
    row.algorithm = key.algorithm;
    row.role = key.role;
    row.size = key.size;
    row.trials = secs[key].size();
    row.mean_sec = harness_detail::mean(secs[key]);
    row.median_sec = harness_detail::median(secs[key]);
    auto eit = errs.find(key);
    row.err_mean = eit == errs.end() ? kNoErrCount : harness_detail::mean(eit->second);
    Key total_key{key.cls, harness_detail::total_counterpart(cfg.protocol, key.cls, key.role),
                  key.role, key.size};
    // A condition-level "v+b" row compares against the total pipeline's "b".
    if (key.role == "v+b" && secs.count(total_key) == 0) total_key.role = "b";
    auto tit = secs.find(total_key);
    if (tit != secs.end() && !tit->second.empty()) {
      double tm = harness_detail::mean(tit->second);
      double tmed = harness_detail::median(tit->second);
      if (tm > 0) row.spd = row.mean_sec / tm;
      if (tmed > 0) row.median_spd = row.median_sec / tmed;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline std::string suite_to_csv(const SuiteReport& report) {
  std::ostringstream out;
  out << "class,algorithm,role,size,trials,mean_sec,median_sec,spd,median_spd,err\n";
  for (const auto& r : report.rows) {
    out << (r.cls == PropertyClass::Invariance ? "invariance" : "response") << ','
        << r.algorithm << ',' << r.role << ',' << r.size << ',' << r.trials << ','
        << r.mean_sec << ',' << r.median_sec << ',' << r.spd << ',' << r.median_spd << ',';
    if (r.err_mean == kNoErrCount)
      out << "N/A";
    else
      out << r.err_mean;
    out << '\n';
  }
  return out.str();
}

// ---- evolutionary loop skeleton ----

struct EvolutionConfig {
  GenConfig gen;
  Situation situation = Situation::OnePlan;
  std::size_t population_size = 1;
  std::size_t generations = 40;
  std::vector<OperatorSchema> operator_menu = {OperatorSchema::Gen};
  std::vector<Property> properties;
  std::uint64_t seed = 1;
  std::size_t oracle_spot_check_every = 10;  // 0 disables
  std::string fitness_id = "defined-cells";
  // Scores an individual's plans; higher is fitter. Defaults to the count of
  // defined delta cells, a placeholder.
  std::function<double(const std::vector<PlanFSA>&)> fitness;
};

struct EvolutionEvent {
  std::size_t generation = 0;
  std::size_t individual = 0;
  std::string text;
};

struct EvolutionLog {
  std::vector<EvolutionEvent> events;
  std::vector<double> best_fitness;  // per generation
  std::size_t reverifications = 0;
  std::size_t reverts = 0;
  std::size_t ctx_refreshes = 0;

  std::string to_text() const {
    std::ostringstream out;
    for (const auto& e : events)
      out << "g" << e.generation << " i" << e.individual << ": " << e.text << "\n";
    out << "reverifications=" << reverifications << " reverts=" << reverts
        << " ctx_refreshes=" << ctx_refreshes << "\n";
    return out.str();
  }
};

namespace harness_detail {

/// Per-property verification target of one individual: the automaton actually
/// checked (plan product, with the property negation appended for response
/// properties) plus the persisted context. A context is usable by the
/// incremental methods only while `fresh`; a verification that does not
/// traverse (or an edit committed without one) leaves it stale, and the next
/// method that needs it is preceded by a total rerun.
struct CheckTarget {
  ProductFSA target;
  VerificationContext ctx;
  bool fresh = false;
};

}  // namespace harness_detail

/// The adaptation loop: per generation and individual, draw an operator from
/// the menu, instantiate it randomly, consult the decision table on the
/// edit's classification (the most favorable applicable row wins), verify
/// with the recommended method where one is required, and revert the edit on
/// FAIL/AVOID. Selection replaces the worst individual with a copy of the
/// best after every generation.
inline EvolutionLog evolve(const EvolutionConfig& cfg) {
  if (cfg.properties.empty()) throw InputError("evolve needs at least one property");
  UniversePtr u = make_universe(cfg.gen);
  for (const auto& prop : cfg.properties)
    if (property_trigger(prop).universe()->signature() != u->signature())
      throw InputError("property universe mismatch");
  Rng rng(cfg.seed);
  EvolutionLog log;

  auto fitness = cfg.fitness;
  if (!fitness)
    fitness = [](const std::vector<PlanFSA>& plans) {
      double defined = 0;
      for (const auto& p : plans)
        for (auto d : p.delta())
          if (d != kUndefined) ++defined;
      return defined;
    };

  struct Individual {
    std::vector<PlanFSA> plans;
    std::vector<harness_detail::CheckTarget> checks;  // one per property
    double fitness = 0;
  };

  const std::size_t n_agents =
      cfg.situation == Situation::MultPlans ? cfg.gen.alphabets.size() : 1;

  auto build_target = [&](const std::vector<PlanFSA>& plans, const Property& prop) {
    std::vector<PlanFSA> comps = plans;
    if (!is_invariance(prop)) comps.push_back(negation_fsa(prop));
    return total_product(std::span<const PlanFSA>(comps));
  };
  auto total_verify = [&](harness_detail::CheckTarget& check, const Property& prop) {
    if (is_invariance(prop)) {
      auto [v, c] = total_i(check.target.fsa(), property_trigger(prop));
      check.ctx = std::move(c);
      check.fresh = true;
      return v;
    }
    auto [v, c] = total_at(check.target.fsa());
    check.ctx = std::move(c);
    check.fresh = true;
    return v;
  };

  // Initial population: dense property-satisfying plans. Multi-property runs
  // block the union of the constrained columns.
  std::vector<Individual> population;
  for (std::size_t i = 0; i < cfg.population_size; ++i) {
    Individual ind;
    AtomSet blocked(u);
    for (const auto& prop : cfg.properties) blocked = blocked.join(property_trigger(prop));
    Rng sub = rng.fork();
    for (std::size_t k = 0; k < n_agents; ++k) {
      std::string name = cfg.situation == Situation::MultPlans
                             ? cfg.gen.alphabets[k].agent_name
                             : std::string("plan");
      ind.plans.push_back(harness_detail::random_table(
          u, cfg.gen.states_per_agent, blocked, cfg.gen.density == Density::DenseEngineered,
          cfg.gen.fill_probability, std::move(name), sub));
    }
    for (const auto& prop : cfg.properties) {
      harness_detail::CheckTarget check;
      check.target = build_target(ind.plans, prop);
      Verdict v = total_verify(check, prop);
      if (!v.passed())
        throw ContractViolation("initial population violates a property; seed a denser start");
      ind.checks.push_back(std::move(check));
    }
    ind.fitness = fitness(ind.plans);
    population.push_back(std::move(ind));
  }

  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    for (std::size_t i = 0; i < population.size(); ++i) {
      Individual& ind = population[i];
      OperatorSchema drawn = cfg.operator_menu[rng.below(cfg.operator_menu.size())];
      auto agent = static_cast<std::uint32_t>(rng.below(n_agents));
      auto maybe_edit = random_edit(ind.plans[agent], drawn, rng);
      if (!maybe_edit) {
        log.events.push_back({gen, i, std::string(schema_name(drawn)) + ": no candidate"});
        continue;
      }
      TableEdit edit = *maybe_edit;
      edit.agent = static_cast<std::int32_t>(agent);
      auto schemas = classify_edit(ind.plans[agent], edit);

      // Most favorable applicable classification per property: a safe row
      // wins outright, otherwise the most specific classification refining
      // the drawn schema.
      auto recommend = [&](PropertyClass cls) {
        for (auto s : schemas)
          if (SafetyVerdict v = sml_lookup(s, cfg.situation, cls); v.none_needed) return v;
        for (auto s : schemas)
          if (schema_specializes(s, drawn)) return sml_lookup(s, cfg.situation, cls);
        return sml_lookup(drawn, cfg.situation, cls);
      };

      // y for the condition-level response check: prior condition on the
      // generalized edge, read before the edit lands.
      AtomSet y(u), z(u);
      z.insert(edit.atom);
      if (edit.new_target != kUndefined)
        y = transition_condition(ind.plans[agent], edit.state,
                                 static_cast<std::uint32_t>(edit.new_target));

      std::vector<PlanFSA> new_plans = ind.plans;
      new_plans[agent] = apply_edit(ind.plans[agent], edit);

      bool rejected = false;
      std::string how;
      std::vector<harness_detail::CheckTarget> new_checks;
      for (std::size_t pi = 0; pi < cfg.properties.size() && !rejected; ++pi) {
        const Property& prop = cfg.properties[pi];
        PropertyClass cls =
            is_invariance(prop) ? PropertyClass::Invariance : PropertyClass::Response;
        SafetyVerdict rec = recommend(cls);
        harness_detail::CheckTarget check = ind.checks[pi];  // copy; revert keeps original
        if (rec.none_needed) {
          check.target = inc_product(std::move(check.target), agent, edit);
          check.ctx.fsa_id = check.target.fsa().provenance_id();
          // Safe operators never increase accessibility, so the carried
          // visited flags stay a sound over-approximation of reachability.
          how += (how.empty() ? "" : ",") + std::string("none");
          new_checks.push_back(std::move(check));
          continue;
        }
        ++log.reverifications;
        how += (how.empty() ? "" : ",") + std::string(method_name(rec.method));
        Verdict verdict;
        switch (rec.method) {
          case CheckMethod::IncGenI: {
            if (!check.fresh) {
              ++log.ctx_refreshes;
              total_verify(check, prop);
            }
            bool v1_visited = check.ctx.visited[edit.state] != 0;
            verdict = inc_gen_i(v1_visited, z, property_trigger(prop));
            check.target = inc_product(std::move(check.target), agent, edit);
            check.ctx.fsa_id = check.target.fsa().provenance_id();
            break;
          }
          case CheckMethod::IncGenR: {
            const auto& resp = std::get<ResponseProperty>(prop);
            verdict = inc_gen_r(y, z, resp.p, resp.q);
            check.target = inc_product(std::move(check.target), agent, edit);
            check.ctx.fsa_id = check.target.fsa().provenance_id();
            check.fresh = false;
            break;
          }
          case CheckMethod::IncINI: {
            if (!check.fresh) {
              ++log.ctx_refreshes;
              total_verify(check, prop);
            }
            VerificationContext pre = check.ctx;
            auto [next, restarts] =
                inc_product_ni(std::move(check.target), agent, edit, pre);
            check.target = std::move(next);
            auto [v, c] =
                inc_i_ni(check.target.fsa(), property_trigger(prop), restarts, edit, pre);
            verdict = std::move(v);
            check.ctx = std::move(c);
            check.fresh = true;
            break;
          }
          case CheckMethod::IncATNI: {
            if (!check.fresh) {
              ++log.ctx_refreshes;
              total_verify(check, prop);
            }
            VerificationContext pre = check.ctx;
            auto [next, restarts] =
                inc_product_ni(std::move(check.target), agent, edit, pre);
            check.target = std::move(next);
            auto [v, c] = inc_at_ni(check.target.fsa(), restarts, edit, pre);
            verdict = std::move(v);
            check.ctx = std::move(c);
            check.fresh = false;  // restart-cone coverage only
            break;
          }
          case CheckMethod::TotalI:
          case CheckMethod::TotalAT: {
            check.target = build_target(new_plans, prop);
            verdict = total_verify(check, prop);
            break;
          }
        }
        if (!verdict.passed()) {
          rejected = true;
          ++log.reverts;
          log.events.push_back({gen, i,
                                std::string(schema_name(drawn)) + " via " + how + ": " +
                                    std::string(status_name(verdict.status)) + ", reverted"});
          break;
        }
        new_checks.push_back(std::move(check));
      }
      if (rejected) continue;
      ind.plans = std::move(new_plans);
      ind.checks = std::move(new_checks);
      ind.fitness = fitness(ind.plans);
      log.events.push_back(
          {gen, i, std::string(schema_name(drawn)) + " via " + (how.empty() ? "none" : how) +
                       ": kept (fitness " + std::to_string(ind.fitness) + ")"});
    }

    // Elitist broadcast: worst individual replaced by a copy of the best.
    if (population.size() > 1) {
      std::size_t best = 0, worst = 0;
      for (std::size_t i = 1; i < population.size(); ++i) {
        if (population[i].fitness > population[best].fitness) best = i;
        if (population[i].fitness < population[worst].fitness) worst = i;
      }
      if (best != worst) population[worst] = population[best];
    }
    double best_fit = population[0].fitness;
    for (const auto& ind : population) best_fit = std::max(best_fit, ind.fitness);
    log.best_fitness.push_back(best_fit);

    if (cfg.oracle_spot_check_every && gen % cfg.oracle_spot_check_every == 0) {
      for (const auto& ind : population)
        for (std::size_t pi = 0; pi < cfg.properties.size(); ++pi) {
          const Property& prop = cfg.properties[pi];
          bool violated;
          if (is_invariance(prop)) {
            violated = oracle_invariance(ind.checks[pi].target.fsa(), property_trigger(prop),
                                         ind.checks[pi].target.fsa().state_count());
          } else {
            const auto& resp = std::get<ResponseProperty>(prop);
            // Dense initialization plus one gated operator per generation
            // preserves the full property; sparse starts are only guaranteed
            // the first-trigger reading.
            bool first_only = cfg.gen.density == Density::SparseRetry;
            PlanFSA joint = total_product(std::span<const PlanFSA>(ind.plans)).fsa();
            violated = oracle_response(joint, resp.p, resp.q, first_only, joint.state_count());
          }
          if (violated)
            throw ContractViolation("oracle spot check failed at generation " +
                                    std::to_string(gen));
        }
      log.events.push_back({gen, 0, "oracle spot check passed"});
    }
  }
  return log;
}

inline std::string suite_to_text(const SuiteReport& report) {
  std::ostringstream out;
  out << "protocol: " << (report.protocol == Protocol::Change ? "change" : "gen") << "\n";
  out << "trials: " << report.trials_run
      << "  agreement failures: " << report.agreement_failures
      << "  error-count mismatches: " << report.count_mismatches << "\n";
  if (report.protocol == Protocol::Gen && report.gen_r_avoid_total > 0) {
    out << "Inc_gen-R avoid verdicts: " << report.gen_r_avoid_total
        << "  false errors: " << report.gen_r_false_errors << " ("
        << (100.0 * static_cast<double>(report.gen_r_false_errors) /
            static_cast<double>(report.gen_r_avoid_total))
        << "%)\n";
  }
  std::size_t last_size = static_cast<std::size_t>(-1);
  PropertyClass last_cls = PropertyClass::Response;
  bool first = true;
  for (const auto& r : report.rows) {
    if (first || r.size != last_size || r.cls != last_cls) {
      first = false;
      out << "-- " << (r.cls == PropertyClass::Invariance ? "invariance" : "response")
          << " properties, " << r.size << " states per agent --\n";
      last_size = r.size;
      last_cls = r.cls;
    }
    std::ostringstream name;
    name << r.algorithm << " (" << r.role << ")";
    out << "  " << name.str();
    for (std::size_t i = name.str().size(); i < 24; ++i) out << ' ';
    char buf[96];
    std::snprintf(buf, sizeof buf, "sec %-12.6g spd %-10.4g", r.mean_sec, r.spd);
    out << buf;
    if (r.err_mean != kNoErrCount) {
      std::snprintf(buf, sizeof buf, " err %.4g", r.err_mean);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace plancheck
