#pragma once

// The verification algorithms: invariance search and automata-theoretic
// nested depth-first search, each in a total form and in incremental forms
// that resume from the previous verification's visited flags. All traversal
// uses explicit stacks; state counts around 45^3 must not overflow the call
// stack. Traversal order is fixed (initials in declaration order, atoms in
// universe order) so verdicts, error order and witnesses are reproducible.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "plancheck/product.hpp"
#include "plancheck/property.hpp"

namespace plancheck {

enum class Status : std::uint8_t { Pass, Fail, Avoid };

inline std::string_view status_name(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Avoid: return "AVOID";
  }
  return "?";
}

enum class ErrorMode : std::uint8_t { FirstError, AllErrors };

/// Marker state index for reports that have no associated automaton state
/// (the condition-level generalization checks).
inline constexpr std::uint32_t kNoState = std::numeric_limits<std::uint32_t>::max();

struct ErrorReport {
  enum class Kind : std::uint8_t { BadAtom, BadCycle };

  Kind kind = Kind::BadAtom;
  std::uint32_t state = kNoState;  // offending state, or the bad-cycle seed
  Atom atom{};                     // BadAtom only

  // BadCycle witness: outer search prefix from its start state to the seed,
  // then the cycle returning to the seed.
  std::vector<std::uint32_t> path_states;
  std::vector<Atom> path_atoms;
  std::vector<std::uint32_t> cycle_states;
  std::vector<Atom> cycle_atoms;
};

struct Verdict {
  Status status = Status::Pass;
  std::vector<ErrorReport> errors;
  bool passed() const { return status == Status::Pass; }
};

/// In all-errors mode only the first few bad-cycle reports carry full witness
/// paths; later ones record the seed alone. Error counts are exact either
/// way, and witness extraction stays O(1) in the error count.
inline constexpr std::size_t kMaxDetailedWitnesses = 16;

/// Persisted traversal state from the most recent verification of one
/// concrete automaton/property pair. Any table edit outside the sanctioned
/// incremental flows invalidates it.
struct VerificationContext {
  std::uint64_t fsa_id = 0;
  std::uint64_t property_id = 0;  // 0 for automata-theoretic runs
  std::vector<char> visited;
  Status last_verdict = Status::Pass;
  std::vector<char> visited2;  // nested-search scratch, reused between calls

  bool matches(std::uint64_t fsa, std::uint64_t prop, std::size_t states) const {
    return fsa_id == fsa && property_id == prop && visited.size() == states;
  }
};

namespace checker_detail {

struct Frame {
  std::uint32_t state;
  std::uint32_t cursor;      // next atom index to consider
  Atom entry;                // atom that led into this frame (undefined at roots)
  bool adapt_only = false;   // incremental: expansion restricted to a_adapt
};

inline std::vector<Atom> atoms_of(const AtomSet& p) { return p.atoms(); }

/// Nested search for a cycle back to `seed`. Returns true and fills the
/// witness on success. visited2 is reset here, once per seed.
inline bool nested_search(const PlanFSA& fsa, std::uint32_t seed, std::vector<char>& visited2,
                          std::vector<std::uint32_t>& cycle_states, std::vector<Atom>& cycle_atoms) {
  visited2.assign(fsa.state_count(), 0);
  std::vector<Frame> stack;
  visited2[seed] = 1;
  stack.push_back({seed, 0, Atom{}, false});
  const auto n_atoms = static_cast<std::uint32_t>(fsa.atom_count());
  while (!stack.empty()) {
    Frame& f = stack.back();
    bool descended = false;
    while (f.cursor < n_atoms) {
      Atom a{f.cursor++};
      std::int32_t w = fsa.next(f.state, a);
      if (w == kUndefined) continue;
      if (static_cast<std::uint32_t>(w) == seed) {
        cycle_states.clear();
        cycle_atoms.clear();
        for (const Frame& g : stack) cycle_states.push_back(g.state);
        for (std::size_t i = 1; i < stack.size(); ++i) cycle_atoms.push_back(stack[i].entry);
        cycle_atoms.push_back(a);
        cycle_states.push_back(seed);
        return true;
      }
      if (!visited2[w]) {
        visited2[w] = 1;
        stack.push_back({static_cast<std::uint32_t>(w), 0, a, false});
        descended = true;
        break;
      }
    }
    if (!descended) stack.pop_back();
  }
  return false;
}

}  // namespace checker_detail

/// Invariance verification by exhaustive depth-first search: flags every
/// accessible atom of p. Returns the verdict and a context whose visited
/// flags reflect the full traversal.
inline std::pair<Verdict, VerificationContext> total_i(const PlanFSA& plan, const AtomSet& p,
                                                       ErrorMode mode = ErrorMode::AllErrors) {
  if (p.universe()->signature() != plan.universe()->signature())
    throw InputError("property and plan use different universes");
  VerificationContext ctx;
  ctx.fsa_id = plan.provenance_id();
  ctx.property_id = p.content_hash();
  ctx.visited.assign(plan.state_count(), 0);

  Verdict verdict;
  const std::vector<Atom> bad_atoms = checker_detail::atoms_of(p);
  const auto n_atoms = static_cast<std::uint32_t>(plan.atom_count());
  std::vector<checker_detail::Frame> stack;
  bool halt = false;

  auto expand = [&](std::uint32_t v) {
    ctx.visited[v] = 1;
    for (Atom a : bad_atoms) {
      if (plan.next(v, a) == kUndefined) continue;
      verdict.errors.push_back({ErrorReport::Kind::BadAtom, v, a, {}, {}, {}, {}});
      if (mode == ErrorMode::FirstError) {
        halt = true;
        return;
      }
    }
  };

  for (auto root : plan.initial()) {
    if (halt) break;
    if (ctx.visited[root]) continue;
    expand(root);
    stack.assign(1, {root, 0, Atom{}, false});
    while (!stack.empty() && !halt) {
      checker_detail::Frame& f = stack.back();
      bool descended = false;
      while (f.cursor < n_atoms) {
        Atom a{f.cursor++};
        std::int32_t w = plan.next(f.state, a);
        if (w == kUndefined || ctx.visited[w]) continue;
        expand(static_cast<std::uint32_t>(w));
        if (halt) break;
        stack.push_back({static_cast<std::uint32_t>(w), 0, a, false});
        descended = true;
        break;
      }
      if (!descended && !halt) stack.pop_back();
    }
  }

  verdict.status = verdict.errors.empty() ? Status::Pass : Status::Fail;
  ctx.last_verdict = verdict.status;
  return {std::move(verdict), std::move(ctx)};
}

/// Automata-theoretic verification: outer depth-first search over a Buchi
/// automaton; every visited bad state seeds a nested search for a cycle back
/// to itself. One error per seed whose nested search succeeds, witness kept
/// from the first cycle found.
inline std::pair<Verdict, VerificationContext> total_at(const PlanFSA& buchi,
                                                        ErrorMode mode = ErrorMode::AllErrors) {
  VerificationContext ctx;
  ctx.fsa_id = buchi.provenance_id();
  ctx.property_id = 0;
  ctx.visited.assign(buchi.state_count(), 0);

  Verdict verdict;
  const auto n_atoms = static_cast<std::uint32_t>(buchi.atom_count());
  std::vector<checker_detail::Frame> stack;
  bool halt = false;

  // Entry actions for a newly visited state: the seed check runs before any
  // successor of v is expanded. `via` is the atom taken into v (roots have
  // none); the in-progress stack plus `via` forms the access path.
  std::vector<std::uint32_t> cyc_states;
  std::vector<Atom> cyc_atoms;
  auto enter = [&](std::uint32_t v, bool has_via, Atom via) {
    ctx.visited[v] = 1;
    if (!buchi.is_bad(v)) return;
    if (!checker_detail::nested_search(buchi, v, ctx.visited2, cyc_states, cyc_atoms)) return;
    ErrorReport report;
    report.kind = ErrorReport::Kind::BadCycle;
    report.state = v;
    if (mode == ErrorMode::FirstError || verdict.errors.size() < kMaxDetailedWitnesses) {
      report.cycle_states = cyc_states;
      report.cycle_atoms = cyc_atoms;
      for (const auto& g : stack) report.path_states.push_back(g.state);
      report.path_states.push_back(v);
      for (std::size_t i = 1; i < stack.size(); ++i)
        report.path_atoms.push_back(stack[i].entry);
      if (has_via) report.path_atoms.push_back(via);
    }
    verdict.errors.push_back(std::move(report));
    if (mode == ErrorMode::FirstError) halt = true;
  };

  for (auto root : buchi.initial()) {
    if (halt) break;
    if (ctx.visited[root]) continue;
    stack.clear();
    enter(root, false, Atom{});
    stack.push_back({root, 0, Atom{}, false});
    while (!stack.empty() && !halt) {
      checker_detail::Frame& f = stack.back();
      bool descended = false;
      while (f.cursor < n_atoms) {
        Atom a{f.cursor++};
        std::int32_t w = buchi.next(f.state, a);
        if (w == kUndefined || ctx.visited[w]) continue;
        enter(static_cast<std::uint32_t>(w), true, a);
        if (halt) break;
        stack.push_back({static_cast<std::uint32_t>(w), 0, a, false});
        descended = true;
        break;
      }
      if (!descended && !halt) stack.pop_back();
    }
  }

  verdict.status = verdict.errors.empty() ? Status::Pass : Status::Fail;
  ctx.last_verdict = verdict.status;
  return {std::move(verdict), std::move(ctx)};
}

namespace checker_detail {

inline void require_successor_ctx(const VerificationContext& ctx, const TableEdit& edit,
                                  const PlanFSA& post, std::uint64_t property_id) {
  if (mix_edit(ctx.fsa_id, edit) != post.provenance_id() || ctx.property_id != property_id ||
      ctx.visited.size() != post.state_count())
    throw ContractViolation(
        "stale verification context: it does not describe the pre-edit automaton");
}

}  // namespace checker_detail

/// The single-automaton degenerate rule for deriving the incremental restart
/// set: the edited cell's source state, if the previous verification visited
/// it.
inline std::vector<std::uint32_t> derive_new_initials_1plan(const VerificationContext& ctx,
                                                            const TableEdit& edit) {
  if (edit.state >= ctx.visited.size()) throw InputError("edit state out of range");
  if (ctx.visited[edit.state]) return {edit.state};
  return {};
}

/// Incremental invariance reverification after a single-cell edit. Resets the
/// visited flag only for the restart states; from each of them the first
/// transition considered is the edited atom (checking it against p), after
/// which the search proceeds exactly like total_i. Complete for invariance
/// whenever the pre-edit plan satisfied the property.
inline std::pair<Verdict, VerificationContext> inc_i_ni(
    const PlanFSA& post_plan, const AtomSet& p, std::span<const std::uint32_t> new_initials,
    const TableEdit& edit, VerificationContext ctx, ErrorMode mode = ErrorMode::AllErrors) {
  checker_detail::require_successor_ctx(ctx, edit, post_plan, p.content_hash());
  ctx.fsa_id = post_plan.provenance_id();

  std::vector<char> is_restart(post_plan.state_count(), 0);
  for (auto v : new_initials) {
    if (v >= post_plan.state_count()) throw InputError("restart state out of range");
    is_restart[v] = 1;
    ctx.visited[v] = 0;
  }

  Verdict verdict;
  const std::vector<Atom> bad_atoms = checker_detail::atoms_of(p);
  const Atom a_adapt = edit.atom;
  const bool adapt_in_p = p.contains(a_adapt);
  const auto n_atoms = static_cast<std::uint32_t>(post_plan.atom_count());
  std::vector<checker_detail::Frame> stack;
  bool halt = false;

  // Marks v visited and decides its expansion style. Restart states whose
  // edited-atom transition is defined take only that transition (after
  // checking the edited atom against p); everything else expands in full.
  auto enter = [&](std::uint32_t v) -> bool {
    ctx.visited[v] = 1;
    std::int32_t w = post_plan.next(v, a_adapt);
    if (is_restart[v] && w != kUndefined) {
      if (adapt_in_p) {
        verdict.errors.push_back({ErrorReport::Kind::BadAtom, v, a_adapt, {}, {}, {}, {}});
        if (mode == ErrorMode::FirstError) halt = true;
      }
      return true;
    }
    for (Atom a : bad_atoms) {
      if (post_plan.next(v, a) == kUndefined) continue;
      verdict.errors.push_back({ErrorReport::Kind::BadAtom, v, a, {}, {}, {}, {}});
      if (mode == ErrorMode::FirstError) {
        halt = true;
        break;
      }
    }
    return false;
  };

  for (auto root : new_initials) {
    if (halt) break;
    if (ctx.visited[root]) continue;
    bool adapt_only = enter(root);
    if (halt) break;
    stack.assign(1, {root, 0, Atom{}, adapt_only});
    while (!stack.empty() && !halt) {
      checker_detail::Frame& f = stack.back();
      bool descended = false;
      while (f.cursor < n_atoms) {
        Atom a = f.adapt_only ? a_adapt : Atom{f.cursor};
        f.cursor = f.adapt_only ? n_atoms : f.cursor + 1;
        std::int32_t w = post_plan.next(f.state, a);
        if (w == kUndefined || ctx.visited[w]) continue;
        bool child_adapt_only = enter(static_cast<std::uint32_t>(w));
        if (halt) break;
        stack.push_back({static_cast<std::uint32_t>(w), 0, a, child_adapt_only});
        descended = true;
        break;
      }
      if (!descended && !halt) stack.pop_back();
    }
  }

  verdict.status = verdict.errors.empty() ? Status::Pass : Status::Fail;
  ctx.last_verdict = verdict.status;
  return {std::move(verdict), std::move(ctx)};
}

/// Incremental automata-theoretic reverification. Visited flags are reset for
/// all states; the search restarts from the given states, restricted to the
/// edited atom on the first step out of a restart state when that cell is
/// defined and its target unvisited. The nested search is unchanged. Sound
/// for downstream and directionless properties; finds every violation newly
/// introduced by the edit.
inline std::pair<Verdict, VerificationContext> inc_at_ni(
    const PlanFSA& post_buchi, std::span<const std::uint32_t> new_initials,
    const TableEdit& edit, VerificationContext ctx, ErrorMode mode = ErrorMode::AllErrors) {
  checker_detail::require_successor_ctx(ctx, edit, post_buchi, 0);
  ctx.fsa_id = post_buchi.provenance_id();
  ctx.visited.assign(post_buchi.state_count(), 0);

  std::vector<char> is_restart(post_buchi.state_count(), 0);
  for (auto v : new_initials) {
    if (v >= post_buchi.state_count()) throw InputError("restart state out of range");
    is_restart[v] = 1;
  }

  Verdict verdict;
  const Atom a_adapt = edit.atom;
  const auto n_atoms = static_cast<std::uint32_t>(post_buchi.atom_count());
  std::vector<checker_detail::Frame> stack;
  bool halt = false;

  std::vector<std::uint32_t> cyc_states;
  std::vector<Atom> cyc_atoms;
  auto enter = [&](std::uint32_t v, bool has_via, Atom via) {
    ctx.visited[v] = 1;
    if (!post_buchi.is_bad(v)) return;
    if (!checker_detail::nested_search(post_buchi, v, ctx.visited2, cyc_states, cyc_atoms))
      return;
    ErrorReport report;
    report.kind = ErrorReport::Kind::BadCycle;
    report.state = v;
    if (mode == ErrorMode::FirstError || verdict.errors.size() < kMaxDetailedWitnesses) {
      report.cycle_states = cyc_states;
      report.cycle_atoms = cyc_atoms;
      for (const auto& g : stack) report.path_states.push_back(g.state);
      report.path_states.push_back(v);
      for (std::size_t i = 1; i < stack.size(); ++i)
        report.path_atoms.push_back(stack[i].entry);
      if (has_via) report.path_atoms.push_back(via);
    }
    verdict.errors.push_back(std::move(report));
    if (mode == ErrorMode::FirstError) halt = true;
  };

  // Expansion style is chosen when the state is expanded: restart states take
  // only the edited atom iff its target is defined and unvisited right then.
  auto adapt_only_now = [&](std::uint32_t v) {
    if (!is_restart[v]) return false;
    std::int32_t w = post_buchi.next(v, a_adapt);
    return w != kUndefined && !ctx.visited[w];
  };

  for (auto root : new_initials) {
    if (halt) break;
    if (ctx.visited[root]) continue;
    stack.clear();
    enter(root, false, Atom{});
    if (halt) break;
    stack.push_back({root, 0, Atom{}, adapt_only_now(root)});
    while (!stack.empty() && !halt) {
      checker_detail::Frame& f = stack.back();
      bool descended = false;
      while (f.cursor < n_atoms) {
        Atom a = f.adapt_only ? a_adapt : Atom{f.cursor};
        f.cursor = f.adapt_only ? n_atoms : f.cursor + 1;
        std::int32_t w = post_buchi.next(f.state, a);
        if (w == kUndefined || ctx.visited[w]) continue;
        enter(static_cast<std::uint32_t>(w), true, a);
        if (halt) break;
        stack.push_back({static_cast<std::uint32_t>(w), 0, a,
                         adapt_only_now(static_cast<std::uint32_t>(w))});
        descended = true;
        break;
      }
      if (!descended && !halt) stack.pop_back();
    }
  }

  verdict.status = verdict.errors.empty() ? Status::Pass : Status::Fail;
  ctx.last_verdict = verdict.status;
  return {std::move(verdict), std::move(ctx)};
}

/// Condition-level reverification of a generalization against an invariance
/// property: safe iff the edit site was never reachable or the added atoms
/// avoid p entirely. Sound and complete given pre-edit satisfaction.
inline Verdict inc_gen_i(bool v1_previously_visited, const AtomSet& z, const AtomSet& p,
                         ErrorMode mode = ErrorMode::FirstError) {
  Verdict verdict;
  if (!v1_previously_visited) return verdict;
  AtomSet offending = z.meet(p);
  offending.for_each([&](Atom a) {
    if (mode == ErrorMode::FirstError && !verdict.errors.empty()) return;
    verdict.errors.push_back({ErrorReport::Kind::BadAtom, kNoState, a, {}, {}, {}, {}});
  });
  if (!verdict.errors.empty()) verdict.status = Status::Avoid;
  return verdict;
}

/// Condition-level reverification of a generalization against a full
/// Response property. y is the edited edge's prior condition, z the added
/// atoms. If y lay inside the response set a response may be owed here, so z
/// must stay inside it too; in both branches the added atoms must introduce
/// no new trigger. Sound but not complete: AVOID can be a false error, and
/// carries no repair information.
inline Verdict inc_gen_r(const AtomSet& y, const AtomSet& z, const AtomSet& p, const AtomSet& q,
                         ErrorMode mode = ErrorMode::FirstError) {
  Verdict verdict;
  AtomSet offending = z.meet(p);
  if (y.leq(q)) offending = offending.join(z.meet(q.complement()));
  offending.for_each([&](Atom a) {
    if (mode == ErrorMode::FirstError && !verdict.errors.empty()) return;
    verdict.errors.push_back({ErrorReport::Kind::BadAtom, kNoState, a, {}, {}, {}, {}});
  });
  if (!verdict.errors.empty()) verdict.status = Status::Avoid;
  return verdict;
}

inline std::pair<ProductFSA, std::vector<std::uint32_t>> inc_product_ni(
    ProductFSA prev, std::uint32_t agent, const TableEdit& edit,
    const VerificationContext& ctx) {
  if (ctx.fsa_id != prev.fsa().provenance_id() || ctx.visited.size() != prev.fsa().state_count())
    throw ContractViolation("verification context does not describe this product");
  if (agent >= prev.component_count()) throw InputError("agent index out of range");
  if (edit.state >= prev.components()[agent].state_count())
    throw InputError("edit state out of range");

  // Product states formed from the edited component state that the previous
  // verification marked visited, in ascending order.
  std::vector<std::uint32_t> restarts;
  const std::size_t n = prev.component_count();
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t k = n; k-- > 1;)
    stride[k - 1] = stride[k] * prev.components()[k].state_count();
  std::vector<std::uint32_t> tuple(n, 0);
  tuple[agent] = edit.state;
  bool more = true;
  while (more) {
    std::size_t row = 0;
    for (std::size_t k = 0; k < n; ++k) row += stride[k] * tuple[k];
    if (ctx.visited[row]) restarts.push_back(static_cast<std::uint32_t>(row));
    std::size_t k = n;
    more = false;
    while (k-- > 0) {
      if (k == agent) continue;
      if (++tuple[k] < prev.components()[k].state_count()) {
        more = true;
        break;
      }
      tuple[k] = 0;
    }
  }
  std::sort(restarts.begin(), restarts.end());

  ProductFSA next = inc_product(std::move(prev), agent, edit);
  return {std::move(next), std::move(restarts)};
}

}  // namespace plancheck
