#pragma once

// Brute-force ground-truth semantics for small automata. Deliberately shares
// no traversal code with the checker: reachability is breadth-first and cycle
// detection goes through an iterative Tarjan SCC pass, so these functions can
// falsify the nested-DFS implementations rather than mirror them.

#include <cstdint>
#include <deque>
#include <vector>

#include "plancheck/automaton.hpp"

namespace plancheck {

inline constexpr std::size_t kDefaultOracleBound = 5000;

namespace oracle_detail {

inline void check_bound(const PlanFSA& fsa, std::size_t bound) {
  if (fsa.state_count() > bound)
    throw InputError("oracle refuses: " + std::to_string(fsa.state_count()) +
                     " states exceeds desk-scale bound " + std::to_string(bound));
}

/// Breadth-first reachability from `from` over edges whose atom passes `keep`.
template <typename AtomFilter>
std::vector<char> bfs_reachable(const PlanFSA& fsa, std::span<const std::uint32_t> from,
                                AtomFilter keep) {
  std::vector<char> seen(fsa.state_count(), 0);
  std::deque<std::uint32_t> queue;
  for (auto s : from) {
    if (!seen[s]) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    std::uint32_t v = queue.front();
    queue.pop_front();
    for (std::uint32_t a = 0; a < fsa.atom_count(); ++a) {
      if (!keep(Atom{a})) continue;
      std::int32_t w = fsa.next(v, Atom{a});
      if (w != kUndefined && !seen[w]) {
        seen[w] = 1;
        queue.push_back(static_cast<std::uint32_t>(w));
      }
    }
  }
  return seen;
}

/// Iterative Tarjan over the subgraph of states passing `node_ok` and edges
/// whose atom passes `keep`. Returns per-state SCC ids (-1 for excluded) and
/// fills `on_cycle` for states in a nontrivial SCC or with a kept self-loop.
template <typename AtomFilter>
void scc_cycle_states(const PlanFSA& fsa, const std::vector<char>& node_ok, AtomFilter keep,
                      std::vector<char>& on_cycle) {
  const std::size_t n = fsa.state_count();
  std::vector<std::int32_t> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::size_t> comp_size;
  std::int32_t counter = 0;

  struct Frame {
    std::uint32_t v;
    std::uint32_t atom;
  };
  std::vector<Frame> call;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (!node_ok[root] || index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      bool descended = false;
      while (f.atom < fsa.atom_count()) {
        Atom a{f.atom++};
        if (!keep(a)) continue;
        std::int32_t w32 = fsa.next(f.v, a);
        if (w32 == kUndefined) continue;
        auto w = static_cast<std::uint32_t>(w32);
        if (!node_ok[w]) continue;
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w] && index[w] < low[f.v]) low[f.v] = index[w];
      }
      if (descended) continue;
      std::uint32_t v = f.v;
      call.pop_back();
      if (!call.empty() && low[v] < low[call.back().v]) low[call.back().v] = low[v];
      if (low[v] == index[v]) {
        auto id = static_cast<std::int32_t>(comp_size.size());
        std::size_t size = 0;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = id;
          ++size;
        } while (w != v);
        comp_size.push_back(size);
      }
    }
  }

  on_cycle.assign(n, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (comp[v] < 0) continue;
    if (comp_size[comp[v]] > 1) {
      on_cycle[v] = 1;
      continue;
    }
    for (std::uint32_t a = 0; a < fsa.atom_count(); ++a)
      if (keep(Atom{a}) && fsa.next(v, Atom{a}) == static_cast<std::int32_t>(v)) {
        on_cycle[v] = 1;
        break;
      }
  }
}

/// States with an infinite continuation inside the kept subgraph: those that
/// can reach an on-cycle state through kept edges.
template <typename AtomFilter>
std::vector<char> can_diverge(const PlanFSA& fsa, AtomFilter keep) {
  const std::size_t n = fsa.state_count();
  std::vector<char> all(n, 1), cyc;
  scc_cycle_states(fsa, all, keep, cyc);

  // Backward closure over kept edges, predecessors in flat CSR form.
  std::vector<std::uint32_t> pred_count(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v)
    for (std::uint32_t a = 0; a < fsa.atom_count(); ++a) {
      if (!keep(Atom{a})) continue;
      std::int32_t w = fsa.next(v, Atom{a});
      if (w != kUndefined) ++pred_count[w + 1];
    }
  for (std::size_t i = 1; i <= n; ++i) pred_count[i] += pred_count[i - 1];
  std::vector<std::uint32_t> preds(pred_count[n]);
  std::vector<std::uint32_t> fill(pred_count.begin(), pred_count.end() - 1);
  for (std::uint32_t v = 0; v < n; ++v)
    for (std::uint32_t a = 0; a < fsa.atom_count(); ++a) {
      if (!keep(Atom{a})) continue;
      std::int32_t w = fsa.next(v, Atom{a});
      if (w != kUndefined) preds[fill[w]++] = v;
    }

  std::vector<char> out = cyc;
  std::vector<std::uint32_t> queue;
  for (std::uint32_t v = 0; v < n; ++v)
    if (out[v]) queue.push_back(v);
  while (!queue.empty()) {
    std::uint32_t w = queue.back();
    queue.pop_back();
    for (std::uint32_t i = pred_count[w]; i < pred_count[w + 1]; ++i) {
      std::uint32_t v = preds[i];
      if (!out[v]) {
        out[v] = 1;
        queue.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace oracle_detail

/// True iff the Buchi language is non-empty: some bad state is reachable from
/// an initial state and lies on a cycle.
inline bool lasso_emptiness(const PlanFSA& fsa, std::size_t bound = kDefaultOracleBound) {
  oracle_detail::check_bound(fsa, bound);
  auto any = [](Atom) { return true; };
  auto reach = oracle_detail::bfs_reachable(fsa, fsa.initial(), any);
  std::vector<char> on_cycle;
  oracle_detail::scc_cycle_states(fsa, reach, any, on_cycle);
  for (auto b : fsa.bad())
    if (reach[b] && on_cycle[b]) return true;
  return false;
}

/// True iff some accessible transition carries an atom of p.
inline bool oracle_invariance(const PlanFSA& plan, const AtomSet& p,
                              std::size_t bound = kDefaultOracleBound) {
  oracle_detail::check_bound(plan, bound);
  auto any = [](Atom) { return true; };
  auto reach = oracle_detail::bfs_reachable(plan, plan.initial(), any);
  for (std::uint32_t v = 0; v < plan.state_count(); ++v) {
    if (!reach[v]) continue;
    for (std::uint32_t a = 0; a < plan.atom_count(); ++a)
      if (p.contains(Atom{a}) && plan.next(v, Atom{a}) != kUndefined) return true;
  }
  return false;
}

/// Full semantics: violated iff a reachable transition on an atom of p\q has
/// a successor admitting an infinite q-free continuation. A trigger answered
/// in the same instant (atom in both p and q) never violates.
/// First-only: the same check restricted to trigger occurrences whose prefix
/// contains no p atom at all.
inline bool oracle_response(const PlanFSA& plan, const AtomSet& p, const AtomSet& q,
                            bool first_only, std::size_t bound = kDefaultOracleBound) {
  oracle_detail::check_bound(plan, bound);
  auto q_free = [&](Atom a) { return !q.contains(a); };
  auto diverge = oracle_detail::can_diverge(plan, q_free);
  std::vector<char> sources;
  if (first_only) {
    auto p_free = [&](Atom a) { return !p.contains(a); };
    sources = oracle_detail::bfs_reachable(plan, plan.initial(), p_free);
  } else {
    sources = oracle_detail::bfs_reachable(plan, plan.initial(), [](Atom) { return true; });
  }
  for (std::uint32_t v = 0; v < plan.state_count(); ++v) {
    if (!sources[v]) continue;
    for (std::uint32_t a = 0; a < plan.atom_count(); ++a) {
      Atom atom{a};
      if (!p.contains(atom) || q.contains(atom)) continue;
      std::int32_t w = plan.next(v, atom);
      if (w != kUndefined && diverge[w]) return true;
    }
  }
  return false;
}

}  // namespace plancheck
