#pragma once

// Tabular plan automaton: states, initial set, a delta table over the atom
// universe (one cell per state x atom, UNDEFINED allowed), and an optional
// "bad" set giving Buchi acceptance to negation/property-product automata.
// Values are immutable once built; mutation goes through edited copies.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plancheck/algebra.hpp"

namespace plancheck {

inline constexpr std::int32_t kUndefined = -1;

class PlanFSA {
 public:
  PlanFSA() = default;

  /// `delta` is row-major state x atom; entries are state indices or kUndefined.
  PlanFSA(std::string name, UniversePtr universe, std::vector<std::string> states,
          std::vector<std::uint32_t> initial, std::vector<std::uint32_t> bad,
          std::vector<std::int32_t> delta)
      : name_(std::move(name)),
        universe_(std::move(universe)),
        states_(std::move(states)),
        initial_(std::move(initial)),
        bad_(std::move(bad)),
        delta_(std::move(delta)) {
    validate();
    std::sort(initial_.begin(), initial_.end());
    initial_.erase(std::unique(initial_.begin(), initial_.end()), initial_.end());
    std::sort(bad_.begin(), bad_.end());
    bad_.erase(std::unique(bad_.begin(), bad_.end()), bad_.end());
    is_bad_.assign(states_.size(), 0);
    for (auto b : bad_) is_bad_[b] = 1;
    provenance_id_ = structural_hash();
  }

  const std::string& name() const { return name_; }
  const UniversePtr& universe() const { return universe_; }
  std::size_t state_count() const { return states_.size(); }
  std::size_t atom_count() const { return universe_->atom_count(); }
  const std::vector<std::string>& states() const { return states_; }
  const std::string& state_label(std::uint32_t s) const { return states_[s]; }
  const std::vector<std::uint32_t>& initial() const { return initial_; }
  const std::vector<std::uint32_t>& bad() const { return bad_; }
  bool is_bad(std::uint32_t s) const { return is_bad_[s] != 0; }
  const std::vector<std::int32_t>& delta() const { return delta_; }

  std::int32_t next(std::uint32_t state, Atom a) const {
    return delta_[static_cast<std::size_t>(state) * atom_count() + a.index];
  }

  std::uint32_t state_index(std::string_view label) const {
    for (std::uint32_t i = 0; i < states_.size(); ++i)
      if (states_[i] == label) return i;
    throw InputError("unknown state '" + std::string(label) + "' in " + name_);
  }

  /// Identity that tracks edit history: structural hash at construction,
  /// then a cheap hash-mix per sanctioned single-cell edit (see operators).
  std::uint64_t provenance_id() const { return provenance_id_; }

  std::uint64_t structural_hash() const {
    std::uint64_t h = detail::fnv1a(detail::kFnvOffset, universe_->signature());
    h = detail::fnv1a(h, name_);
    for (const auto& s : states_) h = detail::fnv1a(h, s);
    for (auto i : initial_) h = detail::fnv1a(h, std::uint64_t{i});
    for (auto b : bad_) h = detail::fnv1a(h, std::uint64_t{b});
    h = detail::fnv1a(h, delta_.data(), delta_.size() * sizeof(std::int32_t));
    return h;
  }

 private:
  void validate() const {
    if (!universe_) throw InputError("plan '" + name_ + "' has no universe");
    if (states_.empty()) throw InputError("plan '" + name_ + "' has no states");
    if (delta_.size() != states_.size() * universe_->atom_count())
      throw InputError("delta table size mismatch in " + name_);
    for (auto i : initial_)
      if (i >= states_.size()) throw InputError("initial state out of range in " + name_);
    for (auto b : bad_)
      if (b >= states_.size()) throw InputError("bad state out of range in " + name_);
    for (auto d : delta_)
      if (d != kUndefined && (d < 0 || static_cast<std::size_t>(d) >= states_.size()))
        throw InputError("delta target out of range in " + name_);
  }

  friend struct PlanMutator;

  std::string name_;
  UniversePtr universe_;
  std::vector<std::string> states_;
  std::vector<std::uint32_t> initial_;
  std::vector<std::uint32_t> bad_;
  std::vector<std::int32_t> delta_;
  std::vector<char> is_bad_;
  std::uint64_t provenance_id_ = 0;
};

/// Internal hook for the sanctioned mutation paths (single-cell edits and
/// incremental product updates). Not part of the public surface.
struct PlanMutator {
  static std::int32_t* table(PlanFSA& f) { return f.delta_.data(); }
  static void set_provenance(PlanFSA& f, std::uint64_t id) { f.provenance_id_ = id; }
  static void rename(PlanFSA& f, std::string name) { f.name_ = std::move(name); }
};

/// A finite run: vertices visited and the atoms taken between them.
struct Run {
  std::vector<std::uint32_t> vertices;
  std::vector<Atom> actions;
};

/// The set of atoms labelling edge (v, w); empty means the edge does not exist.
inline AtomSet transition_condition(const PlanFSA& fsa, std::uint32_t v, std::uint32_t w) {
  if (v >= fsa.state_count() || w >= fsa.state_count())
    throw InputError("state index out of range");
  AtomSet cond(fsa.universe());
  for (std::uint32_t a = 0; a < fsa.atom_count(); ++a)
    if (fsa.next(v, Atom{a}) == static_cast<std::int32_t>(w)) cond.insert(Atom{a});
  return cond;
}

/// Strict completeness: every delta cell defined (the outgoing conditions of
/// every state sum to the full algebra).
inline bool is_complete(const PlanFSA& fsa) {
  for (auto d : fsa.delta())
    if (d == kUndefined) return false;
  return true;
}

/// The weaker reading used for hand-written agent plans: at every state, for
/// every combination of the *other* agents' actions, at least one own action
/// of `agent` has a defined transition.
inline bool is_responsive_for(const PlanFSA& fsa, std::size_t agent) {
  const auto& u = *fsa.universe();
  if (agent >= u.agent_count()) throw InputError("agent index out of range");
  for (std::uint32_t v = 0; v < fsa.state_count(); ++v) {
    // Group atoms by the other agents' action choices.
    std::vector<char> covered;
    std::size_t combos = u.atom_count() / u.alphabet(agent).actions.size();
    covered.assign(combos, 0);
    for (std::uint32_t a = 0; a < u.atom_count(); ++a) {
      if (fsa.next(v, Atom{a}) == kUndefined) continue;
      auto parts = u.decompose(Atom{a});
      std::size_t key = 0;
      for (std::size_t k = 0; k < u.agent_count(); ++k) {
        if (k == agent) continue;
        key = key * u.alphabet(k).actions.size() + parts[k];
      }
      covered[key] = 1;
    }
    for (char c : covered)
      if (!c) return false;
  }
  return true;
}

/// States reachable from `from` via defined delta entries, including `from`
/// itself. Depth-first, atoms in universe order, explicit stack.
inline std::vector<char> accessible_states(const PlanFSA& fsa,
                                           std::span<const std::uint32_t> from) {
  std::vector<char> seen(fsa.state_count(), 0);
  std::vector<std::uint32_t> stack;
  for (auto s : from) {
    if (s >= fsa.state_count()) throw InputError("start state out of range");
    if (seen[s]) continue;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      std::uint32_t v = stack.back();
      stack.pop_back();
      for (std::uint32_t a = 0; a < fsa.atom_count(); ++a) {
        std::int32_t w = fsa.next(v, Atom{a});
        if (w != kUndefined && !seen[w]) {
          seen[w] = 1;
          stack.push_back(static_cast<std::uint32_t>(w));
        }
      }
    }
  }
  return seen;
}

/// Union of transition conditions on edges out of states accessible from the
/// initial set.
inline AtomSet accessible_atoms(const PlanFSA& fsa) {
  AtomSet out(fsa.universe());
  auto seen = accessible_states(fsa, fsa.initial());
  for (std::uint32_t v = 0; v < fsa.state_count(); ++v) {
    if (!seen[v]) continue;
    for (std::uint32_t a = 0; a < fsa.atom_count(); ++a)
      if (fsa.next(v, Atom{a}) != kUndefined) out.insert(Atom{a});
  }
  return out;
}

/// Deterministic run of a finite atom sequence. Initial states are tried in
/// declaration order; returns the first surviving run, or nullopt if every
/// candidate hits an UNDEFINED cell.
inline std::optional<Run> simulate(const PlanFSA& fsa, std::span<const Atom> actions) {
  for (auto a : actions) fsa.universe()->check_atom(a);
  for (auto start : fsa.initial()) {
    Run run;
    run.vertices.push_back(start);
    bool alive = true;
    std::uint32_t v = start;
    for (auto a : actions) {
      std::int32_t w = fsa.next(v, a);
      if (w == kUndefined) {
        alive = false;
        break;
      }
      run.actions.push_back(a);
      run.vertices.push_back(static_cast<std::uint32_t>(w));
      v = static_cast<std::uint32_t>(w);
    }
    if (alive) return run;
  }
  return std::nullopt;
}

}  // namespace plancheck
