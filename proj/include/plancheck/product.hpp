#pragma once

// Synchronous (tensor) product of plan automata over a shared atom universe,
// with the full delta table materialized, plus the incremental single-edit
// update paths that recompute only the affected rows.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plancheck/automaton.hpp"
#include "plancheck/operators.hpp"

namespace plancheck {

/// A product automaton: the materialized table plus the component FSAs it was
/// built from (kept in sync by the incremental update paths, so a later edit
/// can recompute exactly the rows it touches).
class ProductFSA {
 public:
  const PlanFSA& fsa() const { return fsa_; }
  const std::vector<PlanFSA>& components() const { return components_; }
  std::size_t component_count() const { return components_.size(); }

  /// Product state index -> component state indices.
  std::vector<std::uint32_t> decode(std::uint32_t product_state) const {
    std::vector<std::uint32_t> out(components_.size());
    std::size_t rem = product_state;
    for (std::size_t k = components_.size(); k-- > 0;) {
      out[k] = static_cast<std::uint32_t>(rem % components_[k].state_count());
      rem /= components_[k].state_count();
    }
    return out;
  }

  std::uint32_t encode(std::span<const std::uint32_t> component_states) const {
    if (component_states.size() != components_.size())
      throw InputError("component arity mismatch");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
      if (component_states[k] >= components_[k].state_count())
        throw InputError("component state out of range");
      idx = idx * components_[k].state_count() + component_states[k];
    }
    return static_cast<std::uint32_t>(idx);
  }

  friend ProductFSA total_product(std::span<const PlanFSA> components);
  friend ProductFSA inc_product(ProductFSA prev, std::uint32_t agent, const TableEdit& edit);

 private:
  PlanFSA fsa_;
  std::vector<PlanFSA> components_;
};

/// Builds the full product table: state tuples, intersected transitions
/// (defined iff defined in every component), tuple initial states, and a bad
/// set marking every tuple with at least one bad component state.
inline ProductFSA total_product(std::span<const PlanFSA> components) {
  if (components.empty()) throw InputError("product of zero automata");
  const UniversePtr& u = components[0].universe();
  for (const auto& c : components)
    if (c.universe()->signature() != u->signature())
      throw InputError("product components use different universes");

  std::size_t n_states = 1;
  for (const auto& c : components) n_states *= c.state_count();
  const std::size_t n_atoms = u->atom_count();
  const std::size_t n = components.size();

  std::vector<std::string> labels(n_states);
  std::vector<std::uint32_t> bad;
  std::vector<std::int32_t> delta(n_states * n_atoms);
  std::vector<std::uint32_t> tuple(n, 0);

  for (std::size_t v = 0; v < n_states; ++v) {
    std::string label;
    bool any_bad = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) label += ',';
      label += components[k].state_label(tuple[k]);
      any_bad = any_bad || components[k].is_bad(tuple[k]);
    }
    labels[v] = std::move(label);
    if (any_bad) bad.push_back(static_cast<std::uint32_t>(v));

    for (std::uint32_t a = 0; a < n_atoms; ++a) {
      std::size_t succ = 0;
      bool defined = true;
      for (std::size_t k = 0; k < n; ++k) {
        std::int32_t w = components[k].next(tuple[k], Atom{a});
        if (w == kUndefined) {
          defined = false;
          break;
        }
        succ = succ * components[k].state_count() + static_cast<std::size_t>(w);
      }
      delta[v * n_atoms + a] =
          defined ? static_cast<std::int32_t>(succ) : kUndefined;
    }

    for (std::size_t k = n; k-- > 0;) {  // advance the tuple odometer
      if (++tuple[k] < components[k].state_count()) break;
      tuple[k] = 0;
    }
  }

  // Initial tuples: every combination of component initials, ascending.
  std::vector<std::uint32_t> initial;
  std::vector<std::size_t> pick(n, 0);
  bool more = true;
  for (const auto& c : components) more = more && !c.initial().empty();
  while (more) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < n; ++k)
      idx = idx * components[k].state_count() + components[k].initial()[pick[k]];
    initial.push_back(static_cast<std::uint32_t>(idx));
    std::size_t k = n;
    while (k-- > 0) {
      if (++pick[k] < components[k].initial().size()) break;
      pick[k] = 0;
      if (k == 0) more = false;
    }
  }

  std::string name;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) name += '*';
    name += components[k].name();
  }

  ProductFSA out;
  out.fsa_ = PlanFSA(std::move(name), u, std::move(labels), std::move(initial), std::move(bad),
                     std::move(delta));
  out.components_.assign(components.begin(), components.end());
  return out;
}

inline ProductFSA total_product(std::initializer_list<PlanFSA> components) {
  std::vector<PlanFSA> v(components);
  return total_product(std::span<const PlanFSA>(v));
}

/// Product of a plan with a property negation automaton: the negation FSA is
/// appended as the last component and contributes the bad set.
inline ProductFSA product_with_property(const PlanFSA& plan, const PlanFSA& neg_property) {
  if (neg_property.bad().empty())
    throw InputError("property negation automaton has no bad states");
  std::vector<PlanFSA> comps{plan, neg_property};
  return total_product(std::span<const PlanFSA>(comps));
}

/// Re-forms the product after a single-cell edit of one component. Only rows
/// whose component for `agent` is the edited state change, and only in the
/// edited atom's column. Consumes and returns the product value.
inline ProductFSA inc_product(ProductFSA prev, std::uint32_t agent, const TableEdit& edit) {
  if (agent >= prev.component_count()) throw InputError("agent index out of range");
  if (edit.agent != TableEdit::kSelfAgent && edit.agent != static_cast<std::int32_t>(agent))
    throw ContractViolation("edit agent disagrees with the product update target");
  const PlanFSA& comp = prev.components_[agent];
  if (edit.state >= comp.state_count()) throw InputError("edit state out of range");
  comp.universe()->check_atom(edit.atom);
  if (edit.new_target != kUndefined &&
      (edit.new_target < 0 || static_cast<std::size_t>(edit.new_target) >= comp.state_count()))
    throw InputError("edit target out of range");

  std::uint64_t new_id = mix_edit(prev.fsa_.provenance_id(), edit);
  bool identity = comp.next(edit.state, edit.atom) == edit.new_target;

  prev.components_[agent] = apply_edit(comp, edit);
  if (!identity) {
    const std::size_t n = prev.component_count();
    const std::size_t n_atoms = prev.fsa_.atom_count();
    // Mixed-radix strides of the product index.
    std::vector<std::size_t> stride(n, 1);
    for (std::size_t k = n; k-- > 1;)
      stride[k - 1] = stride[k] * prev.components_[k].state_count();

    // Iterate every tuple whose `agent` slot is the edited state.
    std::vector<std::uint32_t> tuple(n, 0);
    tuple[agent] = edit.state;
    std::int32_t* table = PlanMutator::table(prev.fsa_);
    bool more = true;
    while (more) {
      std::size_t row = 0;
      for (std::size_t k = 0; k < n; ++k) row += stride[k] * tuple[k];
      std::size_t succ = 0;
      bool defined = true;
      for (std::size_t k = 0; k < n; ++k) {
        std::int32_t w = prev.components_[k].next(tuple[k], edit.atom);
        if (w == kUndefined) {
          defined = false;
          break;
        }
        succ = succ * prev.components_[k].state_count() + static_cast<std::size_t>(w);
      }
      table[row * n_atoms + edit.atom.index] =
          defined ? static_cast<std::int32_t>(succ) : kUndefined;

      std::size_t k = n;
      more = false;
      while (k-- > 0) {
        if (k == agent) continue;
        if (++tuple[k] < prev.components_[k].state_count()) {
          more = true;
          break;
        }
        tuple[k] = 0;
      }
    }
  }
  PlanMutator::set_provenance(prev.fsa_, new_id);
  return prev;
}

// Declared in checker.hpp; forward use here keeps the pair together.
struct VerificationContext;

/// inc_product plus the restart set for the subsequent incremental
/// verification: every product state formed from the edited component state
/// that the previous verification marked visited. The stored plan initials
/// are left untouched; the returned set replaces them for that one
/// verification only.
std::pair<ProductFSA, std::vector<std::uint32_t>> inc_product_ni(ProductFSA prev,
                                                                 std::uint32_t agent,
                                                                 const TableEdit& edit,
                                                                 const VerificationContext& ctx);

}  // namespace plancheck
