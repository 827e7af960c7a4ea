#pragma once

// Learning operators over tabular plans: the operator taxonomy, single-cell
// table edits, classification of an edit into the schemas it instantiates,
// per-schema accessibility effects, individual-to-product schema translation,
// and the a-priori safe-operator decision table.

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plancheck/automaton.hpp"
#include "plancheck/rng.hpp"

namespace plancheck {

enum class OperatorSchema : std::uint8_t {
  Change,
  Delete,
  Add,
  Spec,
  Gen,
  DeleteOrSpec,
  AddOrGen,
  DeleteAction,
  AddAction,
  Move,
  DeleteAdd,
  SpecAdd,
  DeleteGen,
  SpecGen,
  Stay,
};

inline constexpr std::array<OperatorSchema, 15> kAllSchemas = {
    OperatorSchema::Change,       OperatorSchema::Delete,    OperatorSchema::Add,
    OperatorSchema::Spec,         OperatorSchema::Gen,       OperatorSchema::DeleteOrSpec,
    OperatorSchema::AddOrGen,     OperatorSchema::DeleteAction, OperatorSchema::AddAction,
    OperatorSchema::Move,         OperatorSchema::DeleteAdd, OperatorSchema::SpecAdd,
    OperatorSchema::DeleteGen,    OperatorSchema::SpecGen,   OperatorSchema::Stay,
};

inline std::string_view schema_name(OperatorSchema s) {
  switch (s) {
    case OperatorSchema::Change: return "change";
    case OperatorSchema::Delete: return "delete";
    case OperatorSchema::Add: return "add";
    case OperatorSchema::Spec: return "spec";
    case OperatorSchema::Gen: return "gen";
    case OperatorSchema::DeleteOrSpec: return "delete-or-spec";
    case OperatorSchema::AddOrGen: return "add-or-gen";
    case OperatorSchema::DeleteAction: return "delete-action";
    case OperatorSchema::AddAction: return "add-action";
    case OperatorSchema::Move: return "move";
    case OperatorSchema::DeleteAdd: return "delete+add";
    case OperatorSchema::SpecAdd: return "spec+add";
    case OperatorSchema::DeleteGen: return "delete+gen";
    case OperatorSchema::SpecGen: return "spec+gen";
    case OperatorSchema::Stay: return "stay";
  }
  return "?";
}

/// Accepts '+', '-' and '_' interchangeably ("delete+gen" == "delete-gen").
inline OperatorSchema parse_schema(std::string_view text) {
  std::string norm;
  for (char c : text) norm += (c == '+' || c == '_') ? '-' : static_cast<char>(std::tolower(c));
  for (auto s : kAllSchemas) {
    std::string canon(schema_name(s));
    for (auto& c : canon)
      if (c == '+') c = '-';
    if (canon == norm) return s;
  }
  throw InputError("unknown operator schema '" + std::string(text) + "'");
}

/// Immediate parent in the taxonomy tree; Change is the root. The action
/// operators sit outside the tree.
inline std::optional<OperatorSchema> schema_parent(OperatorSchema s) {
  switch (s) {
    case OperatorSchema::DeleteOrSpec:
    case OperatorSchema::AddOrGen:
    case OperatorSchema::Move:
      return OperatorSchema::Change;
    case OperatorSchema::Delete:
    case OperatorSchema::Spec:
      return OperatorSchema::DeleteOrSpec;
    case OperatorSchema::Add:
    case OperatorSchema::Gen:
      return OperatorSchema::AddOrGen;
    case OperatorSchema::DeleteAdd:
    case OperatorSchema::SpecAdd:
    case OperatorSchema::DeleteGen:
    case OperatorSchema::SpecGen:
    case OperatorSchema::Stay:
      return OperatorSchema::Move;
    default:
      return std::nullopt;
  }
}

/// True iff `narrow` equals `broad` or sits below it in the taxonomy.
inline bool schema_specializes(OperatorSchema narrow, OperatorSchema broad) {
  std::optional<OperatorSchema> cur = narrow;
  while (cur) {
    if (*cur == broad) return true;
    cur = schema_parent(*cur);
  }
  return false;
}

/// A single-cell mutation of a delta table. `agent` selects the component FSA
/// in multi-plan settings; kSelfAgent means the edit targets the plan itself.
struct TableEdit {
  static constexpr std::int32_t kSelfAgent = -1;

  std::int32_t agent = kSelfAgent;
  std::uint32_t state = 0;
  Atom atom{};
  std::int32_t new_target = kUndefined;
};

/// Edit-history hash step shared by apply_edit and the incremental flows.
inline std::uint64_t mix_edit(std::uint64_t id, const TableEdit& edit) {
  std::uint64_t h = detail::fnv1a(id, static_cast<std::uint64_t>(edit.agent));
  h = detail::fnv1a(h, std::uint64_t{edit.state});
  h = detail::fnv1a(h, std::uint64_t{edit.atom.index});
  return detail::fnv1a(h, static_cast<std::uint64_t>(edit.new_target));
}

/// Returns a copy differing from `fsa` in exactly one delta cell. The copy's
/// provenance id advances by mix_edit even when the value is unchanged.
inline PlanFSA apply_edit(const PlanFSA& fsa, const TableEdit& edit) {
  if (edit.state >= fsa.state_count()) throw InputError("edit state out of range");
  fsa.universe()->check_atom(edit.atom);
  if (edit.new_target != kUndefined &&
      (edit.new_target < 0 || static_cast<std::size_t>(edit.new_target) >= fsa.state_count()))
    throw InputError("edit target out of range");
  PlanFSA out = fsa;
  PlanMutator::table(out)[static_cast<std::size_t>(edit.state) * fsa.atom_count() +
                          edit.atom.index] = edit.new_target;
  PlanMutator::set_provenance(out, mix_edit(fsa.provenance_id(), edit));
  return out;
}

namespace detail {

inline bool row_has_target(const PlanFSA& fsa, std::uint32_t state, std::int32_t target,
                           std::uint32_t excluding_atom) {
  for (std::uint32_t a = 0; a < fsa.atom_count(); ++a)
    if (a != excluding_atom && fsa.next(state, Atom{a}) == target) return true;
  return false;
}

}  // namespace detail

/// The schemas a single-cell edit instantiates, closed upward under the
/// taxonomy where the halves determine a unique chain. Empty for a no-op.
inline std::vector<OperatorSchema> classify_edit(const PlanFSA& before, const TableEdit& edit) {
  if (edit.state >= before.state_count()) throw InputError("edit state out of range");
  before.universe()->check_atom(edit.atom);
  std::int32_t old = before.next(edit.state, edit.atom);
  std::int32_t nw = edit.new_target;
  if (old == nw) return {};

  auto last_atom_on_edge = [&] {
    return !detail::row_has_target(before, edit.state, old, edit.atom.index);
  };
  auto target_already_in_row = [&] {
    return detail::row_has_target(before, edit.state, nw, edit.atom.index);
  };

  std::vector<OperatorSchema> out;
  if (old == kUndefined) {
    out.push_back(target_already_in_row() ? OperatorSchema::Gen : OperatorSchema::Add);
    out.push_back(OperatorSchema::AddOrGen);
    out.push_back(OperatorSchema::Change);
    return out;
  }
  if (nw == kUndefined) {
    out.push_back(last_atom_on_edge() ? OperatorSchema::Delete : OperatorSchema::Spec);
    out.push_back(OperatorSchema::DeleteOrSpec);
    out.push_back(OperatorSchema::Change);
    return out;
  }
  bool del_half = last_atom_on_edge();
  bool gen_half = target_already_in_row();
  out.push_back(del_half ? (gen_half ? OperatorSchema::DeleteGen : OperatorSchema::DeleteAdd)
                         : (gen_half ? OperatorSchema::SpecGen : OperatorSchema::SpecAdd));
  if (nw == static_cast<std::int32_t>(edit.state)) out.push_back(OperatorSchema::Stay);
  out.push_back(OperatorSchema::Move);
  out.push_back(OperatorSchema::Change);
  return out;
}

/// What a schema can do to accessibility of states/atoms: at the edit site
/// (local) and for material visited after it (global).
struct AccessibilityEffect {
  bool can_increase_global = false;
  bool can_increase_local = false;
  bool can_decrease_global = false;
  bool can_decrease_local = false;
};

inline AccessibilityEffect accessibility_effect(OperatorSchema s) {
  switch (s) {
    case OperatorSchema::Delete: return {false, false, true, true};
    case OperatorSchema::Spec: return {false, false, false, true};
    case OperatorSchema::Add: return {true, true, false, false};
    case OperatorSchema::Gen: return {false, true, false, false};
    case OperatorSchema::DeleteOrSpec: return {false, false, true, true};
    case OperatorSchema::AddOrGen: return {true, true, false, false};
    case OperatorSchema::DeleteAction: return {false, false, true, true};
    case OperatorSchema::AddAction: return {true, true, false, false};
    case OperatorSchema::Change: return {true, true, true, true};
    case OperatorSchema::Move: return {true, true, true, true};
    case OperatorSchema::DeleteAdd: return {true, true, true, true};
    case OperatorSchema::SpecAdd: return {true, true, false, true};
    case OperatorSchema::DeleteGen: return {false, false, true, true};
    case OperatorSchema::SpecGen: return {false, false, false, true};
    case OperatorSchema::Stay: return {false, false, true, true};
  }
  return {};
}

/// Image of an individual-plan operator in the product plan. Intersecting an
/// individual condition with the other components' conditions can turn a
/// generalization into an edge addition, and keeping-to-self into a move.
inline std::vector<OperatorSchema> translate_to_product(OperatorSchema s) {
  using S = OperatorSchema;
  switch (s) {
    case S::Change: return {S::Change};
    case S::Delete:
    case S::Spec: return {S::Delete, S::Spec};
    case S::Add:
    case S::Gen: return {S::Add, S::Gen};
    case S::DeleteOrSpec: return {S::Delete, S::Spec};
    case S::AddOrGen: return {S::Add, S::Gen};
    case S::DeleteAction: return {S::DeleteAction};
    case S::AddAction: return {S::AddAction};
    case S::Move: return {S::Move};
    case S::Stay: return {S::Stay, S::Move};
    case S::DeleteAdd:
    case S::SpecAdd:
    case S::DeleteGen:
    case S::SpecGen:
      return {S::Move, S::DeleteAdd, S::SpecAdd, S::DeleteGen, S::SpecGen};
  }
  return {};
}

enum class Situation : std::uint8_t { OneAgent, OnePlan, MultPlans };
enum class PropertyClass : std::uint8_t { Invariance, Response };

inline std::string_view situation_name(Situation s) {
  switch (s) {
    case Situation::OneAgent: return "1agent";
    case Situation::OnePlan: return "1plan";
    case Situation::MultPlans: return "multplans";
  }
  return "?";
}

inline Situation parse_situation(std::string_view text) {
  if (text == "1agent") return Situation::OneAgent;
  if (text == "1plan") return Situation::OnePlan;
  if (text == "multplans") return Situation::MultPlans;
  throw InputError("unknown situation '" + std::string(text) + "'");
}

enum class CheckMethod : std::uint8_t { IncINI, IncATNI, IncGenI, IncGenR, TotalI, TotalAT };

inline std::string_view method_name(CheckMethod m) {
  switch (m) {
    case CheckMethod::IncINI: return "Inc_I-NI";
    case CheckMethod::IncATNI: return "Inc_AT-NI";
    case CheckMethod::IncGenI: return "Inc_gen-I";
    case CheckMethod::IncGenR: return "Inc_gen-R";
    case CheckMethod::TotalI: return "Total_I";
    case CheckMethod::TotalAT: return "Total_AT";
  }
  return "?";
}

/// Outcome of the a-priori decision table: either the operator is safe for
/// the property class with no reverification, or the named fastest method.
struct SafetyVerdict {
  bool none_needed = false;
  CheckMethod method = CheckMethod::TotalI;

  static SafetyVerdict none() { return {true, CheckMethod::TotalI}; }
  static SafetyVerdict use(CheckMethod m) { return {false, m}; }
};

/// The fastest-reverification decision table. OneAgent and OnePlan share a
/// column. add-action has no row of its own; it inherits its component rule
/// (add-or-gen).
inline SafetyVerdict sml_lookup(OperatorSchema schema, Situation situation, PropertyClass cls) {
  using S = OperatorSchema;
  bool mult = situation == Situation::MultPlans;
  bool resp = cls == PropertyClass::Response;
  switch (schema) {
    case S::Delete:
    case S::Spec:
    case S::DeleteOrSpec:
    case S::DeleteAction:
      return SafetyVerdict::none();
    case S::Change:
    case S::Add:
    case S::AddOrGen:
    case S::AddAction:
    case S::Move:
    case S::DeleteAdd:
    case S::SpecAdd:
      return SafetyVerdict::use(resp ? CheckMethod::IncATNI : CheckMethod::IncINI);
    case S::Gen:
      if (mult) return SafetyVerdict::use(resp ? CheckMethod::IncATNI : CheckMethod::IncINI);
      return SafetyVerdict::use(resp ? CheckMethod::IncGenR : CheckMethod::IncGenI);
    case S::DeleteGen:
    case S::SpecGen:
      if (mult) return SafetyVerdict::use(resp ? CheckMethod::IncATNI : CheckMethod::IncINI);
      return resp ? SafetyVerdict::use(CheckMethod::IncGenR) : SafetyVerdict::none();
    case S::Stay:
      if (mult) return SafetyVerdict::use(resp ? CheckMethod::IncATNI : CheckMethod::IncINI);
      return resp ? SafetyVerdict::use(CheckMethod::IncATNI) : SafetyVerdict::none();
  }
  throw InputError("unknown schema");
}

/// Decision-table cell text as printed by the CLI.
inline std::string sml_cell_text(OperatorSchema schema, Situation situation, PropertyClass cls) {
  SafetyVerdict v = sml_lookup(schema, situation, cls);
  if (v.none_needed) return "None";
  if (schema == OperatorSchema::Gen && situation != Situation::MultPlans &&
      cls == PropertyClass::Invariance)
    return "Inc_gen-I or Inc_I-NI";
  return std::string(method_name(v.method));
}

/// Uniformly draws a qualifying single-cell instantiation of `schema`, or
/// nullopt when the table admits none. Deterministic under the rng's seed.
inline std::optional<TableEdit> random_edit(const PlanFSA& fsa, OperatorSchema schema, Rng& rng) {
  using S = OperatorSchema;
  const auto n_states = static_cast<std::uint32_t>(fsa.state_count());
  const auto n_atoms = static_cast<std::uint32_t>(fsa.atom_count());

  auto edge_atom_count = [&](std::uint32_t v, std::int32_t w) {
    std::uint32_t c = 0;
    for (std::uint32_t a = 0; a < n_atoms; ++a)
      if (fsa.next(v, Atom{a}) == w) ++c;
    return c;
  };

  struct Cell {
    std::uint32_t state;
    std::uint32_t atom;
  };
  std::vector<Cell> cells;
  auto collect = [&](auto&& pred) {
    for (std::uint32_t v = 0; v < n_states; ++v)
      for (std::uint32_t a = 0; a < n_atoms; ++a)
        if (pred(v, Atom{a}, fsa.next(v, Atom{a}))) cells.push_back({v, a});
  };

  switch (schema) {
    case S::Change: {
      // Any cell with some state other than its current value to point at.
      collect([&](std::uint32_t, Atom, std::int32_t t) {
        return n_states >= 2 || t == kUndefined;
      });
      if (cells.empty()) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      std::int32_t old = fsa.next(c.state, Atom{c.atom});
      std::vector<std::int32_t> targets;
      for (std::uint32_t w = 0; w < n_states; ++w)
        if (static_cast<std::int32_t>(w) != old) targets.push_back(static_cast<std::int32_t>(w));
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom},
                       targets[rng.below(targets.size())]};
    }
    case S::Gen: {
      // A row needs a defined cell (supplying the reused target) and a zero
      // cell to fill.
      std::vector<Cell> defined;
      for (std::uint32_t v = 0; v < n_states; ++v) {
        bool has_zero = false, has_def = false;
        for (std::uint32_t a = 0; a < n_atoms; ++a)
          (fsa.next(v, Atom{a}) == kUndefined ? has_zero : has_def) = true;
        if (!has_zero || !has_def) continue;
        for (std::uint32_t a = 0; a < n_atoms; ++a)
          if (fsa.next(v, Atom{a}) != kUndefined) defined.push_back({v, a});
      }
      if (defined.empty()) return std::nullopt;
      Cell src = defined[rng.below(defined.size())];
      std::vector<std::uint32_t> zeros;
      for (std::uint32_t a = 0; a < n_atoms; ++a)
        if (fsa.next(src.state, Atom{a}) == kUndefined) zeros.push_back(a);
      return TableEdit{TableEdit::kSelfAgent, src.state, Atom{zeros[rng.below(zeros.size())]},
                       fsa.next(src.state, Atom{src.atom})};
    }
    case S::Add: {
      collect([&](std::uint32_t, Atom, std::int32_t t) { return t == kUndefined; });
      if (cells.empty()) return std::nullopt;
      // Keep only cells whose row leaves some state fresh.
      std::vector<Cell> ok;
      for (auto c : cells) {
        for (std::uint32_t w = 0; w < n_states; ++w)
          if (!detail::row_has_target(fsa, c.state, static_cast<std::int32_t>(w), c.atom)) {
            ok.push_back(c);
            break;
          }
      }
      if (ok.empty()) return std::nullopt;
      Cell c = ok[rng.below(ok.size())];
      std::vector<std::int32_t> fresh;
      for (std::uint32_t w = 0; w < n_states; ++w)
        if (!detail::row_has_target(fsa, c.state, static_cast<std::int32_t>(w), c.atom))
          fresh.push_back(static_cast<std::int32_t>(w));
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom},
                       fresh[rng.below(fresh.size())]};
    }
    case S::AddOrGen: {
      collect([&](std::uint32_t, Atom, std::int32_t t) { return t == kUndefined; });
      if (cells.empty()) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom},
                       static_cast<std::int32_t>(rng.below(n_states))};
    }
    case S::Delete: {
      collect([&](std::uint32_t v, Atom, std::int32_t t) {
        return t != kUndefined && edge_atom_count(v, t) == 1;
      });
      if (cells.empty()) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom}, kUndefined};
    }
    case S::Spec: {
      collect([&](std::uint32_t v, Atom, std::int32_t t) {
        return t != kUndefined && edge_atom_count(v, t) >= 2;
      });
      if (cells.empty()) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom}, kUndefined};
    }
    case S::DeleteOrSpec: {
      collect([&](std::uint32_t, Atom, std::int32_t t) { return t != kUndefined; });
      if (cells.empty()) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom}, kUndefined};
    }
    case S::Stay: {
      collect([&](std::uint32_t v, Atom, std::int32_t t) {
        return t != kUndefined && t != static_cast<std::int32_t>(v);
      });
      if (cells.empty()) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom},
                       static_cast<std::int32_t>(c.state)};
    }
    case S::Move: {
      collect([&](std::uint32_t, Atom, std::int32_t t) { return t != kUndefined; });
      if (cells.empty() || n_states < 2) return std::nullopt;
      Cell c = cells[rng.below(cells.size())];
      std::int32_t old = fsa.next(c.state, Atom{c.atom});
      std::vector<std::int32_t> targets;
      for (std::uint32_t w = 0; w < n_states; ++w)
        if (static_cast<std::int32_t>(w) != old) targets.push_back(static_cast<std::int32_t>(w));
      return TableEdit{TableEdit::kSelfAgent, c.state, Atom{c.atom},
                       targets[rng.below(targets.size())]};
    }
    case S::DeleteAdd:
    case S::SpecAdd:
    case S::DeleteGen:
    case S::SpecGen: {
      bool del_half = schema == S::DeleteAdd || schema == S::DeleteGen;
      bool gen_half = schema == S::DeleteGen || schema == S::SpecGen;
      struct Option {
        Cell cell;
        std::vector<std::int32_t> targets;
      };
      std::vector<Option> options;
      for (std::uint32_t v = 0; v < n_states; ++v)
        for (std::uint32_t a = 0; a < n_atoms; ++a) {
          std::int32_t old = fsa.next(v, Atom{a});
          if (old == kUndefined) continue;
          bool last = edge_atom_count(v, old) == 1;
          if (last != del_half) continue;
          Option opt{{v, a}, {}};
          for (std::uint32_t w = 0; w < n_states; ++w) {
            auto t = static_cast<std::int32_t>(w);
            if (t == old) continue;
            if (detail::row_has_target(fsa, v, t, a) == gen_half) opt.targets.push_back(t);
          }
          if (!opt.targets.empty()) options.push_back(std::move(opt));
        }
      if (options.empty()) return std::nullopt;
      const Option& opt = options[rng.below(options.size())];
      return TableEdit{TableEdit::kSelfAgent, opt.cell.state, Atom{opt.cell.atom},
                       opt.targets[rng.below(opt.targets.size())]};
    }
    case S::DeleteAction:
    case S::AddAction:
      throw InputError("action operators are edit sequences; use the *_action_edits generators");
  }
  return std::nullopt;
}

/// Edit sequence removing `action` from the allowable actions of `state`:
/// zero every defined cell whose component for `agent` is `action`.
inline std::vector<TableEdit> delete_action_edits(const PlanFSA& fsa, std::uint32_t state,
                                                  std::size_t agent, std::string_view action) {
  const auto& u = fsa.universe();
  std::size_t act = u->action_index(agent, action);
  std::vector<TableEdit> out;
  for (std::uint32_t a = 0; a < fsa.atom_count(); ++a) {
    if (u->decompose(Atom{a})[agent] != act) continue;
    if (fsa.next(state, Atom{a}) == kUndefined) continue;
    out.push_back(TableEdit{TableEdit::kSelfAgent, state, Atom{a}, kUndefined});
  }
  return out;
}

/// Edit sequence enabling `action` from `state`: fill every zero cell whose
/// component for `agent` is `action` with a random next state.
inline std::vector<TableEdit> add_action_edits(const PlanFSA& fsa, std::uint32_t state,
                                               std::size_t agent, std::string_view action,
                                               Rng& rng) {
  const auto& u = fsa.universe();
  std::size_t act = u->action_index(agent, action);
  std::vector<TableEdit> out;
  for (std::uint32_t a = 0; a < fsa.atom_count(); ++a) {
    if (u->decompose(Atom{a})[agent] != act) continue;
    if (fsa.next(state, Atom{a}) != kUndefined) continue;
    out.push_back(TableEdit{TableEdit::kSelfAgent, state, Atom{a},
                            static_cast<std::int32_t>(rng.below(fsa.state_count()))});
  }
  return out;
}

}  // namespace plancheck
