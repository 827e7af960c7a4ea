#pragma once

// Finite Boolean algebra of joint (multiagent) actions. An atom is one joint
// action: a choice of exactly one action per agent. Every algebra element is
// represented extensionally as a set of atoms, so meet/join/complement are
// plain bit operations and the partial order is subset inclusion.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace plancheck {

/// Thrown on malformed caller input (unknown names, universe mismatch, bad ranges).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a stateful contract is broken (stale context, inconsistent provenance).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  h = fnv1a(h, s.data(), s.size());
  return fnv1a(h, "\x1f", 1);  // separator so ("ab","c") != ("a","bc")
}

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  return fnv1a(h, &v, sizeof v);
}

}  // namespace detail

/// One agent's action repertoire. Action order is significant: it fixes the
/// enumeration order of the product algebra's atoms.
struct ActionAlphabet {
  std::string agent_name;
  std::vector<std::string> actions;
};

struct Atom {
  std::uint32_t index = 0;
  friend bool operator==(Atom a, Atom b) { return a.index == b.index; }
  friend bool operator!=(Atom a, Atom b) { return a.index != b.index; }
  friend bool operator<(Atom a, Atom b) { return a.index < b.index; }
};

class AtomSet;

/// The product algebra's atom universe: an ordered list of per-agent alphabets.
/// Atom enumeration is lexicographic in per-agent action indices with agent 0
/// most significant, and is fixed for the universe's lifetime.
class AtomUniverse {
 public:
  static std::shared_ptr<const AtomUniverse> create(std::vector<ActionAlphabet> alphabets) {
    return std::shared_ptr<const AtomUniverse>(new AtomUniverse(std::move(alphabets)));
  }

  std::size_t agent_count() const { return alphabets_.size(); }
  std::size_t atom_count() const { return atom_count_; }
  const ActionAlphabet& alphabet(std::size_t agent) const { return alphabets_[agent]; }
  const std::vector<ActionAlphabet>& alphabets() const { return alphabets_; }

  /// Structural identity; two universes with equal signatures are interchangeable.
  std::uint64_t signature() const { return signature_; }

  std::size_t agent_index(std::string_view name) const {
    for (std::size_t i = 0; i < alphabets_.size(); ++i)
      if (alphabets_[i].agent_name == name) return i;
    throw InputError("unknown agent: " + std::string(name));
  }

  std::size_t action_index(std::size_t agent, std::string_view action) const {
    check_agent(agent);
    const auto& acts = alphabets_[agent].actions;
    for (std::size_t i = 0; i < acts.size(); ++i)
      if (acts[i] == action) return i;
    throw InputError("agent " + alphabets_[agent].agent_name + " has no action '" +
                     std::string(action) + "'");
  }

  /// Per-agent action indices -> atom.
  Atom encode(std::span<const std::size_t> action_indices) const {
    if (action_indices.size() != alphabets_.size())
      throw InputError("expected one action per agent");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < alphabets_.size(); ++k) {
      if (action_indices[k] >= alphabets_[k].actions.size())
        throw InputError("action index out of range");
      idx = idx * alphabets_[k].actions.size() + action_indices[k];
    }
    return Atom{static_cast<std::uint32_t>(idx)};
  }

  /// Atom -> per-agent action indices.
  std::vector<std::size_t> decompose(Atom a) const {
    check_atom(a);
    std::vector<std::size_t> out(alphabets_.size());
    std::size_t rem = a.index;
    for (std::size_t k = alphabets_.size(); k-- > 0;) {
      out[k] = rem % alphabets_[k].actions.size();
      rem /= alphabets_[k].actions.size();
    }
    return out;
  }

  /// Canonical atom name: per-agent "Agent-action" components joined with '/'.
  std::string atom_name(Atom a) const {
    auto parts = decompose(a);
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k) out += '/';
      out += alphabets_[k].agent_name;
      out += '-';
      out += alphabets_[k].actions[parts[k]];
    }
    return out;
  }

  /// Short form: first letter of each agent's action ("crt"). Only available
  /// when every agent's actions have pairwise distinct initials.
  bool short_names_available() const { return short_names_ok_; }

  std::string atom_short_name(Atom a) const {
    if (!short_names_ok_) throw InputError("action initials are not distinct; no short names");
    auto parts = decompose(a);
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k)
      out += alphabets_[k].actions[parts[k]][0];
    return out;
  }

  /// Accepts the canonical form ("F-collect/I-receive/L-transmit"), bare
  /// component names joined with '/' ("collect/receive/transmit"), and the
  /// short form ("crt") when action initials are distinct.
  Atom parse_atom(std::string_view text) const {
    if (text.empty()) throw InputError("empty atom name");
    if (text.find('/') != std::string_view::npos || alphabets_.size() == 1) {
      std::vector<std::size_t> parts;
      std::size_t start = 0;
      bool ok = true;
      for (std::size_t k = 0; k < alphabets_.size() && ok; ++k) {
        std::size_t end = text.find('/', start);
        std::string_view comp = text.substr(
            start, end == std::string_view::npos ? std::string_view::npos : end - start);
        std::string prefix = alphabets_[k].agent_name + "-";
        if (comp.substr(0, prefix.size()) == prefix) comp.remove_prefix(prefix.size());
        std::size_t idx = alphabets_[k].actions.size();
        for (std::size_t i = 0; i < alphabets_[k].actions.size(); ++i)
          if (alphabets_[k].actions[i] == comp) idx = i;
        if (idx == alphabets_[k].actions.size()) {
          ok = false;
          break;
        }
        parts.push_back(idx);
        if (end == std::string_view::npos) {
          ok = ok && k + 1 == alphabets_.size();
          start = text.size();
        } else {
          start = end + 1;
        }
      }
      if (ok && start >= text.size() && parts.size() == alphabets_.size())
        return encode(parts);
      if (text.find('/') != std::string_view::npos)
        throw InputError("cannot parse atom '" + std::string(text) + "'");
      // A single-agent name may still be a short form; fall through.
    }
    if (!short_names_ok_ || text.size() != alphabets_.size())
      throw InputError("cannot parse atom '" + std::string(text) + "'");
    std::vector<std::size_t> parts(alphabets_.size());
    for (std::size_t k = 0; k < alphabets_.size(); ++k) {
      const auto& acts = alphabets_[k].actions;
      std::size_t found = acts.size();
      for (std::size_t i = 0; i < acts.size(); ++i)
        if (acts[i][0] == text[k]) found = i;
      if (found == acts.size())
        throw InputError("no action of agent " + alphabets_[k].agent_name + " starts with '" +
                         std::string(1, text[k]) + "'");
      parts[k] = found;
    }
    return encode(parts);
  }

  void check_atom(Atom a) const {
    if (a.index >= atom_count_) throw InputError("atom index out of range");
  }

 private:
  explicit AtomUniverse(std::vector<ActionAlphabet> alphabets)
      : alphabets_(std::move(alphabets)) {
    if (alphabets_.empty()) throw InputError("universe needs at least one agent");
    atom_count_ = 1;
    std::uint64_t h = detail::kFnvOffset;
    for (const auto& al : alphabets_) {
      if (al.actions.empty()) throw InputError("alphabet of " + al.agent_name + " is empty");
      for (std::size_t i = 0; i < al.actions.size(); ++i)
        for (std::size_t j = i + 1; j < al.actions.size(); ++j)
          if (al.actions[i] == al.actions[j])
            throw InputError("duplicate action '" + al.actions[i] + "' for " + al.agent_name);
      atom_count_ *= al.actions.size();
      h = detail::fnv1a(h, al.agent_name);
      for (const auto& act : al.actions) h = detail::fnv1a(h, act);
    }
    signature_ = h;
    short_names_ok_ = true;
    for (const auto& al : alphabets_) {
      for (std::size_t i = 0; i < al.actions.size() && short_names_ok_; ++i)
        for (std::size_t j = i + 1; j < al.actions.size(); ++j)
          if (al.actions[i][0] == al.actions[j][0]) {
            short_names_ok_ = false;
            break;
          }
    }
  }

  void check_agent(std::size_t agent) const {
    if (agent >= alphabets_.size()) throw InputError("agent index out of range");
  }

  std::vector<ActionAlphabet> alphabets_;
  std::size_t atom_count_ = 0;
  std::uint64_t signature_ = 0;
  bool short_names_ok_ = false;
};

using UniversePtr = std::shared_ptr<const AtomUniverse>;

/// An element of the product algebra, stored as its atom set.
class AtomSet {
 public:
  AtomSet() = default;

  explicit AtomSet(UniversePtr universe)
      : universe_(std::move(universe)),
        bits_((universe_->atom_count() + 63) / 64, 0) {}

  const UniversePtr& universe() const { return universe_; }
  bool bound() const { return universe_ != nullptr; }

  bool contains(Atom a) const {
    universe_->check_atom(a);
    return (bits_[a.index >> 6] >> (a.index & 63)) & 1;
  }

  void insert(Atom a) {
    universe_->check_atom(a);
    bits_[a.index >> 6] |= std::uint64_t{1} << (a.index & 63);
  }

  void erase(Atom a) {
    universe_->check_atom(a);
    bits_[a.index >> 6] &= ~(std::uint64_t{1} << (a.index & 63));
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : bits_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  bool empty() const {
    return std::all_of(bits_.begin(), bits_.end(), [](std::uint64_t w) { return w == 0; });
  }

  bool is_full() const { return count() == universe_->atom_count(); }

  AtomSet meet(const AtomSet& other) const {
    check_same(other);
    AtomSet out = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] &= other.bits_[i];
    return out;
  }

  AtomSet join(const AtomSet& other) const {
    check_same(other);
    AtomSet out = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] |= other.bits_[i];
    return out;
  }

  AtomSet complement() const {
    AtomSet out(universe_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = ~bits_[i];
    out.mask_tail();
    return out;
  }

  /// The algebra's partial order: x <= y iff x /\ y = x, i.e. subset inclusion.
  /// Also serves as the satisfaction test for an atom against a formula.
  bool leq(const AtomSet& other) const {
    check_same(other);
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] & ~other.bits_[i]) return false;
    return true;
  }

  bool operator==(const AtomSet& other) const {
    check_same(other);
    return bits_ == other.bits_;
  }
  bool operator!=(const AtomSet& other) const { return !(*this == other); }

  AtomSet operator&(const AtomSet& o) const { return meet(o); }
  AtomSet operator|(const AtomSet& o) const { return join(o); }
  AtomSet operator~() const { return complement(); }

  /// Member atoms in enumeration order.
  std::vector<Atom> atoms() const {
    std::vector<Atom> out;
    for_each([&](Atom a) { out.push_back(a); });
    return out;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      while (word) {
        unsigned bit = static_cast<unsigned>(__builtin_ctzll(word));
        f(Atom{static_cast<std::uint32_t>((w << 6) + bit)});
        word &= word - 1;
      }
    }
  }

  std::uint64_t content_hash() const {
    std::uint64_t h = detail::fnv1a(detail::kFnvOffset, universe_->signature());
    for (auto w : bits_) h = detail::fnv1a(h, w);
    return h;
  }

 private:
  void check_same(const AtomSet& other) const {
    if (!universe_ || !other.universe_ ||
        universe_->signature() != other.universe_->signature())
      throw InputError("atom sets belong to different universes");
  }

  void mask_tail() {
    std::size_t n = universe_->atom_count();
    if (n & 63) bits_.back() &= (std::uint64_t{1} << (n & 63)) - 1;
  }

  UniversePtr universe_;
  std::vector<std::uint64_t> bits_;
};

inline AtomSet make_empty_set(const UniversePtr& u) { return AtomSet(u); }

inline AtomSet make_full_set(const UniversePtr& u) {
  AtomSet s(u);
  for (std::uint32_t i = 0; i < u->atom_count(); ++i) s.insert(Atom{i});
  return s;
}

/// Compose an atom from one action name per agent, in agent order.
inline Atom compose_atom(const UniversePtr& u, std::span<const std::string> action_per_agent) {
  if (action_per_agent.size() != u->agent_count())
    throw InputError("expected one action per agent");
  std::vector<std::size_t> parts(u->agent_count());
  for (std::size_t k = 0; k < parts.size(); ++k)
    parts[k] = u->action_index(k, action_per_agent[k]);
  return u->encode(parts);
}

inline Atom compose_atom(const UniversePtr& u, std::initializer_list<std::string> actions) {
  std::vector<std::string> v(actions);
  return compose_atom(u, std::span<const std::string>(v));
}

/// All product atoms whose component for `agent` is one of `actions`.
/// Conjunctions across agents are meets of lifts.
inline AtomSet lift(const UniversePtr& u, std::size_t agent,
                    std::span<const std::string> actions) {
  if (agent >= u->agent_count()) throw InputError("agent index out of range");
  std::vector<bool> wanted(u->alphabet(agent).actions.size(), false);
  for (const auto& a : actions) wanted[u->action_index(agent, a)] = true;
  AtomSet out(u);
  for (std::uint32_t i = 0; i < u->atom_count(); ++i) {
    Atom a{i};
    if (wanted[u->decompose(a)[agent]]) out.insert(a);
  }
  return out;
}

inline AtomSet lift(const UniversePtr& u, std::size_t agent,
                    std::initializer_list<std::string> actions) {
  std::vector<std::string> v(actions);
  return lift(u, agent, std::span<const std::string>(v));
}

/// Lift a single "Agent-action" term. Agent and action names may themselves
/// contain '-'; the longest agent-name prefix wins.
inline AtomSet lift_term(const UniversePtr& u, std::string_view term) {
  for (std::size_t k = u->agent_count(); k-- > 0;) {
    const auto& al = u->alphabet(k);
    if (term.size() <= al.agent_name.size() + 1) continue;
    if (term.substr(0, al.agent_name.size()) != al.agent_name) continue;
    if (term[al.agent_name.size()] != '-') continue;
    std::string action(term.substr(al.agent_name.size() + 1));
    for (const auto& a : al.actions)
      if (a == action) return lift(u, k, {action});
  }
  throw InputError("term '" + std::string(term) + "' matches no Agent-action pair");
}

}  // namespace plancheck
