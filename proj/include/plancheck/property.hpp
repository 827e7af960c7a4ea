#pragma once

// Invariance and Response property types, their atom-set encodings, and the
// compilation of negations to small deterministic Buchi automata.

#include <cctype>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plancheck/automaton.hpp"

namespace plancheck {

/// "Always not p": no accessible atom may lie in the forbidden set p.
struct InvarianceProperty {
  AtomSet p;
  std::string source;  // original text, for reports
};

/// "Always (p implies eventually q)". first_only restricts the automaton
/// check to the first trigger occurrence of each string.
struct ResponseProperty {
  AtomSet p;
  AtomSet q;
  bool first_only = false;
  std::string source;
};

using Property = std::variant<InvarianceProperty, ResponseProperty>;

inline const AtomSet& property_trigger(const Property& prop) {
  if (auto* inv = std::get_if<InvarianceProperty>(&prop)) return inv->p;
  return std::get<ResponseProperty>(prop).p;
}

inline bool is_invariance(const Property& prop) {
  return std::holds_alternative<InvarianceProperty>(prop);
}

inline std::string property_text(const Property& prop) {
  if (auto* inv = std::get_if<InvarianceProperty>(&prop)) return inv->source;
  return std::get<ResponseProperty>(prop).source;
}

inline std::uint64_t property_id(const Property& prop) {
  if (auto* inv = std::get_if<InvarianceProperty>(&prop))
    return detail::fnv1a(inv->p.content_hash(), std::uint64_t{1});
  const auto& r = std::get<ResponseProperty>(prop);
  std::uint64_t h = detail::fnv1a(r.p.content_hash(), r.q.content_hash());
  return detail::fnv1a(h, std::uint64_t{2});
}

/// Negation automaton for an Invariance property. Two states; any string that
/// ever takes an atom of p reaches the bad sink and stays there, so it visits
/// the bad state infinitely often. Complete and deterministic.
inline PlanFSA neg_invariance_fsa(const InvarianceProperty& prop) {
  const auto& u = prop.p.universe();
  std::size_t n = u->atom_count();
  std::vector<std::int32_t> delta(2 * n);
  for (std::uint32_t a = 0; a < n; ++a) {
    delta[a] = prop.p.contains(Atom{a}) ? 1 : 0;
    delta[n + a] = 1;
  }
  return PlanFSA("neg-invariance", u, {"1", "2"}, {0}, {1}, std::move(delta));
}

/// Negation automaton for the First-Response reading of a Response property.
/// State 1 waits for the first trigger; an unanswered trigger (p minus q)
/// moves to state 2, which persists while no response arrives. A trigger
/// answered in the same instant, or a response while in state 2, kills the
/// run (UNDEFINED), which accepts nothing. Deterministic, deliberately
/// incomplete.
inline PlanFSA neg_first_response_fsa(const ResponseProperty& prop) {
  const auto& u = prop.p.universe();
  std::size_t n = u->atom_count();
  std::vector<std::int32_t> delta(2 * n);
  for (std::uint32_t a = 0; a < n; ++a) {
    Atom atom{a};
    bool in_p = prop.p.contains(atom);
    bool in_q = prop.q.contains(atom);
    if (!in_p)
      delta[a] = 0;
    else if (!in_q)
      delta[a] = 1;
    else
      delta[a] = kUndefined;
    delta[n + a] = in_q ? kUndefined : 1;
  }
  return PlanFSA("neg-first-response", u, {"1", "2"}, {0}, {1}, std::move(delta));
}

inline PlanFSA negation_fsa(const Property& prop) {
  if (auto* inv = std::get_if<InvarianceProperty>(&prop)) return neg_invariance_fsa(*inv);
  return neg_first_response_fsa(std::get<ResponseProperty>(prop));
}

/// Thrown with a 0-based character position on malformed property text.
struct ParseError : InputError {
  ParseError(const std::string& msg, std::size_t position)
      : InputError(msg + " at position " + std::to_string(position)), pos(position) {}
  std::size_t pos;
};

namespace detail {

// Recursive-descent parser for the condition grammar:
//   expr   := term ('|' term)*
//   term   := factor ('&' factor)*
//   factor := Agent-action | '(' expr ')'
class ConditionParser {
 public:
  ConditionParser(std::string_view text, UniversePtr universe)
      : text_(text), u_(std::move(universe)) {}

  AtomSet parse_expr() {
    AtomSet out = parse_term();
    while (peek() == '|') {
      ++pos_;
      out = out.join(parse_term());
    }
    return out;
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
  }

  std::size_t pos() const { return pos_; }

 private:
  AtomSet parse_term() {
    AtomSet out = parse_factor();
    while (peek() == '&') {
      ++pos_;
      out = out.meet(parse_factor());
    }
    return out;
  }

  AtomSet parse_factor() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("expected a term", pos_);
    if (text_[pos_] == '(') {
      ++pos_;
      AtomSet inner = parse_expr();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')')
        throw ParseError("expected ')'", pos_);
      ++pos_;
      return inner;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '-' || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) throw ParseError("expected a term", pos_);
    std::string_view term = text_.substr(start, pos_ - start);
    try {
      return lift_term(u_, term);
    } catch (const InputError& e) {
      throw ParseError(e.what(), start);
    }
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  UniversePtr u_;
  std::size_t pos_ = 0;
};

inline void skip_spaces(std::string_view text, std::size_t& pos) {
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
}

inline bool eat_keyword(std::string_view text, std::size_t& pos, std::string_view kw) {
  skip_spaces(text, pos);
  if (text.substr(pos, kw.size()) != kw) return false;
  std::size_t end = pos + kw.size();
  if (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) ||
                            text[end] == '-' || text[end] == '_'))
    return false;
  pos = end;
  return true;
}

}  // namespace detail

/// Parse one property line: `invariant !(<cond>)` or `response <cond> => <cond>`.
inline Property parse_property(std::string_view text, const UniversePtr& universe) {
  std::size_t pos = 0;
  if (detail::eat_keyword(text, pos, "invariant")) {
    detail::skip_spaces(text, pos);
    if (pos >= text.size() || text[pos] != '!') throw ParseError("expected '!'", pos);
    ++pos;
    detail::skip_spaces(text, pos);
    if (pos >= text.size() || text[pos] != '(') throw ParseError("expected '('", pos);
    ++pos;
    detail::ConditionParser p(text.substr(pos), universe);
    AtomSet cond = p.parse_expr();
    std::size_t after = pos + p.pos();
    detail::skip_spaces(text, after);
    if (after >= text.size() || text[after] != ')') throw ParseError("expected ')'", after);
    ++after;
    detail::skip_spaces(text, after);
    if (after != text.size()) throw ParseError("unexpected trailing input", after);
    return InvarianceProperty{std::move(cond), std::string(text)};
  }
  if (detail::eat_keyword(text, pos, "response")) {
    std::size_t arrow = text.find("=>", pos);
    if (arrow == std::string_view::npos) throw ParseError("expected '=>'", text.size());
    detail::ConditionParser lhs(text.substr(pos, arrow - pos), universe);
    AtomSet trigger = lhs.parse_expr();
    lhs.expect_end();
    detail::ConditionParser rhs(text.substr(arrow + 2), universe);
    AtomSet response = rhs.parse_expr();
    rhs.expect_end();
    return ResponseProperty{std::move(trigger), std::move(response), false, std::string(text)};
  }
  throw ParseError("expected 'invariant' or 'response'", pos);
}

/// Parse a property file body: one property per line, '#' comments, blank
/// lines ignored.
inline std::vector<Property> parse_property_file(std::string_view body,
                                                 const UniversePtr& universe) {
  std::vector<Property> out;
  std::size_t line_start = 0;
  while (line_start <= body.size()) {
    std::size_t eol = body.find('\n', line_start);
    std::string_view line = body.substr(
        line_start, eol == std::string_view::npos ? std::string_view::npos : eol - line_start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t b = 0, e = line.size();
    while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    if (e > b) out.push_back(parse_property(line.substr(b, e - b), universe));
    if (eol == std::string_view::npos) break;
    line_start = eol + 1;
  }
  return out;
}

}  // namespace plancheck
