#pragma once

// File formats: the JSON plan document, the compact grid (transition-table)
// form, edit files, cached verification contexts, and verdict reports in
// text and JSON. Atom keys serialize canonically ("F-collect/I-receive/...");
// short forms ("crt") are accepted on input when action initials are
// distinct.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "plancheck/checker.hpp"
#include "plancheck/property.hpp"

namespace plancheck {

using Json = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << body;
}

inline Json universe_to_json(const AtomUniverse& u) {
  Json agents = Json::array();
  for (const auto& al : u.alphabets())
    agents.push_back(Json{{"agent_name", al.agent_name}, {"actions", al.actions}});
  return agents;
}

inline UniversePtr universe_from_json(const Json& agents) {
  std::vector<ActionAlphabet> alphabets;
  for (const auto& a : agents) {
    ActionAlphabet al;
    al.agent_name = a.at("agent_name").get<std::string>();
    for (const auto& act : a.at("actions")) al.actions.push_back(act.get<std::string>());
    alphabets.push_back(std::move(al));
  }
  return AtomUniverse::create(std::move(alphabets));
}

inline Json plan_to_json(const PlanFSA& plan) {
  const auto& u = *plan.universe();
  Json doc;
  doc["name"] = plan.name();
  doc["agents"] = universe_to_json(u);
  doc["states"] = plan.states();
  Json initial = Json::array();
  for (auto i : plan.initial()) initial.push_back(plan.state_label(i));
  doc["initial"] = std::move(initial);
  Json bad = Json::array();
  for (auto b : plan.bad()) bad.push_back(plan.state_label(b));
  doc["bad"] = std::move(bad);
  Json delta = Json::object();
  for (std::uint32_t v = 0; v < plan.state_count(); ++v) {
    Json row = Json::object();
    for (std::uint32_t a = 0; a < plan.atom_count(); ++a) {
      std::int32_t w = plan.next(v, Atom{a});
      if (w != kUndefined) row[u.atom_name(Atom{a})] = plan.state_label(w);
    }
    delta[plan.state_label(v)] = std::move(row);
  }
  doc["delta"] = std::move(delta);
  return doc;
}

/// `expected_universe`, when given, is reused if the document declares a
/// structurally identical one (so plans loaded from separate files share
/// atom sets); a mismatch is an input error.
inline PlanFSA plan_from_json(const Json& doc, UniversePtr expected_universe = nullptr) {
  UniversePtr u = universe_from_json(doc.at("agents"));
  if (expected_universe) {
    if (expected_universe->signature() != u->signature())
      throw InputError("plan '" + doc.value("name", std::string("?")) +
                       "' declares a different atom universe");
    u = expected_universe;
  }
  std::vector<std::string> states;
  for (const auto& s : doc.at("states")) states.push_back(s.get<std::string>());
  auto index_of = [&](const std::string& label) -> std::uint32_t {
    for (std::uint32_t i = 0; i < states.size(); ++i)
      if (states[i] == label) return i;
    throw InputError("unknown state '" + label + "' in plan document");
  };
  std::vector<std::uint32_t> initial, bad;
  for (const auto& s : doc.at("initial")) initial.push_back(index_of(s.get<std::string>()));
  if (doc.contains("bad"))
    for (const auto& s : doc.at("bad")) bad.push_back(index_of(s.get<std::string>()));
  std::vector<std::int32_t> delta(states.size() * u->atom_count(), kUndefined);
  for (const auto& [state_label, row] : doc.at("delta").items()) {
    std::uint32_t v = index_of(state_label);
    for (const auto& [atom_name, target] : row.items()) {
      Atom a = u->parse_atom(atom_name);
      delta[static_cast<std::size_t>(v) * u->atom_count() + a.index] =
          target.is_null() ? kUndefined
                           : static_cast<std::int32_t>(index_of(target.get<std::string>()));
    }
  }
  return PlanFSA(doc.value("name", std::string("plan")), u, std::move(states),
                 std::move(initial), std::move(bad), std::move(delta));
}

/// Compact grid form: header lines then one row per state, columns = atoms in
/// universe order, cells = state label or "0".
///
///   name: L
///   agent: F = collect deliver
///   agent: I = receive deliver
///   agent: L = transmit receive pause
///   states: T R P
///   initial: T R P
///   bad:
///   grid:
///   R 0 P T 0 T R 0 P T 0 T
///   ...
inline std::string plan_to_grid(const PlanFSA& plan) {
  const auto& u = *plan.universe();
  std::ostringstream out;
  out << "name: " << plan.name() << "\n";
  for (const auto& al : u.alphabets()) {
    out << "agent: " << al.agent_name << " =";
    for (const auto& a : al.actions) out << ' ' << a;
    out << "\n";
  }
  out << "states:";
  for (const auto& s : plan.states()) out << ' ' << s;
  out << "\ninitial:";
  for (auto i : plan.initial()) out << ' ' << plan.state_label(i);
  out << "\nbad:";
  for (auto b : plan.bad()) out << ' ' << plan.state_label(b);
  out << "\ngrid:\n";
  for (std::uint32_t v = 0; v < plan.state_count(); ++v) {
    for (std::uint32_t a = 0; a < plan.atom_count(); ++a) {
      if (a) out << ' ';
      std::int32_t w = plan.next(v, Atom{a});
      out << (w == kUndefined ? std::string("0") : plan.state_label(w));
    }
    out << "\n";
  }
  return out.str();
}

inline PlanFSA plan_from_grid(const std::string& body, UniversePtr expected_universe = nullptr) {
  std::istringstream in(body);
  std::string line, name = "plan";
  std::vector<ActionAlphabet> alphabets;
  std::vector<std::string> states, initial_labels, bad_labels;
  std::vector<std::vector<std::string>> rows;
  bool in_grid = false;

  auto strip = [](std::string s) {
    if (auto h = s.find('#'); h != std::string::npos) s.resize(h);
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  auto tokens = [](const std::string& s) {
    std::istringstream ts(s);
    std::vector<std::string> out;
    std::string t;
    while (ts >> t)
      if (t != "=") out.push_back(t);
    return out;
  };

  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty()) continue;
    if (in_grid) {
      rows.push_back(tokens(line));
      continue;
    }
    auto colon = line.find(':');
    if (colon == std::string::npos) throw InputError("grid plan: expected 'key:' line");
    std::string key = strip(line.substr(0, colon));
    std::string rest = strip(line.substr(colon + 1));
    if (key == "name") {
      name = rest;
    } else if (key == "agent") {
      auto toks = tokens(rest);
      if (toks.size() < 2) throw InputError("grid plan: agent line needs a name and actions");
      ActionAlphabet al;
      al.agent_name = toks[0];
      al.actions.assign(toks.begin() + 1, toks.end());
      alphabets.push_back(std::move(al));
    } else if (key == "states") {
      states = tokens(rest);
    } else if (key == "initial") {
      initial_labels = tokens(rest);
    } else if (key == "bad") {
      bad_labels = tokens(rest);
    } else if (key == "grid") {
      in_grid = true;
    } else {
      throw InputError("grid plan: unknown key '" + key + "'");
    }
  }

  UniversePtr u = AtomUniverse::create(std::move(alphabets));
  if (expected_universe) {
    if (expected_universe->signature() != u->signature())
      throw InputError("plan '" + name + "' declares a different atom universe");
    u = expected_universe;
  }
  if (rows.size() != states.size())
    throw InputError("grid plan: " + std::to_string(states.size()) + " states but " +
                     std::to_string(rows.size()) + " grid rows");
  auto index_of = [&](const std::string& label) -> std::uint32_t {
    for (std::uint32_t i = 0; i < states.size(); ++i)
      if (states[i] == label) return i;
    throw InputError("grid plan: unknown state '" + label + "'");
  };
  std::vector<std::int32_t> delta(states.size() * u->atom_count(), kUndefined);
  for (std::uint32_t v = 0; v < rows.size(); ++v) {
    if (rows[v].size() != u->atom_count())
      throw InputError("grid plan: row " + states[v] + " has " +
                       std::to_string(rows[v].size()) + " cells, expected " +
                       std::to_string(u->atom_count()));
    for (std::uint32_t a = 0; a < u->atom_count(); ++a)
      if (rows[v][a] != "0")
        delta[static_cast<std::size_t>(v) * u->atom_count() + a] =
            static_cast<std::int32_t>(index_of(rows[v][a]));
  }
  std::vector<std::uint32_t> initial, bad;
  for (const auto& s : initial_labels) initial.push_back(index_of(s));
  for (const auto& s : bad_labels) bad.push_back(index_of(s));
  return PlanFSA(name, u, std::move(states), std::move(initial), std::move(bad),
                 std::move(delta));
}

/// Auto-detects the JSON document vs. grid form.
inline PlanFSA load_plan_text(const std::string& body, UniversePtr expected_universe = nullptr) {
  for (char c : body) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') {
      try {
        return plan_from_json(Json::parse(body), std::move(expected_universe));
      } catch (const Json::exception& e) {
        throw InputError(std::string("malformed plan document: ") + e.what());
      }
    }
    break;
  }
  return plan_from_grid(body, std::move(expected_universe));
}

inline PlanFSA load_plan_file(const std::string& path, UniversePtr expected_universe = nullptr) {
  try {
    return load_plan_text(read_file(path), std::move(expected_universe));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---- edits ----

inline Json edit_to_json(const TableEdit& edit, const PlanFSA& plan) {
  Json doc;
  if (edit.agent == TableEdit::kSelfAgent)
    doc["agent"] = nullptr;
  else
    doc["agent"] = edit.agent;
  doc["state"] = plan.state_label(edit.state);
  doc["atom"] = plan.universe()->atom_name(edit.atom);
  if (edit.new_target == kUndefined)
    doc["new_target"] = nullptr;
  else
    doc["new_target"] = plan.state_label(static_cast<std::uint32_t>(edit.new_target));
  return doc;
}

inline TableEdit edit_from_json(const Json& doc, const PlanFSA& plan) {
  TableEdit edit;
  if (doc.contains("agent") && !doc.at("agent").is_null()) {
    if (doc.at("agent").is_string()) {
      std::string a = doc.at("agent").get<std::string>();
      edit.agent = (a == "self") ? TableEdit::kSelfAgent
                                 : static_cast<std::int32_t>(plan.universe()->agent_index(a));
    } else {
      edit.agent = doc.at("agent").get<std::int32_t>();
    }
  }
  edit.state = plan.state_index(doc.at("state").get<std::string>());
  edit.atom = plan.universe()->parse_atom(doc.at("atom").get<std::string>());
  const auto& target = doc.at("new_target");
  edit.new_target =
      target.is_null() ? kUndefined
                       : static_cast<std::int32_t>(plan.state_index(target.get<std::string>()));
  return edit;
}

/// Edit files hold one edit object or an array of them (an operator sequence).
inline std::vector<TableEdit> edits_from_json(const Json& doc, const PlanFSA& plan) {
  std::vector<TableEdit> out;
  if (doc.is_array())
    for (const auto& e : doc) out.push_back(edit_from_json(e, plan));
  else
    out.push_back(edit_from_json(doc, plan));
  return out;
}

// ---- verification contexts ----

inline Json context_to_json(const VerificationContext& ctx) {
  Json doc;
  doc["fsa_id"] = ctx.fsa_id;
  doc["property_id"] = ctx.property_id;
  doc["last_verdict"] = std::string(status_name(ctx.last_verdict));
  std::string bits(ctx.visited.size(), '0');
  for (std::size_t i = 0; i < ctx.visited.size(); ++i)
    if (ctx.visited[i]) bits[i] = '1';
  doc["visited"] = std::move(bits);
  return doc;
}

inline VerificationContext context_from_json(const Json& doc) {
  VerificationContext ctx;
  ctx.fsa_id = doc.at("fsa_id").get<std::uint64_t>();
  ctx.property_id = doc.at("property_id").get<std::uint64_t>();
  std::string verdict = doc.value("last_verdict", std::string("PASS"));
  ctx.last_verdict = verdict == "FAIL"    ? Status::Fail
                     : verdict == "AVOID" ? Status::Avoid
                                          : Status::Pass;
  const auto& bits = doc.at("visited").get_ref<const std::string&>();
  ctx.visited.assign(bits.size(), 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] == '1') ctx.visited[i] = 1;
  return ctx;
}

// ---- verdict reports ----

inline Json verdict_to_json(const Verdict& verdict, const PlanFSA& subject,
                            const std::string& algorithm) {
  const auto& u = *subject.universe();
  auto label = [&](std::uint32_t s) {
    return s == kNoState ? std::string("-") : subject.state_label(s);
  };
  Json doc;
  doc["algorithm"] = algorithm;
  doc["status"] = std::string(status_name(verdict.status));
  Json errors = Json::array();
  for (const auto& e : verdict.errors) {
    Json err;
    if (e.kind == ErrorReport::Kind::BadAtom) {
      err["kind"] = "BAD_ATOM";
      err["state"] = label(e.state);
      err["atom"] = u.atom_name(e.atom);
    } else {
      err["kind"] = "BAD_CYCLE";
      err["seed"] = label(e.state);
      Json ps = Json::array(), pa = Json::array(), cs = Json::array(), ca = Json::array();
      for (auto s : e.path_states) ps.push_back(label(s));
      for (auto a : e.path_atoms) pa.push_back(u.atom_name(a));
      for (auto s : e.cycle_states) cs.push_back(label(s));
      for (auto a : e.cycle_atoms) ca.push_back(u.atom_name(a));
      err["path_states"] = std::move(ps);
      err["path_atoms"] = std::move(pa);
      err["cycle_states"] = std::move(cs);
      err["cycle_atoms"] = std::move(ca);
    }
    errors.push_back(std::move(err));
  }
  doc["errors"] = std::move(errors);
  return doc;
}

inline std::string verdict_to_text(const Verdict& verdict, const PlanFSA& subject,
                                   const std::string& algorithm) {
  const auto& u = *subject.universe();
  auto label = [&](std::uint32_t s) {
    return s == kNoState ? std::string("-") : subject.state_label(s);
  };
  std::ostringstream out;
  out << algorithm << ": " << status_name(verdict.status);
  if (!verdict.errors.empty()) out << " (" << verdict.errors.size() << " error"
                                   << (verdict.errors.size() == 1 ? "" : "s") << ")";
  out << "\n";
  for (const auto& e : verdict.errors) {
    if (e.kind == ErrorReport::Kind::BadAtom) {
      out << "  bad atom " << u.atom_name(e.atom);
      if (e.state != kNoState) out << " at state " << label(e.state);
      out << "\n";
    } else {
      out << "  bad cycle at seed " << label(e.state) << "\n    path:";
      for (std::size_t i = 0; i < e.path_states.size(); ++i) {
        out << ' ' << label(e.path_states[i]);
        if (i < e.path_atoms.size()) out << " -[" << u.atom_name(e.path_atoms[i]) << "]->";
      }
      out << "\n    cycle:";
      for (std::size_t i = 0; i < e.cycle_states.size(); ++i) {
        out << ' ' << label(e.cycle_states[i]);
        if (i < e.cycle_atoms.size()) out << " -[" << u.atom_name(e.cycle_atoms[i]) << "]->";
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace plancheck
