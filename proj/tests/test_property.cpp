#include <catch2/catch_amalgamated.hpp>

#include "plancheck/harness.hpp"
#include "plancheck/oracle.hpp"
#include "plancheck/product.hpp"
#include "plancheck/property.hpp"
#include "plancheck/rng.hpp"

using namespace plancheck;

namespace {

PlanFSA random_plan(const UniversePtr& u, std::size_t n, double fill, Rng& rng) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("q" + std::to_string(i));
  std::vector<std::int32_t> delta(n * u->atom_count(), kUndefined);
  for (auto& cell : delta)
    if (rng.chance(fill)) cell = static_cast<std::int32_t>(rng.below(n));
  return PlanFSA("rand", u, std::move(labels), {0}, {}, std::move(delta));
}

AtomSet random_nonempty(const UniversePtr& u, Rng& rng, double density) {
  AtomSet s(u);
  while (s.empty())
    for (std::uint32_t i = 0; i < u->atom_count(); ++i)
      if (rng.chance(density)) s.insert(Atom{i});
  return s;
}

}  // namespace

TEST_CASE("negation automaton for invariance is a complete two-state trap") {
  auto u = AtomUniverse::create(rovers_alphabets());
  InvarianceProperty p1{lift(u, 1, {"deliver"}).meet(lift(u, 2, {"transmit"})), "P1"};
  PlanFSA neg = neg_invariance_fsa(p1);

  REQUIRE(neg.state_count() == 2);
  REQUIRE(neg.initial() == std::vector<std::uint32_t>{0});
  REQUIRE(neg.bad() == std::vector<std::uint32_t>{1});
  REQUIRE(is_complete(neg));
  for (std::uint32_t a = 0; a < 12; ++a) {
    bool forbidden = p1.p.contains(Atom{a});
    REQUIRE(neg.next(0, Atom{a}) == (forbidden ? 1 : 0));
    REQUIRE(neg.next(1, Atom{a}) == 1);
  }

  // Any string containing a forbidden atom reaches and stays in the bad sink.
  std::vector<Atom> seq = {u->parse_atom("crt"), u->parse_atom("cdt"), u->parse_atom("crt")};
  auto run = simulate(neg, seq);
  REQUIRE(run.has_value());
  REQUIRE(run->vertices.back() == 1);
}

TEST_CASE("vacuous invariance keeps the bad state unreachable") {
  auto u = AtomUniverse::create(rovers_alphabets());
  InvarianceProperty vac{AtomSet(u), "vacuous"};
  PlanFSA neg = neg_invariance_fsa(vac);
  auto seen = accessible_states(neg, neg.initial());
  REQUIRE(seen[1] == 0);
  REQUIRE_FALSE(lasso_emptiness(neg));
}

TEST_CASE("negation automaton for first-response kills answered runs") {
  auto u = AtomUniverse::create(rovers_alphabets());
  ResponseProperty p{lift(u, 0, {"deliver"}), lift(u, 2, {"receive"}), false, "P2"};
  PlanFSA neg = neg_first_response_fsa(p);

  REQUIRE(neg.state_count() == 2);
  REQUIRE(neg.bad() == std::vector<std::uint32_t>{1});
  for (std::uint32_t a = 0; a < 12; ++a) {
    bool in_p = p.p.contains(Atom{a});
    bool in_q = p.q.contains(Atom{a});
    std::int32_t from1 = neg.next(0, Atom{a});
    std::int32_t from2 = neg.next(1, Atom{a});
    if (!in_p)
      REQUIRE(from1 == 0);
    else if (!in_q)
      REQUIRE(from1 == 1);
    else
      REQUIRE(from1 == kUndefined);  // trigger answered in the same instant
    REQUIRE(from2 == (in_q ? kUndefined : 1));
  }
}

TEST_CASE("response with a universal response set accepts nothing") {
  auto u = AtomUniverse::create(rovers_alphabets());
  ResponseProperty p{lift(u, 0, {"deliver"}), make_full_set(u), false, "q=1"};
  PlanFSA neg = neg_first_response_fsa(p);
  for (std::uint32_t a = 0; a < 12; ++a) REQUIRE(neg.next(1, Atom{a}) == kUndefined);
  REQUIRE_FALSE(lasso_emptiness(neg));
}

TEST_CASE("parser resolves the documented formulas") {
  auto u = AtomUniverse::create(rovers_alphabets());

  Property p1 = parse_property("invariant !(I-deliver & L-transmit)", u);
  REQUIRE(is_invariance(p1));
  const auto& inv = std::get<InvarianceProperty>(p1);
  REQUIRE(inv.p.count() == 2);
  REQUIRE(inv.p.contains(u->parse_atom("cdt")));
  REQUIRE(inv.p.contains(u->parse_atom("ddt")));

  Property p5 = parse_property("response F-deliver => I-receive & L-receive", u);
  REQUIRE_FALSE(is_invariance(p5));
  const auto& resp = std::get<ResponseProperty>(p5);
  REQUIRE(resp.p == lift(u, 0, {"deliver"}));
  REQUIRE(resp.q == lift(u, 1, {"receive"}).meet(lift(u, 2, {"receive"})));
  REQUIRE_FALSE(resp.first_only);

  // Disjunction inside the negated condition.
  Property both = parse_property(
      "invariant !(I-deliver & L-transmit | I-deliver & L-pause)", u);
  REQUIRE(std::get<InvarianceProperty>(both).p.count() == 4);
}

TEST_CASE("parser rejects malformed input with positions") {
  auto u = AtomUniverse::create(rovers_alphabets());
  REQUIRE_THROWS_AS(parse_property("invariant !()", u), ParseError);
  REQUIRE_THROWS_AS(parse_property("invariant (F-collect)", u), ParseError);
  REQUIRE_THROWS_AS(parse_property("response F-deliver", u), ParseError);
  REQUIRE_THROWS_AS(parse_property("invariant !(F-explode)", u), ParseError);
  REQUIRE_THROWS_AS(parse_property("maybe F-collect", u), ParseError);
  try {
    parse_property("invariant !(F-explode)", u);
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find("position") != std::string::npos);
  }
}

TEST_CASE("property files: one per line with comments") {
  auto u = AtomUniverse::create(rovers_alphabets());
  auto fx = rovers_fixture();
  auto props = parse_property_file(fx.property_suite, u);
  REQUIRE(props.size() == 10);
  std::size_t invariance = 0;
  for (const auto& p : props)
    if (is_invariance(p)) ++invariance;
  REQUIRE(invariance == 5);
}

TEST_CASE("invariance emptiness equivalence on random plans") {
  auto u = AtomUniverse::create(rovers_alphabets());
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    PlanFSA plan = random_plan(u, 2 + rng.below(5), 0.6, rng);
    AtomSet p = random_nonempty(u, rng, 0.2);
    InvarianceProperty prop{p, "rand"};
    ProductFSA prod = product_with_property(plan, neg_invariance_fsa(prop));
    bool nonempty = lasso_emptiness(prod.fsa());
    bool violated = oracle_invariance(plan, p);
    REQUIRE(nonempty == violated);
  }
}

TEST_CASE("first-response emptiness equivalence on random plans") {
  auto u = AtomUniverse::create(rovers_alphabets());
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    PlanFSA plan = random_plan(u, 2 + rng.below(5), 0.65, rng);
    AtomSet p = random_nonempty(u, rng, 0.25);
    AtomSet q = random_nonempty(u, rng, 0.25);
    ResponseProperty prop{p, q, true, "rand"};
    ProductFSA prod = product_with_property(plan, neg_first_response_fsa(prop));
    bool nonempty = lasso_emptiness(prod.fsa());
    bool violated = oracle_response(plan, p, q, true);
    REQUIRE(nonempty == violated);
  }
}
