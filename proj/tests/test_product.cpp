#include <catch2/catch_amalgamated.hpp>

#include "plancheck/checker.hpp"
#include "plancheck/harness.hpp"
#include "plancheck/product.hpp"
#include "plancheck/rng.hpp"

using namespace plancheck;

namespace {

PlanFSA random_plan(const UniversePtr& u, std::size_t n, double fill, Rng& rng,
                    std::string name = "rand") {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(name + std::to_string(i));
  std::vector<std::int32_t> delta(n * u->atom_count(), kUndefined);
  for (auto& cell : delta)
    if (rng.chance(fill)) cell = static_cast<std::int32_t>(rng.below(n));
  std::vector<std::uint32_t> initial = {0};
  if (n > 1 && rng.chance(0.3)) initial.push_back(1);
  return PlanFSA(std::move(name), u, std::move(labels), std::move(initial), {},
                 std::move(delta));
}

}  // namespace

TEST_CASE("rovers product: documented transition and initial states") {
  auto fx = rovers_fixture();
  ProductFSA prod = total_product({fx.far_rover, fx.intermediary, fx.lander});
  const PlanFSA& s = prod.fsa();

  REQUIRE(s.state_count() == 12);
  std::uint32_t crt_state = s.state_index("COLLECTING,RECEIVING,TRANSMITTING");
  std::int32_t next = s.next(crt_state, fx.universe->parse_atom("drt"));
  REQUIRE(next != kUndefined);
  REQUIRE(s.state_label(static_cast<std::uint32_t>(next)) ==
          "DELIVERING,DELIVERING,RECEIVING");

  std::vector<std::string> initials;
  for (auto i : s.initial()) initials.push_back(s.state_label(i));
  REQUIRE(initials == std::vector<std::string>{"COLLECTING,RECEIVING,TRANSMITTING",
                                               "COLLECTING,RECEIVING,RECEIVING",
                                               "COLLECTING,RECEIVING,PAUSING"});
}

TEST_CASE("product of a single automaton is an isomorphic copy") {
  auto fx = rovers_fixture();
  ProductFSA prod = total_product({fx.lander});
  REQUIRE(prod.fsa().state_count() == fx.lander.state_count());
  REQUIRE(prod.fsa().delta() == fx.lander.delta());
  REQUIRE(prod.fsa().initial() == fx.lander.initial());
}

TEST_CASE("product cells are defined iff every component is defined") {
  auto fx = rovers_fixture();
  ProductFSA prod = total_product({fx.far_rover, fx.intermediary, fx.lander});
  for (std::uint32_t v = 0; v < prod.fsa().state_count(); ++v) {
    auto tuple = prod.decode(v);
    for (std::uint32_t a = 0; a < prod.fsa().atom_count(); ++a) {
      bool all_defined = true;
      std::vector<std::uint32_t> succ;
      for (std::size_t k = 0; k < 3; ++k) {
        std::int32_t w = prod.components()[k].next(tuple[k], Atom{a});
        if (w == kUndefined) {
          all_defined = false;
          break;
        }
        succ.push_back(static_cast<std::uint32_t>(w));
      }
      std::int32_t cell = prod.fsa().next(v, Atom{a});
      if (!all_defined) {
        REQUIRE(cell == kUndefined);
      } else {
        REQUIRE(cell == static_cast<std::int32_t>(prod.encode(succ)));
      }
    }
  }
}

TEST_CASE("universe mismatch is rejected") {
  auto fx = rovers_fixture();
  auto other = AtomUniverse::create({{"Z", {"x", "y"}}});
  Rng rng(5);
  PlanFSA alien = random_plan(other, 2, 0.8, rng);
  std::vector<PlanFSA> comps = {fx.lander, alien};
  REQUIRE_THROWS_AS(total_product(std::span<const PlanFSA>(comps)), InputError);
}

TEST_CASE("property product inherits the bad set from the negation component") {
  auto fx = rovers_fixture();
  ProductFSA plan = total_product({fx.far_rover, fx.intermediary, fx.lander});
  ResponseProperty p2{lift(fx.universe, 0, {"deliver"}), lift(fx.universe, 2, {"receive"}),
                      false, "P2"};
  ProductFSA withp = product_with_property(plan.fsa(), neg_first_response_fsa(p2));

  REQUIRE(withp.fsa().state_count() == 24);
  // Exactly the tuples whose property component is state "2" are bad.
  std::size_t expected_bad = 0;
  for (std::uint32_t v = 0; v < withp.fsa().state_count(); ++v) {
    auto tuple = withp.decode(v);
    bool bad = tuple[1] == 1;
    REQUIRE(withp.fsa().is_bad(v) == bad);
    if (bad) ++expected_bad;
  }
  REQUIRE(expected_bad == 12);
  REQUIRE(withp.fsa().is_bad(withp.fsa().state_index("COLLECTING,RECEIVING,RECEIVING,2")));

  // A negation automaton without bad states is rejected.
  PlanFSA no_bad("nb", fx.universe, {"1"}, {0}, {},
                 std::vector<std::int32_t>(12, 0));
  REQUIRE_THROWS_AS(product_with_property(plan.fsa(), no_bad), InputError);
}

TEST_CASE("state and transition counts follow the component formula") {
  auto u = AtomUniverse::create({{"X", {"a", "b"}}, {"Y", {"c", "d", "e"}}});
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    PlanFSA f = random_plan(u, 1 + rng.below(4), 0.6, rng, "f");
    PlanFSA g = random_plan(u, 1 + rng.below(4), 0.6, rng, "g");
    std::vector<PlanFSA> comps = {f, g};
    ProductFSA prod = total_product(std::span<const PlanFSA>(comps));
    REQUIRE(prod.fsa().state_count() == f.state_count() * g.state_count());
    REQUIRE(prod.fsa().initial().size() == f.initial().size() * g.initial().size());

    std::size_t defined = 0;
    for (std::uint32_t vf = 0; vf < f.state_count(); ++vf)
      for (std::uint32_t vg = 0; vg < g.state_count(); ++vg)
        for (std::uint32_t a = 0; a < u->atom_count(); ++a)
          if (f.next(vf, Atom{a}) != kUndefined && g.next(vg, Atom{a}) != kUndefined)
            ++defined;
    std::size_t cells = 0;
    for (auto d : prod.fsa().delta())
      if (d != kUndefined) ++cells;
    REQUIRE(cells == defined);
  }
}

TEST_CASE("product is associative up to tuple flattening") {
  auto u = AtomUniverse::create({{"X", {"a", "b"}}, {"Y", {"c", "d", "e"}}});
  Rng rng(123);
  PlanFSA f = random_plan(u, 3, 0.7, rng, "f");
  PlanFSA g = random_plan(u, 2, 0.7, rng, "g");
  PlanFSA h = random_plan(u, 4, 0.7, rng, "h");

  ProductFSA flat = total_product({f, g, h});
  ProductFSA left = total_product({total_product({f, g}).fsa(), h});
  ProductFSA right = total_product({f, total_product({g, h}).fsa()});

  REQUIRE(flat.fsa().delta() == left.fsa().delta());
  REQUIRE(flat.fsa().delta() == right.fsa().delta());
  REQUIRE(flat.fsa().initial() == left.fsa().initial());
  REQUIRE(flat.fsa().initial() == right.fsa().initial());
}

TEST_CASE("incremental product equals the total product of edited inputs") {
  auto u = AtomUniverse::create({{"X", {"a", "b"}}, {"Y", {"c", "d", "e"}}});
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PlanFSA> comps;
    std::size_t n_comps = 2 + rng.below(2);
    for (std::size_t k = 0; k < n_comps; ++k)
      comps.push_back(random_plan(u, 1 + rng.below(4), 0.6, rng, "c" + std::to_string(k)));
    ProductFSA base = total_product(std::span<const PlanFSA>(comps));

    auto agent = static_cast<std::uint32_t>(rng.below(n_comps));
    TableEdit edit;
    edit.agent = static_cast<std::int32_t>(agent);
    edit.state = static_cast<std::uint32_t>(rng.below(comps[agent].state_count()));
    edit.atom = Atom{static_cast<std::uint32_t>(rng.below(u->atom_count()))};
    edit.new_target = rng.chance(0.2)
                          ? kUndefined
                          : static_cast<std::int32_t>(rng.below(comps[agent].state_count()));

    ProductFSA incremental = inc_product(base, agent, edit);
    std::vector<PlanFSA> edited = comps;
    edited[agent] = apply_edit(comps[agent], edit);
    ProductFSA fresh = total_product(std::span<const PlanFSA>(edited));
    REQUIRE(incremental.fsa().delta() == fresh.fsa().delta());
  }
}

TEST_CASE("identity edit leaves the table untouched") {
  auto fx = rovers_fixture();
  ProductFSA base = total_product({fx.far_rover, fx.intermediary, fx.lander});
  // delta(TRANSMITTING, crt) = RECEIVING already.
  TableEdit edit{2, fx.lander.state_index("TRANSMITTING"), fx.universe->parse_atom("crt"),
                 static_cast<std::int32_t>(fx.lander.state_index("RECEIVING"))};
  auto before = base.fsa().delta();
  ProductFSA after = inc_product(std::move(base), 2, edit);
  REQUIRE(after.fsa().delta() == before);
}

TEST_CASE("single-cell edit touches exactly the rows formed from the edited state") {
  auto u = AtomUniverse::create({{"X", {"a", "b"}}, {"Y", {"c", "d", "e"}}});
  Rng rng(31337);
  std::vector<PlanFSA> comps = {random_plan(u, 5, 0.7, rng, "f"),
                                random_plan(u, 5, 0.7, rng, "g"),
                                random_plan(u, 5, 0.7, rng, "h")};
  ProductFSA base = total_product(std::span<const PlanFSA>(comps));

  TableEdit edit{1, 2, Atom{3}, 4};
  ProductFSA next = inc_product(base, 1, edit);

  std::size_t diff_rows = 0;
  for (std::uint32_t v = 0; v < base.fsa().state_count(); ++v) {
    bool differs = false;
    for (std::uint32_t a = 0; a < u->atom_count(); ++a)
      if (base.fsa().next(v, Atom{a}) != next.fsa().next(v, Atom{a})) {
        differs = true;
        REQUIRE(a == edit.atom.index);  // only the edited column may change
      }
    if (differs) {
      REQUIRE(base.decode(v)[1] == edit.state);
      ++diff_rows;
    }
  }
  REQUIRE(diff_rows <= 25);  // 5 x 5 rows carry the edited component state
}

TEST_CASE("undefined stays undefined when another component blocks the atom") {
  auto u = AtomUniverse::create({{"X", {"a", "b"}}, {"Y", {"c", "d"}}});
  // g never defines atom index 1 anywhere.
  PlanFSA f("f", u, {"f0", "f1"}, {0}, {},
            {0, kUndefined, kUndefined, kUndefined, 1, kUndefined, kUndefined, kUndefined});
  PlanFSA g("g", u, {"g0"}, {0}, {}, {0, kUndefined, 0, kUndefined});
  ProductFSA base = total_product({f, g});

  TableEdit edit{0, 0, Atom{1}, 1};  // define f's cell on the blocked atom
  ProductFSA next = inc_product(std::move(base), 0, edit);
  REQUIRE(next.fsa().next(0, Atom{1}) == kUndefined);
}

TEST_CASE("provenance chaining detects mismatched agents and stale contexts") {
  auto fx = rovers_fixture();
  ProductFSA base = total_product({fx.far_rover, fx.intermediary, fx.lander});
  TableEdit edit{0, 0, Atom{0}, 1};
  REQUIRE_THROWS_AS(inc_product(base, 1, edit), ContractViolation);  // agent mismatch
  REQUIRE_THROWS_AS(inc_product(base, 7, edit), InputError);         // agent range

  VerificationContext bogus;
  bogus.fsa_id = 1;
  bogus.visited.assign(base.fsa().state_count(), 0);
  REQUIRE_THROWS_AS(inc_product_ni(base, 0, edit, bogus), ContractViolation);
}

TEST_CASE("inc_product_ni restarts are the visited rows of the edited state") {
  auto fx = rovers_fixture();
  ProductFSA base = total_product({fx.far_rover, fx.intermediary, fx.lander});
  AtomSet p1 = lift(fx.universe, 1, {"deliver"}).meet(lift(fx.universe, 2, {"transmit"}));
  auto [verdict, ctx] = total_i(base.fsa(), p1);
  REQUIRE(verdict.passed());

  TableEdit edit{1, fx.intermediary.state_index("RECEIVING"),
                 fx.universe->parse_atom("drp"),
                 static_cast<std::int32_t>(fx.intermediary.state_index("DELIVERING"))};
  auto [next, restarts] = inc_product_ni(base, 1, edit, ctx);

  // Tables must equal the incremental update without restarts.
  ProductFSA plain = inc_product(base, 1, edit);
  REQUIRE(next.fsa().delta() == plain.fsa().delta());

  // Restart states: visited tuples whose middle component is RECEIVING.
  for (auto r : restarts) {
    REQUIRE(ctx.visited[r] == 1);
    REQUIRE(next.decode(r)[1] == edit.state);
  }
  for (std::uint32_t v = 0; v < base.fsa().state_count(); ++v)
    if (ctx.visited[v] && base.decode(v)[1] == edit.state)
      REQUIRE(std::find(restarts.begin(), restarts.end(), v) != restarts.end());

  // Stored initial states are untouched.
  REQUIRE(next.fsa().initial() == base.fsa().initial());
}

TEST_CASE("inc_product_ni tables bit-match inc_product over random edits") {
  auto u = AtomUniverse::create({{"X", {"a", "b"}}, {"Y", {"c", "d", "e"}}});
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PlanFSA> comps = {random_plan(u, 1 + rng.below(4), 0.6, rng, "f"),
                                  random_plan(u, 1 + rng.below(4), 0.6, rng, "g")};
    ProductFSA base = total_product(std::span<const PlanFSA>(comps));
    AtomSet p(u);
    auto [verdict, ctx] = total_i(base.fsa(), p);

    auto agent = static_cast<std::uint32_t>(rng.below(comps.size()));
    TableEdit edit;
    edit.agent = static_cast<std::int32_t>(agent);
    edit.state = static_cast<std::uint32_t>(rng.below(comps[agent].state_count()));
    edit.atom = Atom{static_cast<std::uint32_t>(rng.below(u->atom_count()))};
    edit.new_target = static_cast<std::int32_t>(rng.below(comps[agent].state_count()));

    auto [ni, restarts] = inc_product_ni(base, agent, edit, ctx);
    ProductFSA plain = inc_product(std::move(base), agent, edit);
    REQUIRE(ni.fsa().delta() == plain.fsa().delta());
  }
}
