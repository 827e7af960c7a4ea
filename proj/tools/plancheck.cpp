// Command-line front end: verification of plan files against property files,
// product formation, operator application, the safe-operator decision table,
// the timing experiment suites, oracle cross-checks, and fixture generation.
//
// Exit status: 0 success/PASS, 1 FAIL or AVOID, 2 usage or input error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plancheck/harness.hpp"
#include "plancheck/io.hpp"

namespace pc = plancheck;
namespace fs = std::filesystem;

namespace {

struct VerifyOptions {
  std::vector<std::string> plan_paths;
  std::string property_path;
  std::string situation = "1plan";
  std::string algorithm = "auto";
  std::string edit_path;
  std::string context_path;
  std::string save_context_path;
  std::string format = "text";
  bool first_error = false;
  bool all_errors = false;
};

struct LoadedPlans {
  pc::UniversePtr universe;
  std::vector<pc::PlanFSA> plans;
};

LoadedPlans load_plans(const std::vector<std::string>& paths) {
  if (paths.empty()) throw pc::InputError("at least one --plan is required");
  LoadedPlans out;
  for (const auto& path : paths) {
    pc::PlanFSA plan = pc::load_plan_file(path, out.universe);
    if (!out.universe) out.universe = plan.universe();
    out.plans.push_back(std::move(plan));
  }
  return out;
}

pc::ErrorMode mode_of(const VerifyOptions& opt, pc::ErrorMode fallback) {
  if (opt.first_error) return pc::ErrorMode::FirstError;
  if (opt.all_errors) return pc::ErrorMode::AllErrors;
  return fallback;
}

/// The automaton a property is checked on: the joint plan for invariance,
/// the joint plan joined with the property negation for response.
pc::ProductFSA make_target(const std::vector<pc::PlanFSA>& plans, const pc::Property& prop) {
  std::vector<pc::PlanFSA> comps = plans;
  if (!pc::is_invariance(prop)) comps.push_back(pc::negation_fsa(prop));
  return pc::total_product(std::span<const pc::PlanFSA>(comps));
}

struct OneResult {
  bool passed = true;
  std::string text;  // rendered against the verified automaton's labels
  pc::Json json;
};

OneResult make_result(const pc::Verdict& verdict, const pc::PlanFSA& subject,
                      const std::string& algorithm, const pc::Property& prop) {
  OneResult out;
  out.passed = verdict.passed();
  out.text = "property: " + pc::property_text(prop) + "\n" +
             pc::verdict_to_text(verdict, subject, algorithm);
  out.json = pc::verdict_to_json(verdict, subject, algorithm);
  out.json["property"] = pc::property_text(prop);
  return out;
}

/// Incremental flow shared by `--algorithm incremental` and auto: obtain the
/// pre-edit context (cache file or a fresh total run), re-form the product
/// incrementally, reverify from the restart states.
OneResult verify_incremental(const LoadedPlans& loaded, const pc::Property& prop,
                             pc::TableEdit edit, const VerifyOptions& opt) {
  pc::ErrorMode mode = mode_of(opt, pc::ErrorMode::AllErrors);
  std::uint32_t agent = edit.agent == pc::TableEdit::kSelfAgent
                            ? 0
                            : static_cast<std::uint32_t>(edit.agent);
  if (agent >= loaded.plans.size())
    throw pc::InputError("edit names agent " + std::to_string(agent) + " but only " +
                         std::to_string(loaded.plans.size()) + " plans were given");
  edit.agent = static_cast<std::int32_t>(agent);

  pc::ProductFSA pre = make_target(loaded.plans, prop);
  pc::VerificationContext ctx;
  bool have_ctx = false;
  if (!opt.context_path.empty()) {
    ctx = pc::context_from_json(pc::Json::parse(pc::read_file(opt.context_path)));
    have_ctx = ctx.fsa_id == pre.fsa().provenance_id() &&
               ctx.visited.size() == pre.fsa().state_count();
    if (!have_ctx)
      std::cerr << "note: cached context does not match the pre-edit plan; re-verifying\n";
  }
  if (!have_ctx) {
    if (pc::is_invariance(prop)) {
      auto [v, c] = pc::total_i(pre.fsa(), pc::property_trigger(prop), mode);
      ctx = std::move(c);
    } else {
      auto [v, c] = pc::total_at(pre.fsa(), mode);
      ctx = std::move(c);
    }
  }

  auto [post, restarts] = pc::inc_product_ni(std::move(pre), agent, edit, ctx);
  if (pc::is_invariance(prop)) {
    auto [v, c] =
        pc::inc_i_ni(post.fsa(), pc::property_trigger(prop), restarts, edit, ctx, mode);
    return make_result(v, post.fsa(), "Inc_I-NI", prop);
  }
  auto [v, c] = pc::inc_at_ni(post.fsa(), restarts, edit, ctx, mode);
  return make_result(v, post.fsa(), "Inc_AT-NI", prop);
}

OneResult verify_gen(const LoadedPlans& loaded, const pc::Property& prop,
                     const pc::TableEdit& edit, const VerifyOptions& opt) {
  if (loaded.plans.size() != 1)
    throw pc::InputError("--algorithm gen applies to a single (joint) plan");
  const pc::PlanFSA& plan = loaded.plans[0];
  auto classes = pc::classify_edit(plan, edit);
  bool is_gen = false;
  for (auto c : classes) is_gen = is_gen || c == pc::OperatorSchema::Gen;
  if (!is_gen) throw pc::InputError("the edit is not a generalization of the given plan");

  pc::AtomSet z(plan.universe());
  z.insert(edit.atom);
  if (pc::is_invariance(prop)) {
    auto [v0, ctx] = pc::total_i(plan, pc::property_trigger(prop));
    pc::Verdict v = pc::inc_gen_i(ctx.visited[edit.state] != 0, z, pc::property_trigger(prop),
                                  mode_of(opt, pc::ErrorMode::FirstError));
    return make_result(v, plan, "Inc_gen-I", prop);
  }
  const auto& resp = std::get<pc::ResponseProperty>(prop);
  pc::AtomSet y = pc::transition_condition(plan, edit.state,
                                           static_cast<std::uint32_t>(edit.new_target));
  pc::Verdict v = pc::inc_gen_r(y, z, resp.p, resp.q, mode_of(opt, pc::ErrorMode::FirstError));
  return make_result(v, plan, "Inc_gen-R", prop);
}

OneResult verify_total(const LoadedPlans& loaded, const pc::Property& prop,
                       const VerifyOptions& opt, pc::VerificationContext* ctx_out) {
  pc::ErrorMode mode = mode_of(opt, pc::ErrorMode::AllErrors);
  pc::ProductFSA target = make_target(loaded.plans, prop);
  if (pc::is_invariance(prop)) {
    auto [v, c] = pc::total_i(target.fsa(), pc::property_trigger(prop), mode);
    if (ctx_out) *ctx_out = std::move(c);
    return make_result(v, target.fsa(), "Total_I", prop);
  }
  auto [v, c] = pc::total_at(target.fsa(), mode);
  if (ctx_out) *ctx_out = std::move(c);
  return make_result(v, target.fsa(), "Total_AT", prop);
}

int run_verify(const VerifyOptions& opt) {
  LoadedPlans loaded = load_plans(opt.plan_paths);
  if (opt.property_path.empty()) throw pc::InputError("--property is required");
  auto properties = pc::parse_property_file(pc::read_file(opt.property_path), loaded.universe);
  if (properties.empty()) throw pc::InputError("property file holds no properties");
  pc::Situation situation = pc::parse_situation(opt.situation);

  std::optional<pc::TableEdit> edit;
  if (!opt.edit_path.empty()) {
    pc::Json edit_doc = pc::Json::parse(pc::read_file(opt.edit_path));
    auto docs = pc::edits_from_json(edit_doc, loaded.plans[0]);
    if (docs.size() != 1)
      throw pc::InputError("verify expects exactly one edit; use apply-op for sequences");
    edit = docs[0];
    if (edit->agent != pc::TableEdit::kSelfAgent && loaded.plans.size() > 1)
      // Resolve state labels against the named component plan.
      edit = pc::edits_from_json(edit_doc,
                                 loaded.plans[static_cast<std::size_t>(edit->agent)])[0];
  }

  std::vector<OneResult> results;
  pc::VerificationContext last_ctx;
  bool have_last_ctx = false;
  for (const auto& prop : properties) {
    pc::PropertyClass cls = pc::is_invariance(prop) ? pc::PropertyClass::Invariance
                                                    : pc::PropertyClass::Response;
    std::string algorithm = opt.algorithm;
    if (algorithm == "auto") {
      if (!edit) {
        algorithm = "total";
      } else {
        const pc::PlanFSA& host =
            loaded.plans[edit->agent == pc::TableEdit::kSelfAgent
                             ? 0
                             : static_cast<std::size_t>(edit->agent)];
        auto classes = pc::classify_edit(host, *edit);
        bool none = false;
        for (auto c : classes)
          if (pc::sml_lookup(c, situation, cls).none_needed) none = true;
        if (none) {
          results.push_back(
              make_result(pc::Verdict{}, loaded.plans[0], "None (a-priori safe)", prop));
          continue;
        }
        pc::SafetyVerdict best =
            classes.empty() ? pc::sml_lookup(pc::OperatorSchema::Change, situation, cls)
                            : pc::sml_lookup(classes.front(), situation, cls);
        switch (best.method) {
          case pc::CheckMethod::IncGenI:
          case pc::CheckMethod::IncGenR:
            algorithm = "gen";
            break;
          case pc::CheckMethod::IncINI:
          case pc::CheckMethod::IncATNI:
            algorithm = "incremental";
            break;
          default:
            algorithm = "total";
        }
      }
    }
    if (algorithm == "total") {
      pc::VerificationContext ctx;
      results.push_back(verify_total(loaded, prop, opt, &ctx));
      last_ctx = std::move(ctx);
      have_last_ctx = true;
    } else if (algorithm == "incremental") {
      if (!edit) throw pc::InputError("--algorithm incremental requires --edit");
      results.push_back(verify_incremental(loaded, prop, *edit, opt));
    } else if (algorithm == "gen") {
      if (!edit) throw pc::InputError("--algorithm gen requires --edit");
      results.push_back(verify_gen(loaded, prop, *edit, opt));
    } else {
      throw pc::InputError("unknown algorithm '" + algorithm + "'");
    }
  }

  if (!opt.save_context_path.empty()) {
    if (!have_last_ctx)
      throw pc::InputError("--save-context requires a total verification run");
    pc::write_file(opt.save_context_path, pc::context_to_json(last_ctx).dump(2) + "\n");
  }

  bool any_bad = false;
  for (const auto& r : results) any_bad = any_bad || !r.passed;

  if (opt.format == "json") {
    pc::Json doc = pc::Json::array();
    for (const auto& r : results) doc.push_back(r.json);
    std::cout << doc.dump(2) << "\n";
  } else {
    for (const auto& r : results) std::cout << r.text;
    std::cout << (any_bad ? "RESULT: FAIL\n" : "RESULT: PASS\n");
  }
  return any_bad ? 1 : 0;
}

int run_oracle_check(const VerifyOptions& opt) {
  LoadedPlans loaded = load_plans(opt.plan_paths);
  if (opt.property_path.empty()) throw pc::InputError("--property is required");
  auto properties = pc::parse_property_file(pc::read_file(opt.property_path), loaded.universe);

  pc::ProductFSA joint = pc::total_product(std::span<const pc::PlanFSA>(loaded.plans));
  bool all_agree = true;
  for (const auto& prop : properties) {
    bool checker_violation, oracle_violation;
    std::string name;
    if (pc::is_invariance(prop)) {
      auto [v, c] = pc::total_i(joint.fsa(), pc::property_trigger(prop));
      checker_violation = !v.passed();
      oracle_violation = pc::oracle_invariance(joint.fsa(), pc::property_trigger(prop),
                                               joint.fsa().state_count());
      name = "Total_I vs oracle_invariance";
    } else {
      const auto& resp = std::get<pc::ResponseProperty>(prop);
      pc::ProductFSA at =
          pc::product_with_property(joint.fsa(), pc::neg_first_response_fsa(resp));
      auto [v, c] = pc::total_at(at.fsa());
      checker_violation = !v.passed();
      oracle_violation =
          pc::oracle_response(joint.fsa(), resp.p, resp.q, true, joint.fsa().state_count());
      name = "Total_AT vs first-response oracle";
    }
    bool agree = checker_violation == oracle_violation;
    all_agree = all_agree && agree;
    std::cout << (agree ? "agree   " : "DISAGREE") << "  " << name << "  ["
              << pc::property_text(prop)
              << "]  checker=" << (checker_violation ? "violated" : "ok")
              << " oracle=" << (oracle_violation ? "violated" : "ok") << "\n";
  }
  return all_agree ? 0 : 1;
}

int run_fixture(const std::string& dir) {
  fs::create_directories(dir);
  auto fx = pc::rovers_fixture();
  pc::write_file(dir + "/f.plan", pc::plan_to_json(fx.far_rover).dump(2) + "\n");
  pc::write_file(dir + "/i.plan", pc::plan_to_json(fx.intermediary).dump(2) + "\n");
  pc::write_file(dir + "/l.plan", pc::plan_to_json(fx.lander).dump(2) + "\n");
  pc::write_file(dir + "/l.grid", pc::plan_to_grid(fx.lander));
  pc::write_file(dir + "/rovers.props", fx.property_suite);
  pc::write_file(dir + "/headline.props",
                 "invariant !(I-deliver & L-transmit)\n"
                 "response F-deliver => L-receive\n");
  pc::write_file(dir + "/fig9_s1.plan", pc::plan_to_json(pc::fig9_s1()).dump(2) + "\n");
  pc::write_file(dir + "/p3.props", "response M-a => M-d\n");
  pc::write_file(dir + "/fig9_stay.edit",
                 pc::edit_to_json(pc::fig9_stay_edit(), pc::fig9_s1()).dump(2) + "\n");
  std::cout << "wrote f.plan i.plan l.plan l.grid rovers.props headline.props fig9_s1.plan "
               "p3.props fig9_stay.edit to "
            << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verification toolkit for finite-state agent plans"};
  app.require_subcommand(1);

  VerifyOptions vopt;
  auto add_common = [&](CLI::App* cmd, bool with_algorithm) {
    cmd->add_option("--plan", vopt.plan_paths, "plan file (repeat for a joint product)")
        ->required();
    cmd->add_option("--property", vopt.property_path, "property file")->required();
    cmd->add_option("--situation", vopt.situation, "1agent|1plan|multplans");
    if (with_algorithm) {
      cmd->add_option("--algorithm", vopt.algorithm, "auto|total|incremental|gen");
      cmd->add_option("--edit", vopt.edit_path, "single-edit file for incremental modes");
      cmd->add_option("--context", vopt.context_path, "cached pre-edit verification context");
      cmd->add_option("--save-context", vopt.save_context_path,
                      "write the context of a total run");
      cmd->add_flag("--first-error", vopt.first_error, "stop at the first error");
      cmd->add_flag("--all-errors", vopt.all_errors, "collect every error (default)");
    }
    cmd->add_option("--format", vopt.format, "text|json");
  };

  CLI::App* verify = app.add_subcommand("verify", "check properties of plan file(s)");
  add_common(verify, true);

  CLI::App* oracle =
      app.add_subcommand("oracle-check", "cross-validate the checker against the oracle");
  add_common(oracle, false);

  CLI::App* product = app.add_subcommand("product", "form and write the joint product plan");
  std::vector<std::string> prod_plans;
  std::string prod_out;
  product->add_option("--plan", prod_plans, "plan file (repeatable)")->required();
  product->add_option("--output", prod_out, "output path (default stdout)");

  CLI::App* apply = app.add_subcommand("apply-op", "apply an edit file to a plan");
  std::string apply_plan, apply_edits, apply_out;
  apply->add_option("--plan", apply_plan, "plan file")->required();
  apply->add_option("--edit", apply_edits, "edit file (object or array)")->required();
  apply->add_option("--output", apply_out, "output path (default stdout)");

  CLI::App* recommend =
      app.add_subcommand("recommend", "fastest reverification method for an operator");
  std::string rec_op, rec_sit = "1plan", rec_cls = "invariance";
  recommend->add_option("--operator", rec_op, "operator schema name")->required();
  recommend->add_option("--situation", rec_sit, "1agent|1plan|multplans");
  recommend->add_option("--class", rec_cls, "invariance|response");

  CLI::App* experiment = app.add_subcommand("experiment", "run a timing suite");
  std::string exp_protocol = "change", exp_props, exp_format = "text", exp_density = "dense";
  std::vector<std::size_t> exp_sizes = {8, 15};
  std::size_t exp_runs = 6, exp_warmups = 3;
  std::uint64_t exp_seed = 1;
  std::size_t exp_cap = 0;
  experiment->add_option("--protocol", exp_protocol, "change|gen");
  experiment->add_option("--properties", exp_props, "property file (default: rover suite)");
  experiment->add_option("--sizes", exp_sizes, "states per agent (repeatable)");
  experiment->add_option("--trials", exp_runs, "runs per property per size");
  experiment->add_option("--warmups", exp_warmups, "discarded warmup trials per cell");
  experiment->add_option("--seed", exp_seed, "base seed");
  experiment->add_option("--cap-largest-response", exp_cap,
                         "cap measured response trials at the largest size (0 = none)");
  experiment->add_option("--density", exp_density, "dense|sparse");
  experiment->add_option("--format", exp_format, "text|csv");

  CLI::App* fixture = app.add_subcommand("fixture", "write the rover and regression fixtures");
  std::string fix_dir = ".";
  fixture->add_option("--dir", fix_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return run_verify(vopt);
    if (oracle->parsed()) return run_oracle_check(vopt);
    if (product->parsed()) {
      LoadedPlans loaded = load_plans(prod_plans);
      pc::ProductFSA prod = pc::total_product(std::span<const pc::PlanFSA>(loaded.plans));
      std::string body = pc::plan_to_json(prod.fsa()).dump(2) + "\n";
      if (prod_out.empty())
        std::cout << body;
      else
        pc::write_file(prod_out, body);
      return 0;
    }
    if (apply->parsed()) {
      pc::PlanFSA plan = pc::load_plan_file(apply_plan);
      auto edits = pc::edits_from_json(pc::Json::parse(pc::read_file(apply_edits)), plan);
      for (const auto& e : edits) plan = pc::apply_edit(plan, e);
      std::string body = pc::plan_to_json(plan).dump(2) + "\n";
      if (apply_out.empty())
        std::cout << body;
      else
        pc::write_file(apply_out, body);
      return 0;
    }
    if (recommend->parsed()) {
      pc::OperatorSchema schema = pc::parse_schema(rec_op);
      pc::Situation sit = pc::parse_situation(rec_sit);
      pc::PropertyClass cls;
      if (rec_cls == "invariance")
        cls = pc::PropertyClass::Invariance;
      else if (rec_cls == "response")
        cls = pc::PropertyClass::Response;
      else
        throw pc::InputError("unknown property class '" + rec_cls + "'");
      std::cout << pc::sml_cell_text(schema, sit, cls) << "\n";
      return 0;
    }
    if (experiment->parsed()) {
      pc::SuiteConfig cfg;
      cfg.base.density =
          exp_density == "sparse" ? pc::Density::SparseRetry : pc::Density::DenseEngineered;
      cfg.protocol = exp_protocol == "gen" ? pc::Protocol::Gen : pc::Protocol::Change;
      cfg.sizes = exp_sizes;
      cfg.runs_per_property = exp_runs;
      cfg.warmup_trials = exp_warmups;
      cfg.seed = exp_seed;
      if (exp_cap > 0) cfg.max_response_trials_at_largest = exp_cap;
      pc::UniversePtr u = pc::make_universe(cfg.base);
      std::string props_text =
          exp_props.empty() ? pc::rovers_fixture().property_suite : pc::read_file(exp_props);
      cfg.properties = pc::parse_property_file(props_text, u);
      pc::SuiteReport report = pc::run_suite(cfg);
      std::cout << (exp_format == "csv" ? pc::suite_to_csv(report)
                                        : pc::suite_to_text(report));
      return 0;
    }
    if (fixture->parsed()) return run_fixture(fix_dir);
  } catch (const pc::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pc::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pc::Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
