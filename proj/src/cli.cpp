#include "learnreach/cli.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "learnreach/errors.hpp"
#include "learnreach/queries.hpp"
#include "learnreach/report_io.hpp"
#include "learnreach/scenarios.hpp"

namespace learnreach {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string command_name(Command c) {
  switch (c) {
    case Command::solve:
      return "solve";
    case Command::ttl:
      return "ttl";
    case Command::policy:
      return "policy";
    case Command::reach:
      return "reach";
    case Command::scenario:
      return "scenario";
  }
  return "?";
}

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

struct Context {
  const RunOptions& options;
  ScenarioConfig config;
  json meta;
  std::ostream& out;

  CsvWriter csv(const std::string& file, const std::vector<std::string>& header) const {
    return CsvWriter(options.out / file, meta, header, options.timestamp);
  }
  fs::path path(const std::string& file) const { return options.out / file; }
};

std::vector<std::string> coord_header(std::size_t dims) {
  static const char* names[] = {"x", "y", "heading"};
  std::vector<std::string> h;
  for (std::size_t d = 0; d < dims; ++d) h.push_back(d < 3 ? names[d] : "c" + std::to_string(d));
  return h;
}

void append(std::vector<std::string>& row, std::span<const double> xs) {
  for (double x : xs) row.push_back(num(x));
}

std::string regions_of(const ScenarioConfig& c, const std::vector<double>& x) {
  std::string s;
  for (const auto& r : c.regions) {
    if (!r.contains(x[0], x[1])) continue;
    if (!s.empty()) s += ';';
    s += r.name;
  }
  return s;
}

std::size_t prior_closest_to_half(const std::vector<double>& priors) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < priors.size(); ++i) {
    if (std::abs(priors[i] - 0.5) < std::abs(priors[best] - 0.5)) best = i;
  }
  return best;
}

void write_ttl_outputs(const Context& ctx, const ScenarioInstance& inst, const TTLReport& rep) {
  const std::size_t pd = inst.human->physical_dims();
  {
    auto h = coord_header(pd);
    h.insert(h.begin(), "state");
    h.push_back("prior");
    h.push_back("ttl");
    auto w = ctx.csv("ttl.csv", h);
    for (std::size_t s = 0; s < rep.states.size(); ++s) {
      for (std::size_t p = 0; p < rep.priors.size(); ++p) {
        std::vector<std::string> row{num(s)};
        append(row, rep.states[s]);
        row.push_back(num(rep.priors[p]));
        row.push_back(format_optional(rep.at(s, p)));
        w.row(row);
      }
    }
    w.close();
  }
  {
    auto w = ctx.csv("ttl_by_prior.csv", {"prior", "mean", "stddev", "finite", "unreachable"});
    for (std::size_t p = 0; p < rep.priors.size(); ++p) {
      const auto a = rep.by_prior(p);
      w.row({num(rep.priors[p]), a.finite ? num(a.mean) : "inf", num(a.stddev), num(a.finite), num(a.unreachable)});
    }
    w.close();
  }
  {
    auto h = coord_header(pd);
    h.insert(h.begin(), "state");
    for (const char* c : {"regions", "mean", "stddev", "finite", "unreachable"}) h.push_back(c);
    auto w = ctx.csv("ttl_by_state.csv", h);
    for (std::size_t s = 0; s < rep.states.size(); ++s) {
      const auto a = rep.by_state(s);
      std::vector<std::string> row{num(s)};
      append(row, rep.states[s]);
      row.push_back(regions_of(ctx.config, rep.states[s]));
      row.push_back(a.finite ? num(a.mean) : "inf");
      row.push_back(num(a.stddev));
      row.push_back(num(a.finite));
      row.push_back(num(a.unreachable));
      w.row(row);
    }
    w.close();
  }
  if (!ctx.config.regions.empty()) {
    auto w = ctx.csv("ttl_by_region.csv", {"region", "states", "mean", "stddev", "finite", "unreachable"});
    for (const auto& r : ctx.config.regions) {
      const auto idx = inst.region_states(r.name);
      const auto a = rep.over_states(idx);
      w.row({r.name, num(idx.size()), a.finite ? num(a.mean) : "inf", num(a.stddev), num(a.finite),
             num(a.unreachable)});
    }
    w.close();
  }

  // Heatmap at the prior nearest 0.5: lattice layout when available (top
  // row = largest y, occupied points black), else one row of states.
  if (rep.priors.empty()) return;
  const std::size_t p = prior_closest_to_half(rep.priors);
  std::vector<std::vector<double>> m;
  if (const auto& lat = ctx.config.lattice) {
    const auto nx = static_cast<std::size_t>(lat->x[2]);
    const auto ny = static_cast<std::size_t>(lat->y[2]);
    m.assign(ny, std::vector<double>(nx, kInfinity));
    std::size_t s = 0;
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const double x = nx > 1 ? lat->x[0] + (lat->x[1] - lat->x[0]) * static_cast<double>(i) / static_cast<double>(nx - 1) : lat->x[0];
        const double y = ny > 1 ? lat->y[0] + (lat->y[1] - lat->y[0]) * static_cast<double>(j) / static_cast<double>(ny - 1) : lat->y[0];
        if (s < rep.states.size() && rep.states[s][0] == x && rep.states[s][1] == y) {
          const auto& v = rep.at(s, p);
          m[ny - 1 - j][i] = v ? *v : kInfinity;
          ++s;
        }
      }
    }
  } else {
    m.emplace_back();
    for (std::size_t s = 0; s < rep.states.size(); ++s) {
      const auto& v = rep.at(s, p);
      m.back().push_back(v ? *v : kInfinity);
    }
  }
  write_heatmap(m, ctx.path("ttl_heatmap.ppm"));
}

QuerySpec resolved_query(const RunOptions& o, const ScenarioConfig& c) {
  QuerySpec q = c.query;
  q.threads = o.threads;
  return q;
}

int do_solve(const Context& ctx, const ScenarioInstance& inst) {
  QuerySpec q = resolved_query(ctx.options, ctx.config);
  const ValueSolution sol = solve_backward(q, inst.grid, *inst.system);
  const GridSpace& g = *inst.grid;
  auto h = coord_header(g.physical_dims());
  h.insert(h.begin(), "node");
  h.push_back("estimate");
  h.push_back("value");
  h.push_back("arrival_step");
  auto w = ctx.csv("value.csv", h);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const JointState z = g.node_state(n);
    std::vector<std::string> row{num(n)};
    append(row, z.coords());
    row.push_back(num(sol.final_values[n]));
    row.push_back(sol.arrival[n] == kNeverArrives ? "inf" : std::to_string(sol.arrival[n]));
    w.row(row);
  }
  w.close();
  std::size_t reached = 0;
  for (auto a : sol.arrival) reached += a != kNeverArrives;
  ctx.out << "solve: " << g.node_count() << " nodes, " << reached << " reach the target within " << sol.steps
          << " steps\n";
  return kExitOk;
}

int do_ttl(const Context& ctx, const ScenarioInstance& inst) {
  const auto states = inst.initial_states();
  if (states.empty()) throw ConfigError("states", "no free initial states");
  if (ctx.config.priors.empty()) throw ConfigError("priors", "at least one prior required");
  const TTLReport rep = ttl_sweep(resolved_query(ctx.options, ctx.config), inst.grid, *inst.system, states,
                                  ctx.config.priors);
  write_ttl_outputs(ctx, inst, rep);
  ctx.out << "ttl: " << states.size() << " states x " << rep.priors.size() << " priors, one backward solve\n";
  return kExitOk;
}

void trace_rows(CsvWriter& w, const std::string& mode, const std::vector<JointState>& states,
                const std::vector<std::size_t>& actions, const std::optional<std::size_t>& crossing) {
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::vector<std::string> row{mode, num(k)};
    append(row, states[k].physical());
    row.push_back(num(states[k].scalar_estimate()));
    row.push_back(k < actions.size() ? num(actions[k]) : "");
    row.push_back(crossing && *crossing == k ? "1" : "0");
    w.row(row);
  }
}

int do_policy(const Context& ctx, const ScenarioInstance& inst) {
  const auto states = inst.initial_states();
  if (states.empty()) throw ConfigError("states", "no free initial states");
  if (ctx.config.priors.empty()) throw ConfigError("priors", "at least one prior required");
  const JointState z0 = make_joint_state(states.front(), ctx.config.priors.front());
  auto h = coord_header(inst.human->physical_dims());
  h.insert(h.begin(), {"mode", "step"});
  for (const char* c : {"estimate", "action", "crossing"}) h.push_back(c);
  auto w = ctx.csv("policy_trace.csv", h);
  QuerySpec q = resolved_query(ctx.options, ctx.config);
  if (ctx.config.kind == ScenarioKind::legibility) {
    BehaviorQuery bq;
    bq.base = q;
    bq.goal = ctx.config.learner.tracked;
    bq.delta = ctx.config.legibility_delta;
    bq.confidence = q.target.threshold;
    const auto legible = synthesize_behavior(bq, BehaviorMode::legible, inst.grid, *inst.system, z0);
    const auto deceptive = synthesize_behavior(bq, BehaviorMode::deceptive, inst.grid, *inst.system, z0);
    const auto greedy = argmax_q_rollout(*inst.system, TargetSpec::belief_at_least(bq.confidence), bq.goal, z0,
                                         q.steps());
    trace_rows(w, "legible", legible.states, legible.actions, legible.crossing_step);
    trace_rows(w, "argmax_q", greedy.states, greedy.actions, greedy.crossing_step);
    trace_rows(w, "deceptive", deceptive.states, deceptive.actions, deceptive.crossing_step);
    auto step = [](const std::optional<std::size_t>& s) { return s ? std::to_string(*s) : std::string("none"); };
    ctx.out << "policy: crossing steps legible " << step(legible.crossing_step) << ", argmax-Q "
            << step(greedy.crossing_step) << ", deceptive " << step(deceptive.crossing_step) << "\n";
  } else {
    q.retain_slices = true;
    const ValueSolution sol = solve_backward(q, inst.grid, *inst.system);
    const Rollout r = extract_policy_rollout(sol, *inst.system, z0, sol.steps);
    trace_rows(w, q.strategy == Strategy::minimize ? "minimize" : "maximize", r.states, r.actions, r.crossing_step);
    ctx.out << "policy: " << r.actions.size() << " steps\n";
  }
  w.close();
  return kExitOk;
}

int do_reach(const Context& ctx, const ScenarioInstance& inst) {
  const auto states = inst.initial_states();
  if (states.empty()) throw ConfigError("states", "no free initial states");
  const auto& inits = ctx.config.initial_weights.empty() ? ctx.config.priors : ctx.config.initial_weights;
  if (inits.empty()) throw ConfigError("initial_weights", "at least one initial estimate required");
  const ControlRestriction restriction = ctx.config.query.restriction;
  const WeightHeatmap hm = reachable_weights(inst.grid, *inst.system, states.front(), inits,
                                             ctx.config.forward_steps(), restriction, ctx.options.threads);
  {
    auto w = ctx.csv("reach_arrival.csv", {"w0", "w_star", "arrival"});
    for (std::size_t r = 0; r < hm.initial.size(); ++r) {
      for (std::size_t c = 0; c < hm.targets.size(); ++c) {
        w.row({num(hm.initial[r]), num(hm.targets[c]), format_optional(hm.arrival[r][c])});
      }
    }
    w.close();
  }
  {
    auto w = ctx.csv("reach_summary.csv", {"w0", "reachable", "arrival_at_target"});
    for (std::size_t r = 0; r < hm.initial.size(); ++r) {
      w.row({num(hm.initial[r]), num(hm.reachable_count(r)),
             format_optional(hm.arrival_at(r, ctx.config.target_weight))});
    }
    w.close();
  }
  std::vector<std::vector<double>> m;
  for (const auto& row : hm.arrival) {
    m.emplace_back();
    for (const auto& v : row) m.back().push_back(v ? *v : kInfinity);
  }
  write_heatmap(m, ctx.path("reach_heatmap.ppm"));
  ctx.out << "reach: " << hm.initial.size() << " initializations, " << hm.steps << " steps\n";
  return kExitOk;
}

std::string prior_label(double p) {
  if (p > 0.5) return "correct";
  if (p < 0.5) return "incorrect";
  return "uniform";
}

int do_contingency(const Context& ctx, const ScenarioInstance& inst) {
  const ContingencyBatch batch = run_contingency_batch(inst, ctx.options.threads);
  const auto& c = ctx.config;
  {
    BranchTimeQuery q;
    q.base = resolved_query(ctx.options, c);
    q.delta = c.branch_delta;
    q.confidence = c.confidence;
    q.first = c.learner.tracked;
    q.second = c.learner.other;
    const auto sols = solve_branching(q, inst.grid, *inst.system);
    auto h = coord_header(inst.human->physical_dims());
    h.insert(h.begin(), "state");
    for (const char* col : {"prior_g1", "ttl_g1", "ttl_g2", "t_b"}) h.push_back(col);
    auto w = ctx.csv("branching_time.csv", h);
    const auto states = inst.initial_states();
    for (std::size_t s = 0; s < states.size(); ++s) {
      for (double b : c.priors) {
        const BranchTime bt = branching_time(sols, make_joint_state(states[s], b));
        std::vector<std::string> row{num(s)};
        append(row, states[s]);
        row.push_back(num(b));
        row.push_back(format_optional(bt.ttl[0]));
        row.push_back(format_optional(bt.ttl[1]));
        row.push_back(format_optional(bt.t_b));
        w.row(row);
      }
    }
    w.close();
  }
  {
    auto w = ctx.csv("branch_times.csv", {"initial_condition", "prior_g1", "ttl_g1", "ttl_g2", "t_b", "t_b_steps"});
    for (const auto* t : batch.of(BranchPolicy::max_ttl)) {
      const double b1 = t->true_goal == 0 ? t->prior_on_true : 1.0 - t->prior_on_true;
      w.row({num(t->initial_condition), num(b1), format_optional(t->branch.ttl[0]),
             format_optional(t->branch.ttl[1]), format_optional(t->branch.t_b), num(t->branch_step)});
    }
    w.close();
  }
  {
    auto w = ctx.csv("trials.csv", {"trial", "policy", "initial_condition", "true_goal", "prior_on_true",
                                    "prior_label", "branch_step", "efficiency", "safety", "rejected_plans"});
    for (std::size_t i = 0; i < batch.trials.size(); ++i) {
      const auto& t = batch.trials[i];
      w.row({num(i), to_string(t.policy), num(t.initial_condition), num(t.true_goal), num(t.prior_on_true),
             prior_label(t.prior_on_true), num(t.branch_step), num(t.result.metrics.efficiency),
             num(t.result.metrics.safety), num(t.result.rejected_plans)});
    }
    w.close();
  }
  {
    auto w = ctx.csv("contingency_summary.csv", {"policy", "prior", "trials", "efficiency_mean", "efficiency_std",
                                                 "safety_mean", "safety_std", "safety_min"});
    for (BranchPolicy p : {BranchPolicy::safeguard_both, BranchPolicy::heuristic, BranchPolicy::max_ttl}) {
      std::vector<std::string> labels{"all"};
      if (p != BranchPolicy::safeguard_both) {
        labels.clear();
        for (double q : c.sim_priors) {
          const auto l = prior_label(q);
          if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
        }
      }
      for (const auto& label : labels) {
        std::vector<std::optional<double>> eff, safe;
        double smin = kInfinity;
        for (const auto* t : batch.of(p)) {
          if (label != "all" && prior_label(t->prior_on_true) != label) continue;
          eff.emplace_back(t->result.metrics.efficiency);
          safe.emplace_back(t->result.metrics.safety);
          smin = std::min(smin, t->result.metrics.safety);
        }
        const auto e = aggregate(eff);
        const auto s = aggregate(safe);
        w.row({to_string(p), label == "all" ? "n/a" : label, num(e.finite), num(e.mean), num(e.stddev),
               num(s.mean), num(s.stddev), num(smin)});
      }
    }
    w.close();
  }
  for (std::size_t i = 0; i < batch.trials.size(); ++i) {
    auto w = ctx.csv("traces/trial_" + std::to_string(i) + ".csv",
                     {"t", "robot_x", "robot_y", "robot_heading", "human_x", "human_y", "human_heading", "b_g1",
                      "plan", "human_action"});
    for (const auto& s : batch.trials[i].result.trace) {
      std::vector<std::string> row{num(s.t)};
      append(row, s.robot);
      append(row, s.human);
      row.push_back(num(s.belief));
      row.push_back(num(s.plan));
      row.push_back(num(s.human_action));
      w.row(row);
    }
    w.close();
  }
  for (BranchPolicy p : {BranchPolicy::safeguard_both, BranchPolicy::max_ttl, BranchPolicy::heuristic}) {
    ctx.out << to_string(p) << ": mean efficiency " << batch.mean_efficiency(p) << " m, min safety "
            << batch.min_safety(p) << " m\n";
  }
  return kExitOk;
}

int do_scenario(const Context& ctx, const ScenarioInstance& inst) {
  switch (ctx.config.kind) {
    case ScenarioKind::confidence:
      return do_ttl(ctx, inst);
    case ScenarioKind::legibility:
      return do_policy(ctx, inst);
    case ScenarioKind::gradient_init:
      return do_reach(ctx, inst);
    case ScenarioKind::driving:
      return do_contingency(ctx, inst);
  }
  return kExitOk;
}

ScenarioConfig resolve_config(const RunOptions& o) {
  if (o.config && o.name) throw ConfigError("--config", "give either --config or --name, not both");
  ScenarioConfig c;
  if (o.config) {
    if (!fs::exists(*o.config)) throw ConfigError(o.config->string(), "config file not found");
    c = load_scenario_config(*o.config);
  } else if (o.name) {
    const auto found = find_scenario(*o.name);
    if (!found) throw ConfigError("--name", "unknown scenario \"" + *o.name + "\"");
    c = *found;
  } else {
    throw ConfigError("--config", "a config file or --name is required");
  }
  if (o.interpolation) c.query.interpolation = *o.interpolation;
  if (o.retain_slices) c.query.retain_slices = true;
  c.validate();
  return c;
}

}  // namespace

int run_command(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const ScenarioConfig config = resolve_config(options);
    if (options.dump_config) {
      out << to_json(config).dump(2) << '\n';
      return kExitOk;
    }
    std::error_code ec;
    fs::create_directories(options.out, ec);
    if (ec || !fs::is_directory(options.out)) {
      throw ConfigError("--out", "cannot create output directory " + options.out.string());
    }
    const json meta{{"tool", "learnreach"}, {"command", command_name(options.command)}, {"config", to_json(config)}};
    const Context ctx{options, config, meta, out};
    const ScenarioInstance inst = build_scenario(config, cache_dir_from_env(), options.threads);
    switch (options.command) {
      case Command::solve:
        return do_solve(ctx, inst);
      case Command::ttl:
        return do_ttl(ctx, inst);
      case Command::policy:
        return do_policy(ctx, inst);
      case Command::reach:
        return do_reach(ctx, inst);
      case Command::scenario:
        return do_scenario(ctx, inst);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolverError;
  }
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-to-learn and reachability analysis for online human-model learners"};
  app.require_subcommand(1);
  RunOptions o;
  std::string config, name, interpolation;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads (0 = available parallelism)");
    sub->add_option("--interpolation", interpolation, "multilinear or nearest")
        ->check(CLI::IsMember({"multilinear", "nearest"}));
    sub->add_flag("--retain-slices", o.retain_slices, "Keep per-step value slices");
    sub->add_flag("--timestamp", o.timestamp, "Add a generation time to CSV metadata");
    sub->add_flag("--dump-config", o.dump_config, "Print the resolved config and exit");
  };
  const std::pair<const char*, Command> commands[] = {{"solve", Command::solve},
                                                      {"ttl", Command::ttl},
                                                      {"policy", Command::policy},
                                                      {"reach", Command::reach},
                                                      {"scenario", Command::scenario}};
  for (const auto& [cmd_name, cmd] : commands) {
    CLI::App* sub = app.add_subcommand(cmd_name);
    add_common(sub);
    if (cmd == Command::scenario) {
      sub->add_option("--name", name, "Catalog scenario: driving, confidence, legibility, gradient-init");
    }
    sub->callback([&o, cmd = cmd] { o.command = cmd; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitConfigError;
  }
  if (!config.empty()) o.config = config;
  if (!name.empty()) o.name = name;
  if (interpolation == "nearest") o.interpolation = Interpolation::nearest;
  if (interpolation == "multilinear") o.interpolation = Interpolation::multilinear;
  return run_command(o, out, err);
}

}  // namespace learnreach
