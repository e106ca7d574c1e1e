#include "dnes/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "dnes/aggregative.hpp"
#include "dnes/deception.hpp"
#include "dnes/linear_stability.hpp"

namespace dnes {

namespace {

std::string fmt_vec(const Vectord& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v(i), 10);
  return out;
}

std::string fmt_indices(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i] + 1);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// profit is minus the cost for the duopoly
IntervalSet negate(const IntervalSet& s) {
  std::vector<Interval> parts;
  for (const auto& iv : s.intervals()) parts.push_back({0.0 - iv.upper, 0.0 - iv.lower});
  return IntervalSet(parts);
}

void guarded(Report& rep, const std::string& block, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    rep.fail(block, e);
  } catch (const std::exception& e) {
    rep.fail(block, PreconditionError(e.what()));
  }
}

// failure of an analysis the scenario does not depend on: noted, exit status untouched
void optional_block(Report& rep, const std::string& block, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    rep.set(block + ".skipped", e.what());
  }
}

void costs_entry(Report& rep, const std::string& key, const Vectord& J, bool duopoly) {
  rep.set(key + "_cost", J);
  if (duopoly) rep.set(key + "_profit", Vectord(-J));
}

Vectord quadratic_costs(const QuadraticGamed& game, const Vectord& x) { return costs(game, x); }

void analyze_quadratic(const Scenario& scn, Report& rep) {
  const bool duopoly = scn.game.type == GameSpec::Type::duopoly;
  const QuadraticGamed game = build_quadratic(scn);
  const DeceptionStructure ds = build_deception(scn);
  const Vectord x_star = nash_equilibrium(game);
  rep.set("nash_equilibrium", x_star);
  costs_entry(rep, "nash", quadratic_costs(game, x_star), duopoly);
  if (ds.size() == 0) return;

  const DeceptiveMatrices dm = build_deceptive_matrices(game, ds);
  const DeltaScan scan{scn.analysis.delta_lower, scn.analysis.delta_upper};
  std::vector<IntervalSet> slices(std::size_t(ds.size()));
  for (int s = 0; s < ds.size(); ++s) {
    const auto& d = scn.deceivers[std::size_t(s)];
    const std::string key = "deceiver." + std::to_string(d.player + 1);
    rep.set(key + ".targets", fmt_indices(d.targets));
    rep.set(key + ".policy", to_string(d.policy));
    guarded(rep, key + ".delta_set", [&] {
      slices[std::size_t(s)] = delta_interval(dm, s, scan);
      rep.set(key + ".delta_set", slices[std::size_t(s)]);
    });
  }

  const bool sdso = ds.size() == 1 && ds[0].targets.size() == 1;
  std::optional<SdsoAnalysis> sa;
  const auto& d0 = scn.deceivers.front();
  if (sdso) {
    // attainable references only matter to a payoff-driven deceiver
    const bool needed = d0.policy == PolicyKind::integral || d0.policy == PolicyKind::phase_lead ||
                        !scn.analysis.benevolence_members.empty();
    (needed ? guarded : optional_block)(rep, "sdso", [&] {
      sa = sdso_analyze(game, ds[0].player, ds[0].targets[0]);
      rep.set("sdso.deceiver", std::to_string(sa->deceiver + 1));
      rep.set("sdso.oblivious", std::to_string(sa->oblivious + 1));
      rep.set("sdso.pivot", std::to_string(sa->pivot + 1));
      rep.set("sdso.phi", sa->Phi);
      rep.set("sdso.q", Vectord(Eigen::Vector3d(sa->q1, sa->q2, sa->q3)));
      rep.set("sdso.r1", sa->r1);
      rep.set("sdso.r2", sa->r2);
      const IntervalSet omega = omega_set(*sa, d0.gain_sign, slices[0]);
      rep.set("omega", omega);
      if (duopoly) rep.set("omega_profit", negate(omega));
    });
  }

  // delta at which each deceiver's policy comes to rest
  std::optional<Vectord> delta_star;
  guarded(rep, "delta_star", [&] {
    Vectord ds_star = Vectord::Zero(ds.size());
    bool all_fixed = true;
    for (const auto& d : scn.deceivers) all_fixed = all_fixed && d.policy == PolicyKind::fixed;
    if (all_fixed) {
      for (std::size_t s = 0; s < scn.deceivers.size(); ++s) ds_star(Eigen::Index(s)) = scn.deceivers[s].delta;
    } else if (sdso && d0.policy == PolicyKind::price_reference) {
      if (!sa) throw PreconditionError("price reference needs the single-deceiver analysis");
      const double phi = sa->Phi(sa->deceiver);
      if (phi == 0) throw PreconditionError("deceiver action does not move with delta");
      ds_star(0) = sa->f_inverse((d0.u_ref - sa->x_star(sa->deceiver)) / phi);
    } else if (sdso && sa) {
      ds_star(0) = solve_delta_for_ref(*sa, d0.reference, d0.gain_sign, slices[0]);
    } else {
      for (const auto& d : scn.deceivers)
        if (d.policy != PolicyKind::integral && d.policy != PolicyKind::phase_lead)
          throw PreconditionError("several deceivers are analysed with payoff references only");
      const Vectord start = scn.analysis.mutual_delta ? *scn.analysis.mutual_delta : Vectord::Zero(ds.size());
      ds_star = solve_references(game, ds, start);
    }
    if (!in_delta_set(dm, ds_star))
      throw PreconditionError("delta* = " + fmt_vec(ds_star) + " lies outside the stable deception set");
    delta_star = ds_star;
    rep.set("delta_star", ds_star);
    const Vectord x = dne(dm, ds_star);
    rep.set("dne", x);
    costs_entry(rep, "dne", quadratic_costs(game, x), duopoly);
  });

  if (ds.is_mutual_pair() && delta_star) {
    guarded(rep, "mutual", [&] {
      const auto at = mutual_attainability(game, ds, *delta_star);
      rep.set("mutual.J", at.J);
      rep.set("mutual.reference_error", at.reference_error);
      rep.set_flag("mutual.references_met", at.references_met);
      rep.set("mutual.jacobian", at.jacobian);
      rep.set_flag("mutual.jacobian_hurwitz", at.jacobian_hurwitz);
      rep.set_flag("mutual.attainable", at.attainable);
    });
  }

  for (const auto& d : scn.deceivers)
    for (int o : d.targets) {
      const std::string key = "reaction_curve." + std::to_string(o + 1) + ".by." + std::to_string(d.player + 1);
      guarded(rep, key, [&] {
        const auto shift = rc_classify(game, o, d.player);
        rep.set(key, to_string(shift.kind));
        if (shift.kind == ReactionCurveShift::Kind::rotation) rep.set(key + ".center", shift.center);
      });
    }

  for (int i = 0; i < game.players(); ++i) {
    const auto slots = ds.deceivers_of(i);
    if (slots.empty()) continue;
    std::vector<int> players;
    for (int s : slots) players.push_back(ds[s].player);
    guarded(rep, "immunity", [&] { rep.set_flag("immunity." + std::to_string(i + 1), immunity_check(game, i, players)); });
  }

  if (sa && !scn.analysis.benevolence_members.empty()) {
    guarded(rep, "benevolence", [&] {
      const auto ben = benevolence(*sa, d0.gain_sign, scn.analysis.benevolence_members, slices[0]);
      rep.set("benevolence.members", fmt_indices(scn.analysis.benevolence_members));
      rep.set_flag("benevolence.exists", ben.exists);
      rep.set("benevolence.window", ben.window);
      if (duopoly) rep.set("benevolence.window_profit", negate(ben.window));
      if (!ben.reason.empty()) rep.set("benevolence.reason", ben.reason);
    });
  }

  if (sdso && game.players() == 2 && delta_star && d0.policy != PolicyKind::fixed) {
    guarded(rep, "linearization", [&] {
      const auto kind = d0.policy == PolicyKind::price_reference ? ReferenceKind::price : ReferenceKind::payoff;
      const double k = scn.probe ? scn.probe->k : 1.0;
      const auto jac = build_jacobian(game, ds, (*delta_star)(0), d0.epsilon, kind, k);
      rep.set("linearization.k", k);
      rep.set("linearization.charpoly", jac.charpoly);
      rep.set("linearization.a1", jac.a1);
      rep.set("linearization.a0", jac.a0);
      rep.set("linearization.a1_star", jac.a1_star);
      rep.set("linearization.a0_star", jac.a0_star);
      if (!std::isnan(jac.a0_star_closed_form)) rep.set("linearization.a0_star_closed_form", jac.a0_star_closed_form);
      rep.set("linearization.stabilizing_sign", double(stabilizing_epsilon_sign(jac)));
      rep.set("linearization.epsilon_star", epsilon_star(jac));
      rep.set_flag("linearization.hurwitz", routh_hurwitz(jac.charpoly));
    });
  }

  if (ds.size() == 1) {
    int row = 0;
    for (double delta : scn.analysis.dne_deltas) {
      const std::string key = "dne_table." + std::to_string(++row);
      guarded(rep, key, [&] {
        const Vectord dv = Vectord::Constant(1, delta);
        const Vectord x = dne(dm, dv);
        Vectord line(1 + 2 * x.size());
        line << delta, x, quadratic_costs(game, x);
        rep.set(key, line);
      });
    }
  }
}

void analyze_aggregative(const Scenario& scn, Report& rep) {
  const AggregativeGamed game = build_aggregative(scn);
  const DeceptionStructure ds = build_deception(scn);
  guarded(rep, "monotonicity", [&] { rep.set("monotonicity_margins", monotonicity_margins(game)); });
  if (ds.size() == 0) {
    std::vector<Deceiver> none;
    const auto ne = dne_agg(game, DeceptionStructure(game.players(), none), 0.0);
    rep.set("nash_equilibrium", ne.x);
    rep.set("nash_cost", costs(game, ne.x));
    return;
  }
  const auto& d = scn.deceivers.front();
  const std::string key = "deceiver." + std::to_string(d.player + 1);
  rep.set(key + ".targets", fmt_indices(d.targets));
  rep.set(key + ".policy", to_string(d.policy));
  IntervalSet bounds;
  guarded(rep, key + ".delta_set", [&] {
    bounds = delta_bounds(game, ds);
    rep.set(key + ".delta_set", bounds);
  });
  guarded(rep, "benefit", [&] {
    const auto ben = benefit_condition(game, ds);
    rep.set("nash_equilibrium", ben.x_star);
    rep.set("nash_cost", costs(game, ben.x_star));
    rep.set("benefit.g_prime0", ben.g_prime0);
    rep.set("benefit.expression", ben.expression);
    rep.set_flag("benefit.holds", ben.holds);
    rep.set("benefit.direction", double(ben.beneficial_direction));
    if (!ben.diagnostic.empty()) rep.set("benefit.diagnostic", ben.diagnostic);
  });
  if (game.players() == 2)
    guarded(rep, "tuning", [&] { rep.set("tuning_hint", to_string(monotone_tuning_hint(game, ds))); });
  guarded(rep, "delta_star", [&] {
    double delta = 0;
    if (d.policy == PolicyKind::fixed) delta = d.delta;
    else if (d.policy == PolicyKind::price_reference)
      throw PreconditionError("price references are analysed for quadratic games only");
    else delta = solve_delta_for_reference(game, ds, d.reference);
    const auto eq = dne_agg(game, ds, delta);
    rep.set("delta_star", delta);
    rep.set("dne", eq.x);
    rep.set("dne_cost", costs(game, eq.x));
    rep.set_flag("dne.certified", eq.certified);
    rep.set_flag("dne.stable", eq.stable);
    rep.set("dne.method", eq.method);
    if (!eq.stable) throw InstabilityError("equilibrium at delta* is not locally stable");
  });
  int row = 0;
  for (double delta : scn.analysis.dne_deltas) {
    const std::string k = "dne_table." + std::to_string(++row);
    guarded(rep, k, [&] {
      const auto eq = dne_agg(game, ds, delta);
      Vectord line(1 + 2 * eq.x.size());
      line << delta, eq.x, costs(game, eq.x);
      rep.set(k, line);
    });
  }
}

void set_status(Report& rep) {
  rep.set("status", status_name(rep.exit_code()));
  rep.set("error_code", double(rep.exit_code()));
}

Report header(const Scenario& scn) {
  Report rep;
  if (!scn.name.empty()) rep.set("scenario", scn.name);
  rep.set("game", to_string(scn.game.type));
  rep.set("players", double(scn.game.players));
  return rep;
}

SweepRow sweep_one(const std::string& base, const SweepSpec& sweep, double value) {
  SweepRow row;
  row.value = value;
  try {
    const Scenario scn = parse_scenario(base, {sweep.parameter + "=" + format_number(value)});
    const SimulationRun run = run_simulation(scn);
    row.code = run.summary.exit_code();
    row.unstable = run.trajectory.unstable;
    const Sample& last = run.trajectory.windows.empty() ? run.trajectory.samples.back() : run.trajectory.steady_state();
    row.x = last.x;
    row.J = last.J;
    row.delta = last.delta;
    if (scn.game.type != GameSpec::Type::aggregative && last.delta.size() > 0) {
      const auto game = build_quadratic(scn);
      const auto dm = build_deceptive_matrices(game, build_deception(scn));
      if (in_delta_set(dm, last.delta)) {
        row.x_dne = dne(dm, last.delta);
        row.J_dne = costs(game, row.x_dne);
      }
    }
    if (row.code != 0) row.error = run.trajectory.diagnostic;
  } catch (const Error& e) {
    row.code = int(e.kind());
    row.error = e.what();
  } catch (const std::exception& e) {
    row.code = int(ErrorKind::precondition);
    row.error = e.what();
  }
  return row;
}

std::string file_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir.empty() ? "." : dir) / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw PreconditionError("cannot write '" + path + "'");
  f << text;
}

}  // namespace

void Report::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) { set(key, format_number(value, 10)); }
void Report::set(const std::string& key, const Vectord& value) { set(key, fmt_vec(value)); }

void Report::set(const std::string& key, const Matrixd& value) {
  std::string out;
  for (Eigen::Index r = 0; r < value.rows(); ++r) out += (r ? "; " : "") + fmt_vec(value.row(r).transpose());
  set(key, out);
}

void Report::set(const std::string& key, const IntervalSet& value) { set(key, value.to_string(6)); }

void Report::fail(const std::string& block, const Error& err) {
  if (code_ == 0) {
    code_ = int(err.kind());
    set("error", block + ": " + err.what());
  }
  set(block + ".error", err.what());
}

std::optional<std::string> Report::get(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return e.second;
  return std::nullopt;
}

std::string Report::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

Report Report::parse(const std::string& text) {
  Report rep;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    rep.set(trim(line.substr(0, eq)), trim(line.substr(eq + 3)));
  }
  if (auto code = rep.get("error_code")) rep.code_ = std::stoi(*code);
  return rep;
}

std::string status_name(int code) {
  switch (code) {
    case 0: return "ok";
    case 2: return "parse_error";
    case 3: return "precondition_failed";
    case 4: return "unstable";
  }
  return "error";
}

Report analyze(const Scenario& scn) {
  Report rep = header(scn);
  guarded(rep, "game", [&] {
    if (scn.game.type == GameSpec::Type::aggregative) analyze_aggregative(scn, rep);
    else analyze_quadratic(scn, rep);
  });
  set_status(rep);
  return rep;
}

SimulationRun run_simulation(const Scenario& scn) {
  SimulationRun run;
  run.summary = header(scn);
  const ClosedLoop loop = build_loop(scn);
  const Vectord z0 = build_initial_state(scn, loop);
  const SimOptions opt = build_sim_options(scn);
  run.trajectory = scn.sim.averaged ? simulate_averaged(loop, z0, opt) : simulate(loop, z0, opt);
  const auto& tr = run.trajectory;
  auto& rep = run.summary;
  rep.set("mode", std::string(scn.sim.averaged ? "averaged" : "full"));
  rep.set("step", tr.step);
  rep.set("window", tr.window);
  rep.set("t_end", tr.samples.back().t);
  rep.set_flag("unstable", tr.unstable);
  if (tr.unstable) rep.fail("simulation", InstabilityError(tr.diagnostic));
  if (!tr.windows.empty()) {
    const Sample& ss = tr.steady_state();
    rep.set("steady_state.t", ss.t);
    rep.set("steady_state.x", ss.x);
    rep.set("steady_state.delta", ss.delta);
    rep.set("steady_state.J", ss.J);
    if (scn.game.type == GameSpec::Type::duopoly) rep.set("steady_state.profit", Vectord(-ss.J));
  }
  set_status(rep);
  return run;
}

std::vector<SweepRow> run_sweep(const Scenario& scn, int threads) {
  if (!scn.sweep) throw PreconditionError("scenario has no [sweep] section");
  const SweepSpec sweep = *scn.sweep;
  const std::string base = serialize(scn);
  // the parameter must name a settable key
  parse_scenario(base, {sweep.parameter + "=" + format_number(sweep.from)});
  const auto values = sweep.values();
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) rows[i] = sweep_one(base, sweep, values[i]);
  };
  const int n = std::max(1, std::min<int>(threads, int(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

void write_sweep_csv(std::ostream& os, const Scenario& scn, const std::vector<SweepRow>& rows) {
  const int n = scn.game.players;
  os << scn.sweep->parameter << ",code,unstable";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",J" << i;
  for (const auto& d : scn.deceivers) os << ",delta" << d.player + 1;
  for (int i = 1; i <= n; ++i) os << ",x_dne" << i;
  for (int i = 1; i <= n; ++i) os << ",J_dne" << i;
  os << "\n";
  auto cells = [&](const Vectord& v, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) os << "," << (i < v.size() ? format_number(v(i)) : "");
  };
  for (const auto& r : rows) {
    os << format_number(r.value) << "," << r.code << "," << (r.unstable ? 1 : 0);
    cells(r.x, n);
    cells(r.J, n);
    cells(r.delta, Eigen::Index(scn.deceivers.size()));
    cells(r.x_dne, n);
    cells(r.J_dne, n);
    os << "\n";
  }
}

int run_command(const std::string& command, const std::string& path, const std::string& out_dir,
                const std::vector<std::string>& overrides, int threads, std::ostream& out, std::ostream& err) {
  Scenario scn;
  try {
    scn = load_scenario(path, overrides);
  } catch (const ScenarioError& e) {
    for (const auto& v : e.violations()) err << path << ": " << v << "\n";
    out << "status = " << status_name(2) << "\nerror_code = 2\n";
    return 2;
  } catch (const Error& e) {
    err << path << ": " << e.what() << "\n";
    out << "status = " << status_name(int(e.kind())) << "\nerror_code = " << int(e.kind()) << "\n";
    return int(e.kind());
  }
  try {
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    if (command == "analyze") {
      const Report rep = analyze(scn);
      out << rep.str();
      if (!out_dir.empty()) write_file(file_in(out_dir, scn.name + ".report"), rep.str());
      if (auto e = rep.get("error")) err << *e << "\n";
      return rep.exit_code();
    }
    if (command == "simulate") {
      const SimulationRun run = run_simulation(scn);
      std::ofstream csv(file_in(out_dir, scn.name + ".csv"));
      if (!csv) throw PreconditionError("cannot write trajectory CSV");
      write_csv(csv, run.trajectory, run.trajectory.samples);
      write_file(file_in(out_dir, scn.name + "-summary.report"), run.summary.str());
      out << run.summary.str();
      return run.summary.exit_code();
    }
    if (command == "sweep") {
      const auto rows = run_sweep(scn, threads);
      std::ofstream csv(file_in(out_dir, scn.name + "-sweep.csv"));
      if (!csv) throw PreconditionError("cannot write sweep CSV");
      write_sweep_csv(csv, scn, rows);
      int failed = 0;
      for (const auto& r : rows) failed += r.code != 0;
      Report rep = header(scn);
      rep.set("sweep.parameter", scn.sweep->parameter);
      rep.set("sweep.runs", double(rows.size()));
      rep.set("sweep.failed", double(failed));
      set_status(rep);
      out << rep.str();
      return 0;
    }
    throw ParseError("unknown command '" + command + "'");
  } catch (const Error& e) {
    err << e.what() << "\n";
    out << "status = " << status_name(int(e.kind())) << "\nerror_code = " << int(e.kind()) << "\nerror = " << e.what()
        << "\n";
    return int(e.kind());
  }
}

}  // namespace dnes
