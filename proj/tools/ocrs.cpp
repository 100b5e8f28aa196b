// Command-line surface for the OCRS library: tight-ratio tables, policy
// certification, knapsack/unit-density runs, LP solves, simulations,
// instance generators, and reproduction targets.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "ocrs/core.hpp"
#include "ocrs/experiments.hpp"
#include "ocrs/knapsack.hpp"
#include "ocrs/kunit.hpp"
#include "ocrs/lp.hpp"
#include "ocrs/ode.hpp"
#include "ocrs/oracle.hpp"
#include "ocrs/unitdensity.hpp"

namespace {

using nlohmann::json;

struct Output {
  std::string path;  // empty = stdout
  void emit(const std::string& text) const {
    if (path.empty())
      std::cout << text;
    else
      ocrs::write_text_file(path, text);
  }
};

std::vector<double> active_probabilities(const ocrs::SingleResourceInstance& inst) {
  std::vector<double> p;
  p.reserve(inst.horizon());
  for (const auto& q : inst.queries) p.push_back(q.active_prob());
  return p;
}

std::vector<double> instance_psi(const ocrs::SingleResourceInstance& inst) {
  std::vector<double> psi;
  for (const auto& q : inst.queries)
    psi.push_back(ocrs::expected_size(q, inst.grid));
  return psi;
}

// Known lower bounds prior to the tight ratios, for the comparison column.
double known_lower_bound(int k) {
  static const double bounds[8] = {0.5000, 0.5859, 0.6309, 0.6605,
                                   0.6821, 0.6989, 0.7125, 0.7240};
  return k >= 1 && k <= 8 ? bounds[k - 1] : 1.0 - 1.0 / std::sqrt(k + 3.0);
}

int parse_range(const std::string& text, int& lo, int& hi) {
  auto dots = text.find("..");
  if (dots == std::string::npos) {
    lo = hi = std::stoi(text);
  } else {
    lo = std::stoi(text.substr(0, dots));
    hi = std::stoi(text.substr(dots + 2));
  }
  return lo >= 1 && hi >= lo ? 0 : -1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tight online contention resolution schemes"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  double tol = 1e-9;
  std::string out_path;
  std::string format = "json";
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--tol", tol, "bisection tolerance")->capture_default_str();
  app.add_option("--out", out_path, "output path (default stdout)");
  app.add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  // gamma-k ---------------------------------------------------------------
  auto* gamma_cmd = app.add_subcommand("gamma-k", "tight k-unit ratios");
  std::string k_range = "1..8";
  int euler_n = 1000;
  bool csv_flag = false;
  gamma_cmd->add_option("--k", k_range, "k or range a..b")->capture_default_str();
  gamma_cmd->add_option("--euler-n", euler_n, "Bernoulli slots per unit rate")
      ->capture_default_str();
  gamma_cmd->add_flag("--csv", csv_flag, "emit CSV rows");

  // kunit -----------------------------------------------------------------
  auto* kunit_cmd = app.add_subcommand("kunit", "k-unit guarantee tools");
  kunit_cmd->require_subcommand(1);
  std::string kunit_instance;
  int kunit_k = 1;
  auto* theta_cmd = kunit_cmd->add_subcommand("theta-star",
                                              "instance-optimal guarantee");
  theta_cmd->add_option("--instance", kunit_instance)->required();
  theta_cmd->add_option("--k", kunit_k)->capture_default_str();
  auto* certify_cmd =
      kunit_cmd->add_subcommand("certify", "optimality certificate report");
  certify_cmd->add_option("--instance", kunit_instance)->required();
  certify_cmd->add_option("--k", kunit_k)->capture_default_str();

  // knapsack ----------------------------------------------------------------
  auto* knap_cmd = app.add_subcommand("knapsack", "Best-fit policy");
  knap_cmd->require_subcommand(1);
  std::string knap_instance, knap_gamma = "auto";
  long knap_trials = 0;
  auto* knap_run = knap_cmd->add_subcommand("run", "evolve the policy");
  knap_run->add_option("--instance", knap_instance)->required();
  knap_run->add_option("--gamma", knap_gamma, "auto or a value in [0,1]")
      ->capture_default_str();
  knap_run->add_option("--trials", knap_trials, "Monte Carlo trials")
      ->capture_default_str();

  // ud ----------------------------------------------------------------------
  auto* ud_cmd = app.add_subcommand("ud", "unit-density special case");
  ud_cmd->require_subcommand(1);
  double ud_delta = 1e-5, ud_gamma0 = 0.3977;
  std::string ud_instance;
  auto* ud_opt = ud_cmd->add_subcommand("optimize", "best initial guarantee");
  ud_opt->add_option("--delta", ud_delta)->capture_default_str();
  auto* ud_run = ud_cmd->add_subcommand("run", "run the gamma-sequence policy");
  ud_run->add_option("--instance", ud_instance)->required();
  ud_run->add_option("--gamma0", ud_gamma0)->capture_default_str();
  ud_run->add_option("--delta", ud_delta)->capture_default_str();
  auto* ud_prof = ud_cmd->add_subcommand("profile", "export the h profile");
  ud_prof->add_option("--gamma0", ud_gamma0)->capture_default_str();
  ud_prof->add_option("--delta", ud_delta)->capture_default_str();

  // lp ----------------------------------------------------------------------
  auto* lp_cmd = app.add_subcommand("lp", "build and solve the named LP");
  lp_cmd->require_subcommand(1);
  std::string lp_which, lp_instance, lp_export;
  int lp_k = 1;
  auto* lp_solve = lp_cmd->add_subcommand("solve");
  lp_solve->add_option("--which", lp_which)
      ->check(CLI::IsMember({"dual-pk", "primal-pk", "dual-pd", "up"}))
      ->required();
  lp_solve->add_option("--instance", lp_instance)->required();
  lp_solve->add_option("--k", lp_k)->capture_default_str();
  lp_solve->add_option("--export", lp_export, "write the LP in text form");

  // simulate ------------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "seeded policy simulation");
  std::string sim_policy, sim_instance, sim_gamma = "auto";
  long sim_trials = 100000;
  int sim_k = 1;
  double sim_gamma0 = 0.3977;
  sim_cmd->add_option("--policy", sim_policy)
      ->check(CLI::IsMember({"magician", "bestfit", "ud"}))
      ->required();
  sim_cmd->add_option("--instance", sim_instance)->required();
  sim_cmd->add_option("--trials", sim_trials)->capture_default_str();
  sim_cmd->add_option("--k", sim_k, "units for the magician policy")
      ->capture_default_str();
  sim_cmd->add_option("--gamma", sim_gamma)->capture_default_str();
  sim_cmd->add_option("--gamma0", sim_gamma0)->capture_default_str();

  // generate -------------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("generate", "write a JSON instance");
  std::string gen_name;
  int gen_T = 50, gen_k = 2, gen_n = 1000, gen_m = 1;
  double gen_eps = 0.01, gen_r = 1.0, gen_r1 = 1.4119, gen_r2 = 1.4119,
         gen_lambda = 1.2319;
  gen_cmd->add_option("--name", gen_name)
      ->check(CLI::IsMember({"knapsack-tight", "large-small", "ud-upper",
                             "prophet2", "uniform-kunit", "random"}))
      ->required();
  gen_cmd->add_option("--T", gen_T)->capture_default_str();
  gen_cmd->add_option("--eps", gen_eps)->capture_default_str();
  gen_cmd->add_option("--r", gen_r)->capture_default_str();
  gen_cmd->add_option("--k", gen_k)->capture_default_str();
  gen_cmd->add_option("--n", gen_n)->capture_default_str();
  gen_cmd->add_option("--r1", gen_r1)->capture_default_str();
  gen_cmd->add_option("--r2", gen_r2)->capture_default_str();
  gen_cmd->add_option("--lambda", gen_lambda)->capture_default_str();
  gen_cmd->add_option("--m", gen_m, "resources (random generator only)")
      ->capture_default_str();
  bool gen_ud = false;
  gen_cmd->add_flag("--unit-density", gen_ud,
                    "force reward = size (random generator only)");

  // reproduce -----------------------------------------------------------------
  auto* rep_cmd = app.add_subcommand("reproduce", "run a reproduction target");
  std::string rep_target;
  rep_cmd->add_option("--target", rep_target)
      ->check(CLI::IsMember({"table1", "knapsack-tightness", "ud-0.3557",
                             "ud-upper", "prophet2-0.6269", "invariants"}))
      ->required();

  // Let --seed/--tol/--out/--format appear after the subcommand name.
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
    for (auto* sub : cmd->get_subcommands(std::function<bool(CLI::App*)>{})) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  CLI11_PARSE(app, argc, argv);
  Output out{out_path};

  try {
    if (gamma_cmd->parsed()) {
      int lo = 1, hi = 8;
      if (parse_range(k_range, lo, hi) != 0 || hi > 16)
        throw std::domain_error("gamma-k: bad k range");
      const bool csv = csv_flag || format == "csv";
      std::ostringstream text;
      json rows = json::array();
      if (csv) text << "k,gamma_star,alaei_bound,known_lower,euler_n,euler_value\n";
      for (int k = lo; k <= hi; ++k) {
        const double g = ocrs::ode::gamma_star(k, tol);
        const double alaei = 1.0 - 1.0 / std::sqrt(k + 3.0);
        const double euler = ocrs::ode::euler_gamma(k, euler_n);
        if (csv) {
          text.precision(10);
          text << k << ',' << g << ',' << alaei << ',' << known_lower_bound(k)
               << ',' << euler_n << ',' << euler << "\n";
        } else {
          rows.push_back({{"k", k},
                          {"gamma_star", g},
                          {"alaei_bound", alaei},
                          {"known_lower", known_lower_bound(k)},
                          {"euler_n", euler_n},
                          {"euler_value", euler}});
        }
      }
      out.emit(csv ? text.str() : rows.dump(2) + "\n");
    } else if (kunit_cmd->parsed()) {
      auto inst = ocrs::load_instance(kunit_instance);
      auto p = active_probabilities(inst);
      const double theta = ocrs::kunit::solve_theta_star(p, kunit_k, tol);
      if (theta_cmd->parsed()) {
        out.emit(json{{"k", kunit_k}, {"theta_star", theta}}.dump(2) + "\n");
      } else {
        auto cand = ocrs::kunit::build_candidate(p, kunit_k, theta);
        auto cert = ocrs::kunit::build_dual_certificate(p, kunit_k, theta);
        auto rep = ocrs::kunit::verify_certificate(cand, cert, p, kunit_k);
        out.emit(json{{"theta_star", theta},
                      {"primal_feasible", rep.primal_residual <= 1e-8},
                      {"dual_feasible", rep.dual_residual <= 1e-8},
                      {"slackness_max", rep.slackness_max},
                      {"objective_gap", rep.objective_gap},
                      {"ok", rep.ok}}
                     .dump(2) +
                 "\n");
      }
    } else if (knap_cmd->parsed()) {
      auto inst = ocrs::load_instance(knap_instance);
      const double gamma = knap_gamma == "auto" ? ocrs::bestfit_gamma()
                                                : std::stod(knap_gamma);
      auto run = ocrs::knapsack::run_policy(inst, gamma, seed, knap_trials);
      double max_slack = 0.0;
      for (const auto& s : run.trace)
        max_slack = std::max(max_slack, s.invariant_slack);
      json j{{"gamma", gamma},
             {"feasible", run.feasible},
             {"reward_estimate", run.reward_estimate},
             {"expected_utilization", run.expected_utilization},
             {"invariant_max_slack", max_slack},
             {"scan_ops", run.scan_ops}};
      if (!run.feasible) j["failure"] = run.failure_reason;
      if (knap_trials > 0 && run.feasible) {
        auto stats = ocrs::oracle::monte_carlo(
            [&](int t, const ocrs::Scenario& sc, int consumed, int,
                double tie) {
              const auto& ths = run.thresholds[t];
              auto it = ths.find(sc.size_units);
              if (it == ths.end() ||
                  consumed + sc.size_units > inst.grid.units())
                return false;
              if (consumed > it->second.eta_units) return true;
              return consumed == it->second.eta_units &&
                     tie < it->second.tie_serve_prob;
            },
            inst, knap_trials, seed);
        j["conditional_service_rates"] = stats.conditional_service_rate;
        j["min_conditional_rate"] = stats.min_conditional_rate();
      }
      out.emit(j.dump(2) + "\n");
    } else if (ud_cmd->parsed()) {
      if (ud_opt->parsed()) {
        auto best = ocrs::unitdensity::optimize_gamma0(ud_delta);
        out.emit(json{{"gamma0", best.gamma0}, {"value", best.value}}.dump(2) +
                 "\n");
      } else if (ud_run->parsed()) {
        auto inst = ocrs::load_instance(ud_instance);
        auto seq = ocrs::unitdensity::gamma_sequence(instance_psi(inst),
                                                     ud_gamma0, ud_delta);
        auto run = ocrs::unitdensity::run_ud_policy(inst, seq.gammas, seed);
        out.emit(json{{"gamma0", ud_gamma0},
                      {"gammas", seq.gammas},
                      {"feasible", run.feasible},
                      {"expected_utilization", run.expected_utilization}}
                     .dump(2) +
                 "\n");
      } else {
        auto prof = ocrs::unitdensity::h_profile(ud_gamma0, ud_delta);
        std::ostringstream text;
        text.precision(12);
        text << "t,h,integral\n";
        for (int i = 0; i < prof.values.size(); ++i)
          text << i * prof.step << ',' << prof.values(i) << ','
               << prof.integral(i) << "\n";
        out.emit(text.str());
      }
    } else if (lp_cmd->parsed()) {
      ocrs::lp::LinearProgram program;
      if (lp_which == "up") {
        program = ocrs::lp::build_up_lp(
            ocrs::oracle::as_multi(ocrs::load_instance(lp_instance)));
      } else if (lp_which == "dual-pd") {
        program = ocrs::lp::build_dual_pd(ocrs::load_instance(lp_instance));
      } else {
        auto p = active_probabilities(ocrs::load_instance(lp_instance));
        program = lp_which == "dual-pk" ? ocrs::lp::build_dual_pk(p, lp_k)
                                        : ocrs::lp::build_primal_pk(p, lp_k);
      }
      if (!lp_export.empty()) ocrs::write_text_file(lp_export, program.to_text());
      auto res = ocrs::lp::simplex_solve(program);
      const char* status = res.status == ocrs::lp::SolveStatus::Optimal
                               ? "optimal"
                               : res.status == ocrs::lp::SolveStatus::Infeasible
                                     ? "infeasible"
                                     : "unbounded";
      out.emit(json{{"which", lp_which},
                    {"status", status},
                    {"objective", res.objective},
                    {"iterations", res.iterations}}
                   .dump(2) +
               "\n");
    } else if (sim_cmd->parsed()) {
      auto inst = ocrs::load_instance(sim_instance);
      ocrs::oracle::SimStats stats;
      double gamma_used = 0.0;
      if (sim_policy == "magician") {
        auto p = active_probabilities(inst);
        gamma_used = sim_gamma == "auto" ? ocrs::kunit::solve_theta_star(
                                               p, sim_k, tol)
                                         : std::stod(sim_gamma);
        auto policy = ocrs::kunit::magician_policy(p, sim_k, gamma_used);
        stats = ocrs::oracle::monte_carlo(
            [&](int t, const ocrs::Scenario&, int, int count, double tie) {
              return count < sim_k &&
                     tie < policy.serve_prob(count, t);
            },
            inst, sim_trials, seed);
      } else if (sim_policy == "bestfit") {
        gamma_used = sim_gamma == "auto" ? ocrs::bestfit_gamma()
                                         : std::stod(sim_gamma);
        auto run = ocrs::knapsack::run_policy(inst, gamma_used, seed, 0);
        if (!run.feasible)
          throw std::runtime_error("bestfit infeasible: " + run.failure_reason);
        stats = ocrs::oracle::monte_carlo(
            [&](int t, const ocrs::Scenario& sc, int consumed, int,
                double tie) {
              const auto& ths = run.thresholds[t];
              auto it = ths.find(sc.size_units);
              if (it == ths.end() ||
                  consumed + sc.size_units > inst.grid.units())
                return false;
              if (consumed > it->second.eta_units) return true;
              return consumed == it->second.eta_units &&
                     tie < it->second.tie_serve_prob;
            },
            inst, sim_trials, seed);
      } else {
        auto seq = ocrs::unitdensity::gamma_sequence(instance_psi(inst),
                                                     sim_gamma0, 1e-4);
        auto run = ocrs::unitdensity::run_ud_policy(inst, seq.gammas, seed);
        if (!run.feasible)
          throw std::runtime_error("ud infeasible: " + run.failure_reason);
        gamma_used = seq.gammas.empty() ? 0.0 : seq.gammas.front();
        stats = ocrs::oracle::monte_carlo(
            [&](int t, const ocrs::Scenario& sc, int consumed, int,
                double tie) {
              if (seq.gammas[t] == 0.0) return false;
              const auto& ths = run.thresholds[t];
              auto it = ths.find(sc.size_units);
              if (it == ths.end() ||
                  consumed + sc.size_units > inst.grid.units())
                return false;
              if (consumed > it->second.eta_units) return true;
              return consumed == it->second.eta_units &&
                     tie < it->second.tie_serve_prob;
            },
            inst, sim_trials, seed);
      }
      std::ostringstream text;
      text.precision(10);
      text << "policy,gamma,mean,se,min_conditional_rate\n"
           << sim_policy << ',' << gamma_used << ',' << stats.mean_reward
           << ',' << stats.std_error << ',' << stats.min_conditional_rate()
           << "\n";
      out.emit(text.str());
    } else if (gen_cmd->parsed()) {
      std::string text;
      if (gen_name == "knapsack-tight") {
        text = ocrs::to_json(ocrs::knapsack::tightness_instance(gen_T, gen_eps));
      } else if (gen_name == "large-small") {
        text = ocrs::to_json(ocrs::knapsack::large_small_instance(gen_eps, gen_r));
      } else if (gen_name == "ud-upper") {
        text = ocrs::to_json(ocrs::unitdensity::ud_upper_instance(gen_T));
      } else if (gen_name == "prophet2") {
        text = ocrs::to_json(ocrs::experiments::prophet2_instance(
            gen_n, gen_r1, gen_r2, gen_lambda, gen_eps));
      } else if (gen_name == "uniform-kunit") {
        text = ocrs::to_json(
            ocrs::experiments::uniform_kunit_instance(gen_k, gen_n));
      } else if (gen_m > 1) {
        text = ocrs::to_json(ocrs::experiments::random_multi_instance(
            seed, gen_m, gen_T, 200, 3));
      } else {
        auto inst =
            ocrs::experiments::random_single_instance(seed, gen_T, 200, 3);
        if (gen_ud)
          for (auto& q : inst.queries)
            for (auto& sc : q.support)
              sc.reward = sc.size_units * inst.grid.unit();
        text = ocrs::to_json(inst);
      }
      out.emit(text);
    } else if (rep_cmd->parsed()) {
      std::string report;
      const bool ok = ocrs::experiments::reproduce_target(rep_target, report);
      out.emit(report);
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
