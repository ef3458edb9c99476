#include "glsim/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "glsim/control.hpp"
#include "glsim/ergodicity.hpp"
#include "glsim/malliavin.hpp"
#include "glsim/modes.hpp"
#include "glsim/report.hpp"
#include "glsim/rng.hpp"
#include "glsim/version.hpp"

namespace glsim {

namespace {

Mat columns_to_mat(const std::vector<Vec>& cols) {
  if (cols.empty()) return Mat();
  Mat m(cols.front().size(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Index>(c)) = cols[c];
  return m;
}

std::vector<Real> to_std(const Vec& v) {
  return std::vector<Real>(v.data(), v.data() + v.size());
}

void cmd_simulate(const RunConfig& cfg, ReportBundle& report, int /*threads*/) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment", {"initial", "diagnostics", "store_trajectory"});
  Vec u0 = parse_field(exp.value("initial", Json("zero")), cfg.solver.n_modes);

  DiagnosticParams params;
  if (exp.contains("diagnostics")) {
    const Json& d = exp.at("diagnostics");
    require_keys(d, "experiment.diagnostics", {"power", "order", "eta", "stride"});
    params.power = d.value("power", params.power);
    params.order = d.value("order", params.order);
    params.eta = d.value("eta", params.eta);
    params.stride = d.value("stride", params.stride);
  }

  SolverConfig scfg = cfg.solver;
  scfg.snapshot_stride = 1;  // diagnostics need the dense path
  Trajectory traj = integrate(u0, scfg, cfg.forcing);
  DiagnosticSeries series = diagnostics(traj, params);
  report.write_table("diagnostics",
                     {"time", "l2_norm", "v1_norm", "energy", "weighted_energy", "power_norm",
                      "exp_moment"},
                     columns_to_mat({series.times, series.l2_norm, series.v1_norm, series.energy,
                                     series.weighted_energy, series.power_norm,
                                     series.exp_moment}));
  report.add_summary("forcing_moment_b0", series.forcing_b0);
  report.add_summary("forcing_moment_bn", series.forcing_bn);
  report.add_summary("final_l2_norm", series.l2_norm[series.l2_norm.size() - 1]);
  if (exp.value("store_trajectory", true)) {
    if (cfg.solver.snapshot_stride > 1) {
      traj.snapshot_stride = cfg.solver.snapshot_stride;
      std::vector<Vec> strided;
      for (int i = 0; i * cfg.solver.snapshot_stride <= traj.n_steps(); ++i)
        strided.push_back(traj.states[static_cast<std::size_t>(i * cfg.solver.snapshot_stride)]);
      traj.states = std::move(strided);
    }
    write_trajectory(report.path_of("trajectory.bin"), traj);
    report.add_summary("trajectory_file", "trajectory.bin");
  }
}

void cmd_check_modes(const RunConfig& cfg, ReportBundle& report, int /*threads*/) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment", {"z0", "cutoff", "depth_limit"});
  ModeSet z0 = exp.contains("z0") ? make_mode_set(exp.at("z0").get<std::vector<int>>())
                                  : make_mode_set(cfg.forcing.modes);
  const int cutoff = exp.value("cutoff", 50);
  const int depth = exp.value("depth_limit", 20);
  HypothesisReport rep = check_hypothesis(z0, cutoff, depth);

  Mat table(static_cast<Index>(rep.coverage.size()), 2);
  Index r = 0;
  for (const auto& [mode, d] : rep.coverage) {
    table(r, 0) = mode;
    table(r, 1) = d;
    ++r;
  }
  report.write_table("coverage", {"mode", "first_depth"}, table);
  report.add_summary("pass", rep.pass);
  report.add_summary("symmetric", rep.symmetric);
  report.add_summary("failure_reason", rep.failure_reason);
  std::ofstream(report.path_of("report.txt")) << rep.to_text();
}

void cmd_tangent_check(const RunConfig& cfg, ReportBundle& report, int /*threads*/) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment", {"initial", "eps", "n_pairs"});
  Vec u0 = parse_field(exp.value("initial", Json("zero")), cfg.solver.n_modes);
  const Real eps = exp.value("eps", 1e-5);
  const int n_pairs = exp.value("n_pairs", 4);

  SolverConfig scfg = cfg.solver;
  scfg.snapshot_stride = 1;
  Trajectory traj = integrate(u0, scfg, cfg.forcing);
  const int t = traj.n_steps();
  GaussianStream rng(derive_seed(cfg.master_seed, 0, "tangent-check"));

  Mat rows(n_pairs, 4);
  for (int p = 0; p < n_pairs; ++p) {
    Vec xi(2 * cfg.solver.n_modes), eta(2 * cfg.solver.n_modes);
    rng.fill(xi);
    rng.fill(eta);
    xi.normalize();
    eta.normalize();
    Vec jxi = propagate_tangent(traj, 0, t, xi);
    Trajectory bumped = integrate_with_noise(u0 + eps * xi, scfg, cfg.forcing, traj.noise);
    Vec fd = (bumped.states.back() - traj.states.back()) / eps;
    const Real fd_rel = (fd - jxi).norm() / jxi.norm();
    const Real duality =
        std::abs(jxi.dot(eta) - xi.dot(propagate_adjoint(traj, 0, t, eta)));
    Vec j2 = propagate_second(traj, 0, t, xi, eta);
    Vec j2t = propagate_second(traj, 0, t, eta, xi);
    const Real sym = (j2 - j2t).norm();
    rows(p, 0) = fd_rel;
    rows(p, 1) = duality;
    rows(p, 2) = sym;
    rows(p, 3) = jxi.norm();
  }
  report.write_table("tangent_check", {"fd_rel_error", "duality_residual", "second_symmetry", "jxi_norm"},
                     rows);
  report.add_summary("max_fd_rel_error", rows.col(0).maxCoeff());
  report.add_summary("max_duality_residual", rows.col(1).maxCoeff());
}

void cmd_malliavin(const RunConfig& cfg, ReportBundle& report, int threads) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment",
               {"initial", "ensemble", "cone", "eps_grid", "beta", "floor_samples",
                "floor_iterations", "rank_threshold"});
  Vec u0 = parse_field(exp.value("initial", Json("zero")), cfg.solver.n_modes);
  const int ensemble = exp.value("ensemble", 16);
  ConeSpec cone;
  if (exp.contains("cone")) {
    require_keys(exp.at("cone"), "experiment.cone", {"alpha", "n_low"});
    cone.alpha = exp.at("cone").value("alpha", 0.5);
    cone.n_low = exp.at("cone").value("n_low", 4);
  }
  const int floor_samples = exp.value("floor_samples", 32);
  const int floor_iters = exp.value("floor_iterations", 50);
  const Real rank_threshold = exp.value("rank_threshold", 1e-8);
  Vec eps_grid;
  if (exp.contains("eps_grid")) {
    const auto g = exp.at("eps_grid").get<std::vector<Real>>();
    eps_grid = Eigen::Map<const Vec>(g.data(), static_cast<Index>(g.size()));
  } else {
    eps_grid.resize(7);
    for (int i = 0; i < 7; ++i) eps_grid[i] = std::pow(10.0, -12 + 2 * i);
  }

  SolverConfig scfg = cfg.solver;
  scfg.snapshot_stride = 1;
  std::vector<Real> floors(static_cast<std::size_t>(ensemble));
  std::vector<Real> ranks(static_cast<std::size_t>(ensemble));
  parallel_for(ensemble, threads, [&](int i) {
    SolverConfig c = scfg;
    c.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i), "malliavin-path");
    Trajectory traj = integrate(u0, c, cfg.forcing);
    MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps(), false);
    FloorReport fr = spectral_floor(op.m, cfg.solver.n_modes, cone, floor_samples, floor_iters,
                                    derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                                "malliavin-floor"));
    floors[static_cast<std::size_t>(i)] = fr.floor;
    ranks[static_cast<std::size_t>(i)] = rank_at_threshold(op.m, rank_threshold);
  });

  EpsilonTable table = epsilon_statistics(floors, eps_grid);
  report.write_table("epsilon_stats", {"eps", "frequency"},
                     columns_to_mat({table.eps, table.frequency}));
  Mat per_sample(ensemble, 2);
  for (int i = 0; i < ensemble; ++i) {
    per_sample(i, 0) = floors[static_cast<std::size_t>(i)];
    per_sample(i, 1) = ranks[static_cast<std::size_t>(i)];
  }
  report.write_table("floors", {"floor", "rank"}, per_sample);
  report.add_summary("cone", Json{{"alpha", cone.alpha}, {"n_low", cone.n_low}});
  report.add_summary("median_rank", per_sample.col(1).mean());

  std::vector<Real> betas = exp.contains("beta")
                                ? exp.at("beta").get<std::vector<Real>>()
                                : std::vector<Real>{0.1, 1.0};
  SolverConfig c0 = scfg;
  c0.seed = derive_seed(cfg.master_seed, 0, "malliavin-path");
  Trajectory traj0 = integrate(u0, c0, cfg.forcing);
  MalliavinOp op0 = assemble_malliavin(traj0, 0, traj0.n_steps(), true);
  Mat res(static_cast<Index>(betas.size()), 6);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    ResolventReport rr = resolvent_checks(op0, betas[b]);
    res(static_cast<Index>(b), 0) = rr.beta;
    res(static_cast<Index>(b), 1) = rr.astar_resolvent_norm;
    res(static_cast<Index>(b), 2) = rr.resolvent_a_norm;
    res(static_cast<Index>(b), 3) = rr.inv_sqrt_norm;
    res(static_cast<Index>(b), 4) = rr.inv_norm;
    res(static_cast<Index>(b), 5) = rr.ok ? 1.0 : 0.0;
  }
  report.write_table("resolvent_checks",
                     {"beta", "astar_resolvent", "resolvent_a", "inv_sqrt", "inv", "ok"}, res);
}

void cmd_control_decay(const RunConfig& cfg, ReportBundle& report, int threads) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment",
               {"xi", "n_max", "ensemble", "delta", "beta_start", "beta_factor", "beta_budget",
                "split_n", "split_target", "gradient"});
  DecayConfig dcfg;
  dcfg.n_modes = cfg.solver.n_modes;
  dcfg.dt = cfg.solver.dt;
  dcfg.forcing = cfg.forcing;
  dcfg.nonlinearity = cfg.solver.nonlinearity;
  dcfg.n_max = exp.value("n_max", 8);
  dcfg.ensemble = exp.value("ensemble", 128);
  dcfg.delta = exp.value("delta", 1.0 / 512.0);
  dcfg.beta_start = exp.value("beta_start", 1.0);
  dcfg.beta_factor = exp.value("beta_factor", 0.25);
  dcfg.beta_budget = exp.value("beta_budget", 10);
  dcfg.split_n = exp.value("split_n", 0);
  dcfg.split_target = exp.value("split_target", 1.0 / 512.0);
  dcfg.master_seed = cfg.master_seed;
  dcfg.threads = threads;

  Vec xi;
  if (exp.contains("xi")) {
    xi = parse_field(exp.at("xi"), cfg.solver.n_modes);
  } else {
    GaussianStream rng(derive_seed(cfg.master_seed, 0, "control-xi"));
    xi.resize(2 * cfg.solver.n_modes);
    rng.fill(xi);
    xi.normalize();
  }

  DecayTable table = decay_experiment(dcfg, xi);
  Mat even(static_cast<Index>(table.even_n.size()), 4);
  for (std::size_t i = 0; i < table.even_n.size(); ++i) {
    even(static_cast<Index>(i), 0) = table.even_n[i];
    even(static_cast<Index>(i), 1) = table.mean_rho8[static_cast<Index>(i)];
    even(static_cast<Index>(i), 2) = table.sem_rho8[static_cast<Index>(i)];
    even(static_cast<Index>(i), 3) = table.mean_abs_ito[static_cast<Index>(i)];
  }
  report.write_table("decay", {"n", "mean_rho8", "sem_rho8", "mean_abs_ito"}, even);
  report.write_table("residual_sq", {"t", "mean_rho2"},
                     columns_to_mat({table.boundary_times, table.mean_rho2}));
  Mat beta_rows(static_cast<Index>(table.betas.size()), 3);
  for (std::size_t i = 0; i < table.betas.size(); ++i) {
    beta_rows(static_cast<Index>(i), 0) = static_cast<Real>(2 * i);
    beta_rows(static_cast<Index>(i), 1) = table.betas[i];
    beta_rows(static_cast<Index>(i), 2) = table.beta_choices[i].passed ? 1.0 : 0.0;
  }
  report.write_table("betas", {"block", "beta", "target_met"}, beta_rows);
  report.add_summary("split_n", table.split_n);
  report.add_summary("two_step_ratio", table.two_step_ratio);
  report.add_summary("gamma0", table.gamma0);
  report.add_summary("gamma0_r2", table.gamma0_r2);
  bool all_passed = true;
  for (const auto& c : table.beta_choices) all_passed = all_passed && c.passed;
  report.add_summary("beta_targets_met", all_passed);

  if (exp.contains("gradient")) {
    const Json& g = exp.at("gradient");
    require_keys(g, "experiment.gradient", {"phi", "initial", "ensemble", "probes", "fd_eps"});
    GradientProbeConfig gcfg;
    gcfg.solver = cfg.solver;
    gcfg.forcing = cfg.forcing;
    gcfg.phi = Functional::parse(g.value("phi", std::string("capnorm:2:1.0")));
    gcfg.u0 = parse_field(g.value("initial", Json("zero")), cfg.solver.n_modes);
    gcfg.ensemble = g.value("ensemble", 128);
    gcfg.probes = g.value("probes", 4);
    gcfg.fd_eps = g.value("fd_eps", 1e-3);
    gcfg.gamma0 = table.gamma0 > 0 ? table.gamma0 : 0.1;
    gcfg.master_seed = cfg.master_seed;
    gcfg.threads = threads;
    GradientProbeReport gp = gradient_probe(gcfg);
    report.add_summary("gradient_probe",
                       Json{{"lhs", gp.lhs},
                            {"lhs_sem", gp.lhs_sem},
                            {"rhs_first", gp.rhs_first},
                            {"rhs_second", gp.rhs_second},
                            {"implied_c", gp.implied_c},
                            {"gamma0", gcfg.gamma0}});
  }
  if (!all_passed)
    throw BudgetExhausted("control-decay: beta trial budget exhausted on some block");
}

void cmd_mixing(const RunConfig& cfg, ReportBundle& report, int threads) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment",
               {"initial_a", "initial_b", "pairs", "record_stride", "delta", "fit_upper",
                "fit_lower", "wasserstein_max_mode"});
  MixingConfig mcfg;
  mcfg.solver = cfg.solver;
  mcfg.forcing = cfg.forcing;
  mcfg.u0_a = parse_field(exp.value("initial_a", Json("zero")), cfg.solver.n_modes);
  mcfg.u0_b = parse_field(exp.value("initial_b", Json("zero")), cfg.solver.n_modes);
  mcfg.pairs = exp.value("pairs", 64);
  mcfg.record_stride = exp.value("record_stride", 100);
  mcfg.metric.delta = exp.value("delta", 1.0);
  mcfg.fit_upper = exp.value("fit_upper", 0.9);
  mcfg.fit_lower = exp.value("fit_lower", 1e-12);
  mcfg.master_seed = cfg.master_seed;
  mcfg.threads = threads;
  mcfg.keep_final_states = true;

  MixingReport rep = synchronous_coupling(mcfg);
  report.write_table("mixing", {"time", "mean_distance"},
                     columns_to_mat({rep.times, rep.mean_distance}));
  report.add_summary("rate", rep.rate);
  report.add_summary("r_squared", rep.r_squared);
  report.add_summary("pathwise_monotone", rep.pathwise_monotone);
  report.add_summary("worst_step_excess", rep.worst_step_excess);

  const int max_mode = exp.value("wasserstein_max_mode", 4);
  const Real w = wasserstein_distance(rep.final_a, rep.final_b, mcfg.metric,
                                      cfg.solver.n_modes, max_mode);
  const Real coupling_mean = rep.mean_distance[rep.mean_distance.size() - 1];
  report.add_summary("wasserstein_final", w);
  report.add_summary("coupling_mean_final", coupling_mean);
}

void cmd_lln(const RunConfig& cfg, ReportBundle& report, int threads) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment", {"phi", "initial_a", "initial_b", "paths_per_side"});
  LlnConfig lcfg;
  lcfg.solver = cfg.solver;
  lcfg.forcing = cfg.forcing;
  lcfg.phi = Functional::parse(exp.value("phi", std::string("capnorm:2:1.0")));
  lcfg.u0_a = parse_field(exp.value("initial_a", Json("zero")), cfg.solver.n_modes);
  lcfg.u0_b = parse_field(exp.value("initial_b", Json("zero")), cfg.solver.n_modes);
  lcfg.paths_per_side = exp.value("paths_per_side", 8);
  lcfg.master_seed = cfg.master_seed;
  lcfg.threads = threads;

  LlnReport rep = lln_experiment(lcfg);
  Mat rows(lcfg.paths_per_side, 2);
  rows.col(0) = rep.averages_a;
  rows.col(1) = rep.averages_b;
  report.write_table("time_averages", {"side_a", "side_b"}, rows);
  report.add_summary("phi", lcfg.phi.describe());
  report.add_summary("mean_a", rep.mean_a);
  report.add_summary("mean_b", rep.mean_b);
  report.add_summary("gap", rep.gap);
  report.add_summary("tolerance", rep.tolerance);
  report.add_summary("consistent", rep.consistent);
}

void cmd_clt(const RunConfig& cfg, ReportBundle& report, int threads) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment",
               {"phi", "burn_in", "reps", "aux_time", "aux_paths", "batch_len", "record_stride"});
  CltConfig ccfg;
  ccfg.solver = cfg.solver;
  ccfg.forcing = cfg.forcing;
  ccfg.phi = Functional::parse(exp.value("phi", std::string("capnorm:2:1.0")));
  ccfg.burn_in = exp.value("burn_in", 20.0);
  ccfg.reps = exp.value("reps", 200);
  ccfg.aux_time = exp.value("aux_time", 4000.0);
  ccfg.aux_paths = exp.value("aux_paths", 8);
  ccfg.batch_len = exp.value("batch_len", 20.0);
  ccfg.record_stride = exp.value("record_stride", 10);
  ccfg.master_seed = cfg.master_seed;
  ccfg.threads = threads;

  CltReport rep = clt_experiment(ccfg);
  Mat samples(rep.samples.size(), 1);
  samples.col(0) = rep.samples;
  report.write_table("clt_samples", {"normalized_integral"}, samples);
  report.add_summary("phi", rep.phi_descriptor);
  report.add_summary("m_hat", rep.m_hat);
  report.add_summary("m_hat_sem", rep.m_hat_sem);
  report.add_summary("sigma_sq", rep.sigma_sq);
  report.add_summary("degenerate", rep.degenerate);
  report.add_summary("ks_statistic", rep.ks.statistic);
  report.add_summary("ks_p_value", rep.ks.p_value);
}

void cmd_stats(const RunConfig& cfg, ReportBundle& report, int /*threads*/) {
  const Json& exp = cfg.experiment;
  require_keys(exp, "experiment", {"initial", "burn_in"});
  StatsConfig scfg;
  scfg.solver = cfg.solver;
  scfg.forcing = cfg.forcing;
  scfg.u0 = parse_field(exp.value("initial", Json("zero")), cfg.solver.n_modes);
  scfg.burn_in = exp.value("burn_in", 10.0);

  InvariantStats st = invariant_stats(scfg);
  Mat rows(2 * cfg.solver.n_modes, 3);
  for (int i = 0; i < 2 * cfg.solver.n_modes; ++i) {
    rows(i, 0) = index_mode(cfg.solver.n_modes, i);
    rows(i, 1) = st.mode_mean[i];
    rows(i, 2) = st.mode_second_moment[i];
  }
  report.write_table("moments", {"mode", "mean", "second_moment"}, rows);
  Mat spec(cfg.solver.n_modes, 2);
  for (int k = 1; k <= cfg.solver.n_modes; ++k) {
    spec(k - 1, 0) = k;
    spec(k - 1, 1) = st.spectrum[k - 1];
  }
  report.write_table("spectrum", {"frequency", "energy"}, spec);
  report.add_summary("mean_sq_norm", st.mean_sq_norm);
  report.add_summary("mean_sq_vnorm", st.mean_sq_vnorm);
  report.add_summary("duration", st.duration);
}

void write_error_record(const std::string& out_dir, const std::string& kind, int code,
                        const std::string& message) {
  Json err{{"error", {{"kind", kind}, {"code", code}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!ec) std::ofstream(std::filesystem::path(out_dir) / "error.json") << err.dump(2) << "\n";
  }
}

}  // namespace

int resolve_threads(int override_value) {
  if (override_value > 0) return override_value;
  if (const char* env = std::getenv("GLSIM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int run_command(const std::string& command, const RunOptions& opts) {
  std::string out_dir;
  try {
    RunConfig cfg = RunConfig::from_file(opts.config_path);
    out_dir = cfg.out_dir;
    if (const char* env = std::getenv("GLSIM_OUT")) out_dir = env;
    if (!opts.out_dir_override.empty()) out_dir = opts.out_dir_override;
    const int threads = resolve_threads(opts.threads_override);

    const std::string bundle_dir =
        (std::filesystem::path(out_dir) / (command + "__" + cfg.hash_hex())).string();
    ReportBundle report(bundle_dir, cfg, command);

    if (command == "simulate")
      cmd_simulate(cfg, report, threads);
    else if (command == "check-modes")
      cmd_check_modes(cfg, report, threads);
    else if (command == "tangent-check")
      cmd_tangent_check(cfg, report, threads);
    else if (command == "malliavin")
      cmd_malliavin(cfg, report, threads);
    else if (command == "control-decay")
      cmd_control_decay(cfg, report, threads);
    else if (command == "mixing")
      cmd_mixing(cfg, report, threads);
    else if (command == "lln")
      cmd_lln(cfg, report, threads);
    else if (command == "clt")
      cmd_clt(cfg, report, threads);
    else if (command == "stats")
      cmd_stats(cfg, report, threads);
    else
      throw std::invalid_argument("unknown command: " + command);

    report.finalize();
    std::cout << "wrote " << report.directory() << "\n";
    return kOk;
  } catch (const NumericalGuard& e) {
    write_error_record(out_dir, "numerical_guard", kNumericalGuardTripped, e.what());
    return kNumericalGuardTripped;
  } catch (const BudgetExhausted& e) {
    write_error_record(out_dir, "budget", kBudgetError, e.what());
    return kBudgetError;
  } catch (const std::exception& e) {
    write_error_record(out_dir, "validation", kValidationError, e.what());
    return kValidationError;
  }
}

}  // namespace glsim
