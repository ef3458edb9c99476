#include "glsim/control.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace glsim {

ControlSegment control_segment(const MalliavinOp& op, const Vec& rho, Real beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("control_segment: beta must be > 0");
  const Index d = op.m.rows();
  Vec jrho = op.jmat * rho;
  Mat mb = op.m + beta * Mat::Identity(d, d);
  Vec x = mb.ldlt().solve(jrho);

  ControlSegment seg;
  Vec v_flat = op.apply_astar(x);
  seg.v_nodes = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(
      v_flat.data(), op.n_nodes(), op.n_channels);
  seg.rho_mid = beta * x;
  seg.v_l2 = std::sqrt(op.noise_inner(v_flat, v_flat));
  seg.bound = jrho.norm() / std::sqrt(beta);
  return seg;
}

ResidualUpdate residual_update(const MalliavinOp& op, const FrozenPath& rest, const Vec& rho,
                               Real beta, int split_n) {
  ResidualUpdate upd;
  upd.segment = control_segment(op, rho, beta);
  Vec low = upd.segment.rho_mid;
  project_inplace(low, op.n_modes, split_n, Band::Low);
  Vec high = upd.segment.rho_mid - low;
  upd.rho_low = propagate_tangent(rest, low);
  upd.rho_high = propagate_tangent(rest, high);
  upd.rho_next = upd.rho_high + upd.rho_low;
  return upd;
}

Vec integrate_residual(const Trajectory& traj, int s_step, int mid_step, int t_step,
                       const Vec& rho0, const Mat& v_nodes) {
  check_window(traj, s_step, t_step);
  if (mid_step < s_step || mid_step > t_step)
    throw std::invalid_argument("integrate_residual: bad block split");
  if (v_nodes.rows() != mid_step - s_step + 1)
    throw std::invalid_argument("integrate_residual: v node count mismatch");
  const Stepper stepper = traj.make_stepper();
  const Real dt = traj.dt;
  auto node_weight = [&](int node) {
    return (node == s_step || node == mid_step) ? 0.5 * dt : dt;
  };
  Vec rho = rho0;
  rho -= node_weight(s_step) * stepper.apply_forcing_map(v_nodes.row(0));
  for (int i = s_step; i < t_step; ++i) {
    Vec u2 = stepper.squared_grid(traj.states[static_cast<std::size_t>(i)]);
    stepper.tangent_step(rho, u2);
    const int node = i + 1;
    if (node <= mid_step)
      rho -= node_weight(node) * stepper.apply_forcing_map(v_nodes.row(node - s_step));
  }
  return rho;
}

int select_split_frequency(const std::vector<Mat>& block_propagators, int n_modes,
                           Real target) {
  if (block_propagators.empty())
    throw std::invalid_argument("select_split_frequency: empty ensemble");
  auto op_norm = [](const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  };
  Real ref = 0.0;
  for (const Mat& j : block_propagators) ref += std::pow(op_norm(j), 8);
  ref /= static_cast<Real>(block_propagators.size());

  for (int N = 1; N < n_modes; ++N) {
    std::vector<int> high;
    for (int i = 0; i < 2 * n_modes; ++i)
      if (index_frequency(n_modes, i) > N) high.push_back(i);
    Real mean8 = 0.0;
    for (const Mat& j : block_propagators) {
      Mat sub(j.rows(), static_cast<Index>(high.size()));
      for (std::size_t c = 0; c < high.size(); ++c)
        sub.col(static_cast<Index>(c)) = j.col(high[c]);
      mean8 += std::pow(op_norm(sub), 8);
    }
    mean8 /= static_cast<Real>(block_propagators.size());
    if (mean8 <= target * ref) return N;
  }
  return n_modes;
}

namespace {

struct MemberBlock {
  MalliavinOp op;
  std::unique_ptr<FrozenPath> rest;
};

Real ratio8(Real num, Real den) {
  if (den == 0.0) return 0.0;
  return std::pow(num / den, 8);
}

}  // namespace

DecayTable decay_experiment(const DecayConfig& cfg, const Vec& xi) {
  if (cfg.n_max < 2 || cfg.n_max % 2 != 0)
    throw std::invalid_argument("decay_experiment: n_max must be even and >= 2");
  if (cfg.ensemble < 1) throw std::invalid_argument("decay_experiment: empty ensemble");
  const int spb = static_cast<int>(std::llround(1.0 / cfg.dt));
  if (std::abs(spb * cfg.dt - 1.0) > 1e-9)
    throw std::invalid_argument("decay_experiment: dt must divide the unit block exactly");

  SolverConfig scfg;
  scfg.n_modes = cfg.n_modes;
  scfg.dt = cfg.dt;
  scfg.horizon = static_cast<Real>(cfg.n_max);
  scfg.nonlinearity = cfg.nonlinearity;
  scfg.validate(cfg.forcing);

  const int m_count = cfg.ensemble;
  std::vector<Trajectory> members(static_cast<std::size_t>(m_count));
  parallel_for(m_count, cfg.threads, [&](int i) {
    SolverConfig c = scfg;
    c.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i), "control-path");
    Vec u0 = Vec::Zero(2 * cfg.n_modes);
    members[static_cast<std::size_t>(i)] = integrate(u0, c, cfg.forcing);
  });

  DecayTable table;
  table.boundary_times.resize(cfg.n_max + 1);
  table.mean_rho2.resize(cfg.n_max + 1);
  const int n_even = cfg.n_max / 2 + 1;
  table.mean_rho8.resize(n_even);
  table.sem_rho8.resize(n_even);
  table.mean_abs_ito.resize(n_even);

  std::vector<Vec> rho(static_cast<std::size_t>(m_count), xi);
  std::vector<Real> ito(static_cast<std::size_t>(m_count), 0.0);
  std::vector<ControlLedger> ledgers;
  if (cfg.keep_ledgers) {
    ledgers.resize(static_cast<std::size_t>(m_count));
    for (auto& led : ledgers) {
      led.xi = xi;
      led.residuals.assign(static_cast<std::size_t>(cfg.n_max) + 1, Vec());
      led.residuals[0] = xi;
    }
  }

  auto record_boundary = [&](int n, const std::vector<Vec>& r) {
    Real acc = 0.0;
    for (const Vec& v : r) acc += v.squaredNorm();
    table.boundary_times[n] = n;
    table.mean_rho2[n] = acc / m_count;
  };
  auto record_even = [&](int n) {
    Vec r8(m_count), it(m_count);
    for (int i = 0; i < m_count; ++i) {
      r8[i] = std::pow(rho[static_cast<std::size_t>(i)].norm(), 8);
      it[i] = std::abs(ito[static_cast<std::size_t>(i)]);
    }
    const SampleStats s8 = sample_stats(r8);
    table.even_n.push_back(n);
    table.mean_rho8[n / 2] = s8.mean;
    table.sem_rho8[n / 2] = s8.sem;
    table.mean_abs_ito[n / 2] = sample_stats(it).mean;
  };

  record_boundary(0, rho);
  record_even(0);
  table.split_n = cfg.split_n;

  const Real sqrt_dt = std::sqrt(cfg.dt);
  std::vector<Vec> rho_mid(static_cast<std::size_t>(m_count));

  for (int n = 0; n + 2 <= cfg.n_max; n += 2) {
    const int s = n * spb, mid = (n + 1) * spb, t = (n + 2) * spb;
    std::vector<MemberBlock> blocks(static_cast<std::size_t>(m_count));
    parallel_for(m_count, cfg.threads, [&](int i) {
      auto& b = blocks[static_cast<std::size_t>(i)];
      b.op = assemble_malliavin(members[static_cast<std::size_t>(i)], s, mid, true);
      b.rest = std::make_unique<FrozenPath>(members[static_cast<std::size_t>(i)], mid, t);
    });

    if (n == 0 && table.split_n == 0) {
      std::vector<Mat> jmats;
      jmats.reserve(static_cast<std::size_t>(m_count));
      for (const auto& b : blocks) jmats.push_back(b.op.jmat);
      table.split_n = select_split_frequency(jmats, cfg.n_modes, cfg.split_target);
    }

    // Descending geometric trials; first beta meeting the low-part target wins.
    BetaChoice choice;
    Real best_ratio = std::numeric_limits<Real>::infinity();
    Real best_beta = cfg.beta_start;
    for (int trial = 0; trial < cfg.beta_budget; ++trial) {
      const Real beta = cfg.beta_start * std::pow(cfg.beta_factor, trial);
      Vec ratios(m_count);
      parallel_for(m_count, cfg.threads, [&](int i) {
        const auto& b = blocks[static_cast<std::size_t>(i)];
        const Vec& r = rho[static_cast<std::size_t>(i)];
        ControlSegment seg = control_segment(b.op, r, beta);
        Vec low = seg.rho_mid;
        project_inplace(low, cfg.n_modes, table.split_n, Band::Low);
        ratios[i] = ratio8(propagate_tangent(*b.rest, low).norm(), r.norm());
      });
      const Real mean_ratio = ratios.mean();
      choice.tried_betas.push_back(beta);
      choice.tried_ratios.push_back(mean_ratio);
      ++choice.trials;
      if (mean_ratio < best_ratio) {
        best_ratio = mean_ratio;
        best_beta = beta;
      }
      if (mean_ratio <= cfg.delta) {
        choice.beta = beta;
        choice.ratio = mean_ratio;
        choice.passed = true;
        break;
      }
    }
    if (!choice.passed) {
      choice.beta = best_beta;
      choice.ratio = best_ratio;
    }
    table.beta_choices.push_back(choice);
    table.betas.push_back(choice.beta);

    parallel_for(m_count, cfg.threads, [&](int i) {
      const auto& b = blocks[static_cast<std::size_t>(i)];
      Vec& r = rho[static_cast<std::size_t>(i)];
      ResidualUpdate upd = residual_update(b.op, *b.rest, r, choice.beta, table.split_n);
      const Mat& noise = members[static_cast<std::size_t>(i)].noise;
      Real acc = 0.0;
      for (int node = 0; node < upd.segment.v_nodes.rows() - 1; ++node)
        acc += upd.segment.v_nodes.row(node).dot(noise.col(s + node)) * sqrt_dt;
      ito[static_cast<std::size_t>(i)] += acc;
      rho_mid[static_cast<std::size_t>(i)] = upd.segment.rho_mid;
      if (cfg.keep_ledgers) {
        ControlLedger& led = ledgers[static_cast<std::size_t>(i)];
        led.betas.push_back(choice.beta);
        led.v.push_back(upd.segment.v_nodes);
        led.rho_high.push_back(upd.rho_high);
        led.rho_low.push_back(upd.rho_low);
        led.residuals[static_cast<std::size_t>(n) + 1] = upd.segment.rho_mid;
        led.residuals[static_cast<std::size_t>(n) + 2] = upd.rho_next;
        led.ito_integral += acc;
      }
      r = upd.rho_next;
    });

    record_boundary(n + 1, rho_mid);
    record_boundary(n + 2, rho);
    record_even(n + 2);
  }

  // Geometric fit of the eighth-moment decay and exponential fit of the
  // second moment; both on log scale.
  {
    const int rows = static_cast<int>(table.even_n.size());
    Vec x(rows), y(rows);
    for (int i = 0; i < rows; ++i) {
      x[i] = table.even_n[static_cast<std::size_t>(i)];
      y[i] = std::log(std::max(table.mean_rho8[i], 1e-300));
    }
    const LinearFit f8 = linear_fit(x, y);
    table.two_step_ratio = std::exp(2.0 * f8.slope);

    Vec x2(table.mean_rho2.size()), y2(table.mean_rho2.size());
    for (Index i = 0; i < table.mean_rho2.size(); ++i) {
      x2[i] = table.boundary_times[i];
      y2[i] = std::log(std::max(table.mean_rho2[i], 1e-300));
    }
    const LinearFit f2 = linear_fit(x2, y2);
    table.gamma0 = -f2.slope;
    table.gamma0_r2 = f2.r_squared;
  }
  if (cfg.keep_ledgers) {
    table.ledgers = std::move(ledgers);
    table.trajectories = std::move(members);
  }
  return table;
}

std::vector<Vec> replay_ledger(const Trajectory& traj, const ControlLedger& ledger) {
  const int spb = static_cast<int>(std::llround(1.0 / traj.dt));
  std::vector<Vec> residuals;
  residuals.push_back(ledger.xi);
  Vec r = ledger.xi;
  for (std::size_t b = 0; b < ledger.v.size(); ++b) {
    const int s = static_cast<int>(2 * b) * spb;
    residuals.push_back(integrate_residual(traj, s, s + spb, s + spb, r, ledger.v[b]));
    r = integrate_residual(traj, s, s + spb, s + 2 * spb, r, ledger.v[b]);
    residuals.push_back(r);
  }
  return residuals;
}

Real ledger_ito_integral(const Trajectory& traj, const ControlLedger& ledger) {
  const int spb = static_cast<int>(std::llround(1.0 / traj.dt));
  const Real sqrt_dt = std::sqrt(traj.dt);
  Real acc = 0.0;
  for (std::size_t b = 0; b < ledger.v.size(); ++b) {
    const int s = static_cast<int>(2 * b) * spb;
    for (int node = 0; node < ledger.v[b].rows() - 1; ++node)
      acc += ledger.v[b].row(node).dot(traj.noise.col(s + node)) * sqrt_dt;
  }
  return acc;
}

GradientProbeReport gradient_probe(const GradientProbeConfig& cfg) {
  cfg.solver.validate(cfg.forcing);
  if (cfg.ensemble < 2) throw BudgetExhausted("gradient_probe: ensemble too small");
  if (cfg.probes < 1) throw std::invalid_argument("gradient_probe: need at least one probe");
  if (!(cfg.fd_eps > 0.0)) throw std::invalid_argument("gradient_probe: fd_eps must be > 0");

  const int n_steps = cfg.solver.n_steps();
  const Stepper stepper(cfg.solver.n_modes, cfg.solver.dt, cfg.forcing, cfg.solver.nonlinearity);
  auto final_state = [&](const Vec& u0, std::uint64_t seed) {
    GaussianStream rng(seed);
    Vec u = u0, xi(stepper.n_channels());
    for (int i = 0; i < n_steps; ++i) {
      rng.fill(xi);
      stepper.step(u, xi);
    }
    return u;
  };

  const int n = cfg.ensemble;
  Vec phi_base(n), phi_sq(n), grad_sq(n);
  parallel_for(n, cfg.threads, [&](int i) {
    const std::uint64_t seed =
        derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i), "grad-path");
    Vec u = final_state(cfg.u0, seed);
    phi_base[i] = cfg.phi(u, cfg.solver.n_modes);
    phi_sq[i] = phi_base[i] * phi_base[i];
    grad_sq[i] = cfg.phi.gradient(u, cfg.solver.n_modes).squaredNorm();
  });

  GradientProbeReport rep;
  rep.ensemble = n;
  rep.probes = cfg.probes;
  rep.mean_phi_sq = phi_sq.mean();
  rep.mean_grad_sq = grad_sq.mean();
  rep.rhs_first = std::sqrt(rep.mean_phi_sq);
  rep.rhs_second = std::exp(-cfg.gamma0 * cfg.solver.horizon) * std::sqrt(rep.mean_grad_sq);

  for (int p = 0; p < cfg.probes; ++p) {
    GaussianStream dir_rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(p), "grad-dir"));
    Vec eta(2 * cfg.solver.n_modes);
    dir_rng.fill(eta);
    eta.normalize();
    Vec u0p = cfg.u0 + cfg.fd_eps * eta;
    Vec diffs(n);
    parallel_for(n, cfg.threads, [&](int i) {
      const std::uint64_t seed =
          derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i), "grad-path");
      const Vec u = final_state(u0p, seed);
      diffs[i] = (cfg.phi(u, cfg.solver.n_modes) - phi_base[i]) / cfg.fd_eps;
    });
    const SampleStats s = sample_stats(diffs);
    if (std::abs(s.mean) > rep.lhs) {
      rep.lhs = std::abs(s.mean);
      rep.lhs_sem = s.sem;
    }
  }
  rep.implied_c = rep.lhs / std::max(rep.rhs_first + rep.rhs_second, 1e-300);
  return rep;
}

}  // namespace glsim
