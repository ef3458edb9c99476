#include "glsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace glsim {

ForcingSpec ForcingSpec::uniform(const std::vector<int>& modes, Real amp) {
  ForcingSpec f;
  f.modes = modes;
  f.amps = Vec::Constant(static_cast<Index>(modes.size()), amp);
  return f;
}

bool ForcingSpec::symmetric() const {
  std::set<int> s(modes.begin(), modes.end());
  return std::all_of(modes.begin(), modes.end(), [&s](int k) { return s.count(-k) > 0; });
}

int ForcingSpec::max_frequency() const {
  int m = 0;
  for (int k : modes) m = std::max(m, std::abs(k));
  return m;
}

void ForcingSpec::validate(int n_modes) const {
  if (modes.empty()) throw std::invalid_argument("forcing: no channels");
  if (amps.size() != static_cast<Index>(modes.size()))
    throw std::invalid_argument("forcing: amplitude count mismatch");
  std::set<int> seen;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    if (modes[j] == 0) throw std::invalid_argument("forcing: mode 0 is not in the state space");
    if (std::abs(modes[j]) > n_modes)
      throw std::invalid_argument("forcing: forced mode above resolution");
    if (!seen.insert(modes[j]).second)
      throw std::invalid_argument("forcing: duplicate forced mode");
    if (amps[static_cast<Index>(j)] == 0.0 || !std::isfinite(amps[static_cast<Index>(j)]))
      throw std::invalid_argument("forcing: amplitudes must be nonzero and finite");
  }
}

Real ForcingSpec::forcing_moment(int n) const {
  Real acc = 0.0;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const Real gamma = static_cast<Real>(modes[j]) * modes[j];
    acc += std::pow(gamma, n) * amps[static_cast<Index>(j)] * amps[static_cast<Index>(j)];
  }
  return acc;
}

int SolverConfig::n_steps() const {
  const Real steps = horizon / dt;
  const int n = static_cast<int>(std::llround(steps));
  if (n < 1 || std::abs(steps - n) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("config: horizon must be a positive multiple of dt");
  return n;
}

void SolverConfig::validate(const ForcingSpec& forcing) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("config: dt must be > 0");
  if (!(horizon >= dt)) throw std::invalid_argument("config: horizon must be >= dt");
  if (n_modes < 1) throw std::invalid_argument("config: n_modes must be >= 1");
  if (snapshot_stride < 1) throw std::invalid_argument("config: snapshot_stride must be >= 1");
  forcing.validate(n_modes);
  n_steps();
}

Stepper::Stepper(int n_modes, Real dt, const ForcingSpec& forcing, bool nonlinearity)
    : n_(n_modes), dt_(dt), nonlin_(nonlinearity), forcing_(forcing),
      plan_(&transform_for(n_modes)) {
  forcing_.validate(n_modes);
  const int d = 2 * n_;
  elam_.resize(d);
  nl_weight_.resize(d);
  for (int i = 0; i < d; ++i) {
    const Real k = index_frequency(n_, i);
    const Real lam = 1.0 - k * k;
    elam_[i] = std::exp(lam * dt_);
    // Integrating-factor weight dt e^{lam dt} on the explicit cubic. This
    // keeps the one-step map of the form e^{L dt}(u - dt u^3), whose
    // difference and tangent maps contract in L2 whenever dt ||u||_inf^2 is
    // below 2/3; a phi1 weight loses that pathwise monotonicity at O(dt^2).
    nl_weight_[i] = dt_ * elam_[i];
  }
  const int nc = forcing_.n_channels();
  rows_.resize(nc);
  conv_std_.resize(nc);
  for (int j = 0; j < nc; ++j) {
    rows_[j] = mode_index(n_, forcing_.modes[j]);
    const Real k = std::abs(forcing_.modes[j]);
    const Real lam = 1.0 - k * k;
    // Var int_0^dt e^{2 lam (dt - s)} dW = (e^{2 lam dt} - 1) / (2 lam), -> dt as lam -> 0.
    const Real var = lam == 0.0 ? dt_ : std::expm1(2.0 * lam * dt_) / (2.0 * lam);
    conv_std_[j] = forcing_.amps[j] * std::sqrt(var);
  }
}

void Stepper::step_deterministic(Vec& u) const {
  if (nonlin_) {
    Vec w = plan_->synthesis() * u;
    w = w.array().cube();
    Vec cub = plan_->analysis() * w;
    u = elam_.cwiseProduct(u) - nl_weight_.cwiseProduct(cub);
  } else {
    u = elam_.cwiseProduct(u);
  }
}

void Stepper::step(Vec& u, const Vec& xi) const {
  step_deterministic(u);
  for (int j = 0; j < n_channels(); ++j) u[rows_[j]] += conv_std_[j] * xi[j];
  const Real nsq = u.squaredNorm();
  if (!(nsq < kBlowupGuard * kBlowupGuard)) {
    std::ostringstream os;
    os << "blow-up guard: ||U|| = " << std::sqrt(nsq) << " exceeds " << kBlowupGuard;
    throw NumericalGuard(os.str());
  }
}

Vec Stepper::squared_grid(const Vec& u) const {
  Vec w = plan_->synthesis() * u;
  return w.array().square();
}

void Stepper::tangent_step(Vec& xi, const Vec& u2_grid) const {
  if (nonlin_) {
    Vec w = plan_->synthesis() * xi;
    w.array() *= u2_grid.array();
    xi = elam_.cwiseProduct(xi) - 3.0 * nl_weight_.cwiseProduct(plan_->analysis() * w);
  } else {
    xi = elam_.cwiseProduct(xi);
  }
}

void Stepper::adjoint_step(Vec& phi, const Vec& u2_grid) const {
  // J_step = E - 3 D_phi T D_{u^2} S with T = (2 pi / M) S^T, so
  // J_step^T = E - 3 T D_{u^2} S D_phi: same matrices, phi1 weight applied first.
  if (nonlin_) {
    Vec w = plan_->synthesis() * nl_weight_.cwiseProduct(phi);
    w.array() *= u2_grid.array();
    phi = elam_.cwiseProduct(phi) - 3.0 * (plan_->analysis() * w);
  } else {
    phi = elam_.cwiseProduct(phi);
  }
}

void Stepper::tangent_step(Mat& x, const Vec& u2_grid) const {
  if (nonlin_) {
    Mat w = plan_->synthesis() * x;
    w.array().colwise() *= u2_grid.array();
    x = elam_.asDiagonal() * x - 3.0 * (nl_weight_.asDiagonal() * (plan_->analysis() * w));
  } else {
    x = elam_.asDiagonal() * x;
  }
}

void Stepper::adjoint_step(Mat& x, const Vec& u2_grid) const {
  if (nonlin_) {
    Mat w = plan_->synthesis() * (nl_weight_.asDiagonal() * x);
    w.array().colwise() *= u2_grid.array();
    x = elam_.asDiagonal() * x - 3.0 * (plan_->analysis() * w);
  } else {
    x = elam_.asDiagonal() * x;
  }
}

Vec Stepper::apply_forcing_map(const Vec& v) const {
  Vec u = Vec::Zero(dim());
  for (int j = 0; j < n_channels(); ++j) u[rows_[j]] += forcing_.amps[j] * v[j];
  return u;
}

Vec Stepper::apply_forcing_map_transpose(const Vec& u) const {
  Vec v(n_channels());
  for (int j = 0; j < n_channels(); ++j) v[j] = forcing_.amps[j] * u[rows_[j]];
  return v;
}

Vec Trajectory::state_at(int step) const {
  if (step < 0 || step > n_steps()) throw std::invalid_argument("state_at: step out of range");
  if (step % snapshot_stride == 0) return states[static_cast<std::size_t>(step / snapshot_stride)];
  const int base = (step / snapshot_stride) * snapshot_stride;
  Vec u = states[static_cast<std::size_t>(base / snapshot_stride)];
  const Stepper stepper = make_stepper();
  for (int i = base; i < step; ++i) stepper.step(u, noise.col(i));
  return u;
}

Trajectory integrate_with_noise(const Vec& u0, const SolverConfig& cfg,
                                const ForcingSpec& forcing, const Mat& noise) {
  cfg.validate(forcing);
  if (u0.size() != 2 * static_cast<Index>(cfg.n_modes))
    throw std::invalid_argument("integrate: initial state size mismatch");
  if (!u0.allFinite()) throw std::invalid_argument("integrate: non-finite initial state");
  const int n_steps = cfg.n_steps();
  if (noise.rows() != forcing.n_channels() || noise.cols() != n_steps)
    throw std::invalid_argument("integrate: noise shape mismatch");

  Trajectory traj;
  traj.n_modes = cfg.n_modes;
  traj.dt = cfg.dt;
  traj.nonlinearity = cfg.nonlinearity;
  traj.seed = cfg.seed;
  traj.snapshot_stride = cfg.snapshot_stride;
  traj.forcing = forcing;
  traj.initial = u0;
  traj.noise = noise;

  const Stepper stepper(cfg.n_modes, cfg.dt, forcing, cfg.nonlinearity);
  traj.states.reserve(static_cast<std::size_t>(n_steps / cfg.snapshot_stride) + 1);
  Vec u = u0;
  traj.states.push_back(u);
  for (int i = 0; i < n_steps; ++i) {
    stepper.step(u, traj.noise.col(i));
    if ((i + 1) % cfg.snapshot_stride == 0) traj.states.push_back(u);
  }
  return traj;
}

Trajectory integrate(const Vec& u0, const SolverConfig& cfg, const ForcingSpec& forcing) {
  cfg.validate(forcing);
  GaussianStream rng(cfg.seed);
  Mat noise(forcing.n_channels(), cfg.n_steps());
  for (Index c = 0; c < noise.cols(); ++c)
    for (Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.next();
  return integrate_with_noise(u0, cfg, forcing, noise);
}

SpectralField drift(const SpectralField& f) {
  const SpectralTransform& plan = transform_for(f.n_modes);
  SpectralField out = apply_A(f);
  out.coeffs = -out.coeffs + f.coeffs - plan.cubic(f).coeffs;
  return out;
}

Real power_norm(const SpectralField& f, int m) {
  if (m < 1) throw std::invalid_argument("power_norm: power must be >= 1");
  // Quadrature exact for trig polynomials of degree 2 m N needs M >= 2 m N + 1.
  const SpectralTransform& plan = padded_transform_for(f.n_modes, 2 * m * f.n_modes + 1);
  Vec w = plan.synthesis() * f.coeffs;
  const Real integral =
      (2.0 * M_PI / plan.grid_size()) * w.array().pow(2 * m).sum();
  return std::sqrt(integral);
}

DiagnosticSeries diagnostics(const Trajectory& traj, const DiagnosticParams& params) {
  if (!traj.dense())
    throw std::invalid_argument("diagnostics: requires a dense (stride 1) trajectory");
  if (params.stride < 1) throw std::invalid_argument("diagnostics: stride must be >= 1");
  const int n_steps = traj.n_steps();
  const int n_rec = n_steps / params.stride + 1;

  DiagnosticSeries s;
  s.times.resize(n_rec);
  s.l2_norm.resize(n_rec);
  s.v1_norm.resize(n_rec);
  s.energy.resize(n_rec);
  s.weighted_energy.resize(n_rec);
  s.power_norm.resize(n_rec);
  s.exp_moment.resize(n_rec);
  s.forcing_b0 = traj.forcing.forcing_moment(0);
  s.forcing_bn = traj.forcing.forcing_moment(params.order);
  s.params_power = params.power;
  s.params_order = params.order;
  s.params_eta = params.eta;

  const SobolevIndex v1{1.0, SobolevIndex::Family::Vs};
  const SobolevIndex vn{static_cast<Real>(params.order), SobolevIndex::Family::Vs};
  const SobolevIndex vn1{static_cast<Real>(params.order) + 1.0, SobolevIndex::Family::Vs};

  Real energy_int = 0.0;    // int ||U||_1^2
  Real weighted_int = 0.0;  // int s^n ||U||_{n+1}^2
  Real prev_v1sq = 0.0, prev_wn1 = 0.0;
  int rec = 0;
  for (int i = 0; i <= n_steps; ++i) {
    const Vec& u = traj.states[static_cast<std::size_t>(i)];
    const Real t = traj.time_at(i);
    const Real v1sq = norm(u, traj.n_modes, v1);
    const Real v1sq2 = v1sq * v1sq;
    const Real wn1 = std::pow(t, params.order) * std::pow(norm(u, traj.n_modes, vn1), 2);
    if (i > 0) {
      energy_int += 0.5 * traj.dt * (prev_v1sq + v1sq2);
      weighted_int += 0.5 * traj.dt * (prev_wn1 + wn1);
    }
    prev_v1sq = v1sq2;
    prev_wn1 = wn1;
    if (i % params.stride == 0) {
      const Real l2 = u.norm();
      s.times[rec] = t;
      s.l2_norm[rec] = l2;
      s.v1_norm[rec] = v1sq;
      s.energy[rec] = l2 * l2 + energy_int;
      s.weighted_energy[rec] =
          std::pow(t, params.order) * norm(u, traj.n_modes, vn) + weighted_int;
      s.power_norm[rec] = power_norm(SpectralField(traj.n_modes, u), params.power);
      s.exp_moment[rec] = std::exp(params.eta * l2 * l2);
      ++rec;
    }
  }
  return s;
}

}  // namespace glsim
