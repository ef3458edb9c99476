#include "glsim/modes.hpp"

#include <cmath>
#include <sstream>

namespace glsim {

ModeSet make_mode_set(const std::vector<int>& modes) {
  ModeSet s(modes.begin(), modes.end());
  if (s.count(0)) throw std::invalid_argument("mode set must not contain 0");
  return s;
}

ModeSet znext(const ModeSet& prev, const ModeSet& z0) {
  ModeSet out;
  for (int k : prev)
    for (int l : z0)
      for (int m : z0) {
        const int s = k + l + m;
        if (s != 0) out.insert(s);
      }
  return out;
}

HypothesisReport check_hypothesis(const ModeSet& z0, int cutoff, int depth_limit) {
  if (z0.empty()) throw std::invalid_argument("check_hypothesis: empty forced set");
  if (cutoff < 1 || depth_limit < 1)
    throw std::invalid_argument("check_hypothesis: cutoff and depth_limit must be >= 1");

  HypothesisReport rep;
  rep.cutoff = cutoff;
  rep.depth_limit = depth_limit;
  rep.finite = true;
  rep.symmetric = true;
  for (int k : z0)
    if (!z0.count(-k)) rep.symmetric = false;

  for (int k = -cutoff; k <= cutoff; ++k)
    if (k != 0) rep.coverage[k] = HypothesisReport::kUnreached;

  ModeSet zn = z0;
  for (int n = 0; n <= depth_limit; ++n) {
    for (int k : zn) {
      auto it = rep.coverage.find(k);
      if (it != rep.coverage.end() && it->second == HypothesisReport::kUnreached)
        it->second = n;
    }
    if (n < depth_limit) zn = znext(zn, z0);
  }

  bool all_reached = true;
  for (const auto& [k, depth] : rep.coverage)
    if (depth == HypothesisReport::kUnreached) all_reached = false;

  rep.pass = rep.symmetric && rep.finite && all_reached;
  if (!rep.symmetric)
    rep.failure_reason = "forced set is not symmetric under negation";
  else if (!all_reached)
    rep.failure_reason = "some frequencies below the cutoff were not generated";
  return rep;
}

std::string HypothesisReport::to_text() const {
  std::ostringstream os;
  os << "mode-generation check: " << (pass ? "PASS" : "FAIL") << "\n";
  os << "symmetric=" << (symmetric ? "yes" : "no") << " finite=" << (finite ? "yes" : "no")
     << " cutoff=" << cutoff << " depth_limit=" << depth_limit << "\n";
  if (!failure_reason.empty()) os << "reason: " << failure_reason << "\n";
  os << "mode\tdepth\n";
  for (const auto& [k, depth] : coverage) {
    os << k << "\t";
    if (depth == kUnreached)
      os << "UNREACHED";
    else
      os << depth;
    os << "\n";
  }
  return os.str();
}

void TrigPoly::add(int freq, int phase, Real coeff) {
  if (coeff == 0.0) return;
  // Canonical form: cos(-kz + p pi/2) = cos(kz - p pi/2), then fold the phase
  // mod 4 with cos(x + pi) = -cos(x). A (0,1) term is identically zero.
  if (freq < 0) {
    freq = -freq;
    phase = -phase;
  }
  phase = ((phase % 4) + 4) % 4;
  if (phase >= 2) {
    phase -= 2;
    coeff = -coeff;
  }
  if (freq == 0 && phase == 1) return;
  auto key = std::make_pair(freq, phase);
  auto it = terms_.find(key);
  if (it == terms_.end()) {
    terms_.emplace(key, coeff);
  } else {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

void TrigPoly::add(const TrigPoly& other, Real scale) {
  for (const auto& [key, c] : other.terms_) add(key.first, key.second, scale * c);
}

Real TrigPoly::coeff(int freq, int phase) const {
  auto it = terms_.find({freq, phase});
  return it == terms_.end() ? 0.0 : it->second;
}

Real TrigPoly::eval(Real z) const {
  Real acc = 0.0;
  for (const auto& [key, c] : terms_)
    acc += c * std::cos(key.first * z + 0.5 * M_PI * key.second);
  return acc;
}

Real TrigPoly::max_abs_coeff() const {
  Real m = 0.0;
  for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

void TrigPoly::prune(Real tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= tol)
      it = terms_.erase(it);
    else
      ++it;
  }
}

TrigPoly TrigPoly::term(int freq, int phase, Real coeff) {
  TrigPoly p;
  p.add(freq, phase, coeff);
  return p;
}

SpectralField TrigPoly::to_field(int n_modes, Real tol) const {
  SpectralField f = SpectralField::zero(n_modes);
  const Real sqrt_pi = std::sqrt(M_PI);
  for (const auto& [key, c] : terms_) {
    const auto [freq, phase] = key;
    if (freq == 0) {
      if (std::abs(c) > tol)
        throw std::invalid_argument("TrigPoly::to_field: nonzero constant component");
      continue;
    }
    if (freq > n_modes) throw std::invalid_argument("TrigPoly::to_field: frequency above resolution");
    // cos(kz) = sqrt(pi) b_{-k};  cos(kz + pi/2) = -sin(kz) = -sqrt(pi) b_k.
    if (phase == 0)
      f.coeff(-freq) += c * sqrt_pi;
    else
      f.coeff(freq) -= c * sqrt_pi;
  }
  return f;
}

TrigPoly product_to_sum(const BracketTerm& a, const BracketTerm& b) {
  TrigPoly p;
  p.add(a.freq - b.freq, a.phase - b.phase, 0.5);
  p.add(a.freq + b.freq, a.phase + b.phase, 0.5);
  return p;
}

TrigPoly multiply(const TrigPoly& p, const BracketTerm& b) {
  TrigPoly out;
  for (const auto& [key, c] : p.terms()) {
    out.add(key.first - b.freq, key.second - b.phase, 0.5 * c);
    out.add(key.first + b.freq, key.second + b.phase, 0.5 * c);
  }
  return out;
}

SpectralField bracket_first(int freq, int phase, const SpectralField& u) {
  if (3 * std::abs(freq) > u.n_modes)
    throw std::invalid_argument("bracket_first: resolution too small for alias-free product");
  const SpectralTransform& plan = transform_for(u.n_modes);
  SpectralField f = TrigPoly::term(freq, phase).to_field(u.n_modes);
  Vec ug = plan.synthesis() * u.coeffs;
  Vec fg = plan.synthesis() * f.coeffs;
  Vec prod = ug.array().square() * fg.array();
  SpectralField out(u.n_modes, plan.analysis() * prod);
  out.coeffs *= 3.0;
  const Real kk = static_cast<Real>(freq) * freq;
  out.coeffs += (kk - 1.0) * f.coeffs;
  return out;
}

TrigPoly bracket_third(int k, int l, int j, int m, int mp, int mpp) {
  TrigPoly p = product_to_sum({k, m}, {l, mp});
  p = multiply(p, {j, mpp});
  TrigPoly out;
  out.add(p, 6.0);
  return out;
}

Recombination solve_recombination(int k, int l, int j, Real residual_tol) {
  if (k + l + j == 0)
    throw std::invalid_argument("solve_recombination: target frequency is zero");

  std::array<TrigPoly, 8> brackets;
  for (int idx = 0; idx < 8; ++idx)
    brackets[idx] = bracket_third(k, l, j, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1);

  const int s = k + l + j;
  TrigPoly target_cos = TrigPoly::term(s, 0, 1.0);
  TrigPoly target_sin = TrigPoly::term(s, 1, -1.0);  // sin(sz) = -cos(sz + pi/2)

  // Collect the union of canonical terms; each is one equation.
  std::map<std::pair<int, int>, int> rows;
  auto note = [&rows](const TrigPoly& p) {
    for (const auto& [key, c] : p.terms())
      if (!rows.count(key)) rows.emplace(key, static_cast<int>(rows.size()));
  };
  for (const auto& b : brackets) note(b);
  note(target_cos);
  note(target_sin);

  Mat A = Mat::Zero(static_cast<Index>(rows.size()), 8);
  for (int c = 0; c < 8; ++c)
    for (const auto& [key, v] : brackets[c].terms()) A(rows.at(key), c) = v;
  Vec tc = Vec::Zero(static_cast<Index>(rows.size()));
  Vec ts = Vec::Zero(static_cast<Index>(rows.size()));
  for (const auto& [key, v] : target_cos.terms()) tc[rows.at(key)] = v;
  for (const auto& [key, v] : target_sin.terms()) ts[rows.at(key)] = v;

  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Recombination rec;
  rec.cos_coeffs = svd.solve(tc);
  rec.sin_coeffs = svd.solve(ts);

  auto expand = [&brackets](const Eigen::Matrix<Real, 8, 1>& c) {
    TrigPoly p;
    for (int idx = 0; idx < 8; ++idx) p.add(brackets[idx], c[idx]);
    return p;
  };
  TrigPoly dc = expand(rec.cos_coeffs);
  dc.add(target_cos, -1.0);
  TrigPoly ds = expand(rec.sin_coeffs);
  ds.add(target_sin, -1.0);
  rec.cos_residual = dc.max_abs_coeff();
  rec.sin_residual = ds.max_abs_coeff();
  rec.ok = rec.cos_residual <= residual_tol && rec.sin_residual <= residual_tol;
  return rec;
}

}  // namespace glsim
