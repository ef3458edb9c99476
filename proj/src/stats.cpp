#include "glsim/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

namespace glsim {

SampleStats sample_stats(const Vec& values) {
  SampleStats s;
  s.count = static_cast<int>(values.size());
  if (s.count == 0) return s;
  s.mean = values.mean();
  if (s.count > 1) {
    s.variance = (values.array() - s.mean).square().sum() / (s.count - 1);
    s.sem = std::sqrt(s.variance / s.count);
  }
  return s;
}

LinearFit linear_fit(const Vec& x, const Vec& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need at least two matching points");
  LinearFit f;
  f.count = static_cast<int>(x.size());
  const Real mx = x.mean(), my = y.mean();
  const Real sxx = (x.array() - mx).square().sum();
  const Real sxy = ((x.array() - mx) * (y.array() - my)).sum();
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissa");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const Real ss_tot = (y.array() - my).square().sum();
  const Real ss_res = (y.array() - (f.slope * x.array() + f.intercept)).square().sum();
  f.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return f;
}

Real normal_cdf(Real x, Real mean, Real stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0)));
}

KsResult ks_test_normal(Vec samples, Real mean, Real stddev) {
  KsResult r;
  r.count = static_cast<int>(samples.size());
  if (r.count == 0 || !(stddev > 0.0)) return r;
  std::sort(samples.data(), samples.data() + samples.size());
  Real d = 0.0;
  for (int i = 0; i < r.count; ++i) {
    const Real f = normal_cdf(samples[i], mean, stddev);
    d = std::max(d, std::abs(f - static_cast<Real>(i) / r.count));
    d = std::max(d, std::abs(static_cast<Real>(i + 1) / r.count - f));
  }
  r.statistic = d;
  const Real sqrt_n = std::sqrt(static_cast<Real>(r.count));
  const Real lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  Real p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const Real term = 2.0 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  r.p_value = std::clamp(p, 0.0, 1.0);
  return r;
}

Real batch_means_variance(const Vec& series, Real dt, int batch_len) {
  const int n_batches = static_cast<int>(series.size()) / batch_len;
  if (n_batches < 2) throw std::invalid_argument("batch_means_variance: too few batches");
  Vec means(n_batches);
  for (int b = 0; b < n_batches; ++b)
    means[b] = series.segment(static_cast<Index>(b) * batch_len, batch_len).mean();
  const SampleStats s = sample_stats(means);
  // Var(batch mean) ~ sigma^2 / (batch duration); invert for sigma^2.
  return s.variance * static_cast<Real>(batch_len) * dt;
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace glsim
