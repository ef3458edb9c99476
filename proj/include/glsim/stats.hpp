#pragma once

#include <functional>
#include <vector>

#include "glsim/types.hpp"

namespace glsim {

struct SampleStats {
  Real mean = 0.0;
  Real variance = 0.0;  ///< unbiased
  Real sem = 0.0;       ///< standard error of the mean
  int count = 0;
};

SampleStats sample_stats(const Vec& values);

struct LinearFit {
  Real slope = 0.0;
  Real intercept = 0.0;
  Real r_squared = 0.0;
  int count = 0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit linear_fit(const Vec& x, const Vec& y);

Real normal_cdf(Real x, Real mean = 0.0, Real stddev = 1.0);

struct KsResult {
  Real statistic = 0.0;
  Real p_value = 0.0;
  int count = 0;
};

/// One-sample Kolmogorov-Smirnov test against Normal(mean, stddev^2),
/// asymptotic p-value.
KsResult ks_test_normal(Vec samples, Real mean, Real stddev);

/// Batch-means estimate of the asymptotic variance of a time average:
/// sigma^2 = lim T Var( (1/T) int phi ). `series` holds equally spaced
/// observations dt apart; batches of `batch_len` observations.
Real batch_means_variance(const Vec& series, Real dt, int batch_len);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// captured and rethrown on the calling thread.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace glsim
