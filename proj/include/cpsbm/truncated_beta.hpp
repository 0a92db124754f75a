#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "cpsbm/error.hpp"
#include "cpsbm/rng.hpp"

namespace cpsbm {

inline double sample_beta(double a, double b, Rng& rng) {
  double x = std::gamma_distribution<double>(a, 1.0)(rng);
  double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

// Unnormalized log density of Beta(present+1, absent+1).
inline double log_beta_kernel(double x, double present, double absent) {
  double v = 0;
  if (present > 0) v += present * std::log(x);
  if (absent > 0) v += absent * std::log1p(-x);
  return v;
}

// Exact draw from Beta(present+1, absent+1) restricted to (lo, hi).
//
// When the peak (present+1)/(present+absent+2) lies inside the interval,
// unconstrained draws are rejected until one lands inside; after
// kMaxDirectRejections misses we switch to the second strategy. Otherwise a
// uniform proposal on (lo, hi) is accepted with probability f(u)/sup f,
// where sup f over the interval is taken at the endpoints or, if it falls
// inside, at the mode present/(present+absent).
inline double sample_truncated_beta(std::int64_t present, std::int64_t absent, double lo, double hi,
                                    Rng& rng) {
  constexpr int kMaxDirectRejections = 1000;
  if (!(lo < hi) || lo < 0.0 || hi > 1.0) throw Error("truncated beta needs 0 <= lo < hi <= 1");
  const double a = static_cast<double>(present);
  const double b = static_cast<double>(absent);

  const double peak = (a + 1) / (a + b + 2);
  if (lo < peak && peak < hi) {
    for (int i = 0; i < kMaxDirectRejections; ++i) {
      double x = sample_beta(a + 1, b + 1, rng);
      if (lo < x && x < hi) return x;
    }
  }

  double log_sup = std::max(log_beta_kernel(lo, a, b), log_beta_kernel(hi, a, b));
  if (a + b > 0) {
    double mode = a / (a + b);
    if (lo < mode && mode < hi) log_sup = log_beta_kernel(mode, a, b);
  }
  for (;;) {
    double u = uniform_open(rng, lo, hi);
    if (!(lo < u && u < hi)) continue;
    if (std::log(uniform_open(rng)) < log_beta_kernel(u, a, b) - log_sup) return u;
  }
}

}  // namespace cpsbm
