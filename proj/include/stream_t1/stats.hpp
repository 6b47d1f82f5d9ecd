#pragma once

#include <span>

namespace stream_t1::stats {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

Moments moments(std::span<const double> xs);

/// Pearson correlation of paired samples.
double correlation(std::span<const double> xs, std::span<const double> ys);

/// P(X >= successes) for X ~ Binomial(trials, 1/2).
double binomial_upper_tail(int successes, int trials);

struct SignTest {
  int wins = 0;
  int losses = 0;
  int ties = 0;
  double p_value = 1.0;  // one-sided, ties dropped
};

/// One-sided paired sign test of H1: a > b.
SignTest sign_test_greater(std::span<const double> a, std::span<const double> b);

}  // namespace stream_t1::stats
