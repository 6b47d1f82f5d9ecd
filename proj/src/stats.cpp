#include "stream_t1/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stream_t1::stats {

Moments moments(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("moments need at least two samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(xs.size() - 1)};
}

double correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("correlation needs two equal-length samples");
  const auto mx = moments(xs).mean;
  const auto my = moments(ys).mean;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double binomial_upper_tail(int successes, int trials) {
  if (trials < 0) throw std::invalid_argument("negative trial count");
  if (successes <= 0) return 1.0;
  if (successes > trials) return 0.0;
  double tail = 0.0;
  for (int k = successes; k <= trials; ++k) {
    const double log_choose =
        std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
    tail += std::exp(log_choose - trials * std::log(2.0));
  }
  return std::min(tail, 1.0);
}

SignTest sign_test_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sign test needs paired samples");
  SignTest t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++t.wins;
    else if (a[i] < b[i]) ++t.losses;
    else ++t.ties;
  }
  t.p_value = binomial_upper_tail(t.wins, t.wins + t.losses);
  return t;
}

}  // namespace stream_t1::stats
