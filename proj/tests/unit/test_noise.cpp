#include <doctest.h>

#include <cmath>
#include <span>
#include <stdexcept>

#include "stream_t1/noise.hpp"
#include "stream_t1/stats.hpp"

using namespace stream_t1;

namespace {

std::span<const double> flat(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

TEST_CASE("initial noise is a seeded standard-normal draw") {
  RngStream a(1), b(1), c(split_rng(1, 0, 1));
  const NoiseChunk x = initial_noise(a, 4, 8);
  CHECK(x.values.rows() == 4);
  CHECK(x.values.cols() == 8);
  CHECK(x.chunk_index == 0);
  CHECK(x.values == sample_gaussian(b, 4, 8));
  CHECK(x.values != initial_noise(c, 4, 8).values);
  CHECK_THROWS_AS(initial_noise(a, 0, 8), std::invalid_argument);
}

TEST_CASE("beta = 0 returns the fresh sample") {
  RngStream a(3), b(3), c(4);
  const NoiseChunk prev = initial_noise(c, 4, 8);
  const NoiseChunk out = propagate_noise(prev, {0.0}, a);
  CHECK(out.values == sample_gaussian(b, 4, 8));
  CHECK(out.chunk_index == 1);
}

TEST_CASE("zero previous noise scales the fresh sample by sqrt(1 - beta^2)") {
  RngStream a(9), b(9);
  const NoiseChunk zero{Matrix::Zero(4, 8), 6};
  const NoiseChunk out = propagate_noise(zero, {0.6}, a);
  const Matrix eps = sample_gaussian(b, 4, 8);
  CHECK((out.values - 0.8 * eps).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(out.chunk_index == 7);
}

TEST_CASE("beta outside (-1, 1) is rejected") {
  RngStream rng(1);
  const NoiseChunk prev{Matrix::Zero(1, 1), 0};
  for (double beta : {1.0, -1.0, 1.5, std::nan("")})
    CHECK_THROWS_AS(propagate_noise(prev, {beta}, rng), std::invalid_argument);
  CHECK_NOTHROW(propagate_noise(prev, {-0.999}, rng));
}

TEST_CASE("coefficients preserve unit variance exactly") {
  for (double beta = -0.99; beta < 1.0; beta += 0.01) {
    const double fresh = std::sqrt(1.0 - beta * beta);
    CHECK(beta * beta + fresh * fresh == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("propagation keeps the marginal and sets the correlation") {
  for (double beta : {-0.5, 0.3, 0.6, 0.8}) {
    CAPTURE(beta);
    RngStream rng(split_rng(42, 100, static_cast<std::uint64_t>(beta * 100 + 100)));
    const NoiseChunk prev = initial_noise(rng, 1000, 100);
    const NoiseChunk out = propagate_noise(prev, {beta}, rng);
    const auto m = stats::moments(flat(out.values));
    CHECK(std::abs(m.mean) < 0.02);
    CHECK(m.variance > 0.97);
    CHECK(m.variance < 1.03);
    CHECK(std::abs(stats::correlation(flat(prev.values), flat(out.values)) - beta) < 0.02);
  }
}

TEST_CASE("repeated propagation decorrelates geometrically") {
  // corr(x_0, x_k) = beta^k for a chain of propagations.
  const double beta = 0.7;
  RngStream rng(77);
  const NoiseChunk x0 = initial_noise(rng, 500, 200);
  NoiseChunk x = x0;
  for (int k = 1; k <= 4; ++k) {
    x = propagate_noise(x, {beta}, rng);
    CHECK(std::abs(stats::correlation(flat(x0.values), flat(x.values)) - std::pow(beta, k)) < 0.02);
  }
}

TEST_CASE("same inputs give the same output") {
  RngStream a(21), b(21), c(22);
  const NoiseChunk prev = initial_noise(c, 4, 8);
  CHECK(propagate_noise(prev, {0.5}, a).values == propagate_noise(prev, {0.5}, b).values);
}
