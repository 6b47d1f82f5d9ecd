#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stream_t1/reward.hpp"
#include "stream_t1/rng.hpp"

using namespace stream_t1;

namespace {

LatentChunk constant_chunk(const Vector& v, int frames, int index) {
  Matrix m(frames, v.size());
  for (int f = 0; f < frames; ++f) m.row(f) = v.transpose();
  return {m, index};
}

// Independent restatement of the piecewise weight.
double oracle_fuse(double s, double l, int n, int total, double tau) {
  const double w = n / static_cast<double>(total) <= tau ? n / static_cast<double>(total) : tau;
  return w * s + (1 - w) * l;
}

struct CountingLong final : LongRewardModel {
  mutable std::size_t last_size = 0;
  mutable int last_front = -1;
  double score_window(std::span<const LatentChunk> w, const PromptEmbedding&) const override {
    last_size = w.size();
    last_front = w.front().chunk_index;
    return 0.25;
  }
};

}  // namespace

TEST_CASE("short oracle peaks at the attractor") {
  const auto script = SceneScript::default_script(8);
  const auto model = synthetic_short_oracle(script);
  const Vector a = script.attractor(0);
  CHECK(model->score_frame(a, script.prompt(0)) == 1.0);
  Vector off = a;
  off[3] += 1.0;
  CHECK(model->score_frame(off, script.prompt(0)) == doctest::Approx(0.5));
  // The prompt selects the attractor, not the chunk position.
  CHECK(model->score_frame(script.attractor(20), script.prompt(20)) == 1.0);

  RngStream rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vector x = sample_gaussian(rng, 8, 1).col(0);
    CHECK(model->score_frame(x, script.prompt(0)) < 1.0);
    CHECK(model->score_frame(x, script.prompt(0)) > 0.0);
  }
}

TEST_CASE("short score averages frames") {
  const auto script = SceneScript::default_script(8);
  const auto model = synthetic_short_oracle(script);
  Matrix frames(2, 8);
  frames.row(0) = script.attractor(0).transpose();
  frames.row(1) = script.attractor(0).transpose();
  frames(1, 5) = 1.0;  // distance 1 -> 0.5
  CHECK(short_score({frames, 0}, script.prompt(0), *model) == doctest::Approx(0.75));
  CHECK_THROWS_AS(short_score({Matrix(0, 8), 0}, script.prompt(0), *model),
                  std::invalid_argument);
}

TEST_CASE("long oracle rewards smoothness and penalizes segment spans") {
  const auto script = SceneScript::default_script(8);
  const auto model = synthetic_long_oracle(script, 0.5);
  const Vector a = script.attractor(0);
  std::vector<LatentChunk> still = {constant_chunk(a, 4, 3), constant_chunk(a, 4, 4)};
  CHECK(model->score_window(still, script.prompt(4)) == 1.0);

  // One unit step in one of 8 dims between the chunks: 7 pairs, msd = 1 / (7 * 8).
  Vector b = a;
  b[6] += 1.0;
  std::vector<LatentChunk> jump = {constant_chunk(a, 4, 3), constant_chunk(b, 4, 4)};
  CHECK(model->score_window(jump, script.prompt(4)) ==
        doctest::Approx(std::exp(-1.0 / 56.0)));

  std::vector<LatentChunk> span = {constant_chunk(a, 4, 12), constant_chunk(a, 4, 13)};
  CHECK(model->score_window(span, script.prompt(13)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(synthetic_long_oracle(script, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(synthetic_long_oracle(script, 0.0), std::invalid_argument);
}

TEST_CASE("long score sees the trailing window only") {
  CountingLong model;
  std::vector<LatentChunk> history;
  for (int n = 0; n < 15; ++n) history.push_back({Matrix::Zero(2, 3), n});
  const PromptEmbedding p{Vector::Zero(3)};
  long_score(std::span(history).first(4), 10, p, model);
  CHECK(model.last_size == 4);
  CHECK(model.last_front == 0);
  long_score(history, 10, p, model);
  CHECK(model.last_size == 10);
  CHECK(model.last_front == 5);
  CHECK_THROWS_AS(long_score({}, 10, p, model), std::invalid_argument);
  CHECK_THROWS_AS(long_score(history, 0, p, model), std::invalid_argument);
}

TEST_CASE("fusion examples") {
  const FusionParams p{0.5, 40};
  CHECK(fuse(0.9, 0.1, 0, p) == 0.1);
  CHECK(fuse(0.8, 0.4, 10, p) == doctest::Approx(0.25 * 0.8 + 0.75 * 0.4));
  CHECK(fuse(0.8, 0.4, 20, p) == doctest::Approx(0.6));
  CHECK(fuse(0.8, 0.4, 39, p) == doctest::Approx(0.6));
  CHECK(short_weight(30, p) == 0.5);
}

TEST_CASE("fusion grid matches the piecewise formula") {
  RngStream rng(8);
  for (int total : {4, 10, 40})
    for (double tau : {0.25, 0.5, 0.75})
      for (int n = 0; n < total; ++n) {
        const double s = rng.uniform(), l = rng.uniform();
        const FusionParams p{tau, total};
        CHECK(std::abs(fuse(s, l, n, p) - oracle_fuse(s, l, n, total, tau)) <= 1e-12);
        if (n * 1.0 / total == tau) CHECK(short_weight(n, p) == tau);
      }
}

TEST_CASE("fused score lies between its parts and is continuous in position") {
  const FusionParams p{0.5, 40};
  for (int n = 0; n < 40; ++n) {
    const double f = fuse(0.3, 0.7, n, p);
    CHECK(f >= 0.3);
    CHECK(f <= 0.7);
    if (n > 0) CHECK(std::abs(short_weight(n, p) - short_weight(n - 1, p)) <= 1.0 / 40 + 1e-15);
  }
}

TEST_CASE("fusion parameter domain") {
  CHECK_THROWS_AS((FusionParams{0.0, 40}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FusionParams{1.5, 40}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FusionParams{0.5, 0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((FusionParams{1.0, 1}.validate()));
}
