#pragma once

#include <cstdint>
#include <vector>

#include "stream_t1/latent.hpp"
#include "stream_t1/memory_sink.hpp"
#include "stream_t1/noise.hpp"
#include "stream_t1/rng.hpp"

namespace stream_t1 {

/// Renoising levels for a T-step sampler: sigmas()[j] is the level the
/// estimate is pushed back to after step j+1, so sigmas()[T-1] follows the
/// first (pure-noise) step and sigmas()[0] = 0 leaves the final estimate clean.
class NoiseSchedule {
 public:
  /// Throws unless non-empty, strictly decreasing, non-negative and ending in 0.
  explicit NoiseSchedule(std::vector<double> sigmas);

  static NoiseSchedule default_schedule() { return NoiseSchedule({1.0, 0.6, 0.3, 0.0}); }

  int steps() const { return static_cast<int>(sigmas_.size()); }
  const std::vector<double>& sigmas() const { return sigmas_; }
  double sigma(int level_index) const;

  /// Noise level of the input to step `level_index` (1..T). The first step
  /// sees unit-variance pure noise.
  double input_sigma(int level_index) const;

 private:
  std::vector<double> sigmas_;
};

/// Hand-built projections of a single attention layer.
///
/// Queries and keys are seeded Gaussian maps rescaled to spectral norm
/// `kMaxSpectralNorm`. The value map is a seeded orthogonal matrix and the
/// output map its transpose, so attention returns a convex mix of context
/// frames expressed in latent space.
struct DenoiserWeights {
  static constexpr double kMaxSpectralNorm = 1.0;

  Matrix query;       // D x D
  Matrix key;         // D x D
  Matrix value;       // D x D
  Matrix output;      // D x D
  Matrix prompt_mix;  // D x D, spectral norm <= 0.5

  static DenoiserWeights generate(std::uint64_t seed, Eigen::Index dim);

  Eigen::Index dim() const { return query.rows(); }
};

struct DenoiserParams {
  /// Maximum per-step pull toward the scene attractor.
  double attractor_pull = 0.35;
  /// Fraction of the pull applied even when the context disagrees with the
  /// attractor (and with an empty context).
  double pull_floor = 0.3;
  /// Share of fresh noise in each renoising draw; 0 reuses the chunk's
  /// initial noise at every step.
  double renoise_eta = 0.0;
  /// Softmax inverse temperature on q.k / sqrt(D).
  double attention_sharpness = 4.0;
  /// Logit bonus on sink rows; sinks draw a disproportionate share of
  /// attention mass.
  double sink_attention_bias = 0.0;
  /// Prior variance of clean content around the context estimate; sets how
  /// much of a noisy input survives each step.
  double content_variance = 1.0;
};

struct Conditioning {
  PromptEmbedding prompt;
  Vector attractor;
};

struct GeneratedChunk {
  LatentChunk chunk;
  KVEntry kv;
};

/// Deterministic few-step chunk denoiser with causal attention over the
/// assembled [sink; window] context.
///
/// One denoising step at level j with input x (one row per frame):
///   ctx    = softmax(sharpness * Q K^T / sqrt(D) + bias_sink) V W_o,  Q = (x + P p) W_q
///   base   = ctx + s_j (x - ctx),         s_j = v / (v + input_sigma(j)^2)
///   agree  = max(0, cos(ctx_f, a))^2      (0 for an empty context)
///   w_f    = pull * (floor + (1 - floor) * agree)
///   x0_hat = base + w_f (a - base)
/// With an empty context this reduces to s_j x + w (a - s_j x), w = pull*floor.
class ToyGenerator {
 public:
  ToyGenerator(DenoiserWeights weights, NoiseSchedule schedule, DenoiserParams params);

  const DenoiserWeights& weights() const { return weights_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const DenoiserParams& params() const { return params_; }

  Matrix predict_clean(const Matrix& x_t, int level_index, const AttentionContext& context,
                       const Conditioning& cond) const;

  /// Runs all T steps; the last step returns its clean estimate unchanged.
  /// Does not touch the cache.
  GeneratedChunk generate_chunk(const NoiseChunk& noise, const SinkCache& cache,
                                const Conditioning& cond, RngStream& rng) const;

  KVEntry project(const LatentChunk& chunk) const;

 private:
  DenoiserWeights weights_;
  NoiseSchedule schedule_;
  DenoiserParams params_;
};

/// x0_hat + sigma_j * eps. Level 0 is the identity.
Matrix renoise(const Matrix& x0_hat, const Matrix& eps, int level_index,
               const NoiseSchedule& schedule);

}  // namespace stream_t1
