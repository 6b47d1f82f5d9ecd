#pragma once

#include "stream_t1/latent.hpp"
#include "stream_t1/rng.hpp"

namespace stream_t1 {

/// Initial noise of one chunk, shaped (F, D).
struct NoiseChunk {
  Matrix values;
  int chunk_index = 0;
};

/// Correlation between the noise of consecutive chunks.
struct PropagationParams {
  double beta = 0.5;

  /// Throws std::invalid_argument unless |beta| < 1.
  void validate() const;
};

/// Fresh N(0, I) noise for chunk 0.
NoiseChunk initial_noise(RngStream& rng, Eigen::Index frames, Eigen::Index dim);

/// beta * prev + sqrt(1 - beta^2) * eps, eps ~ N(0, I) drawn from `rng`.
/// The two coefficients have unit squared sum, so a standard-normal `prev`
/// yields a standard-normal result with entrywise correlation beta.
NoiseChunk propagate_noise(const NoiseChunk& prev, const PropagationParams& params,
                           RngStream& rng);

}  // namespace stream_t1
