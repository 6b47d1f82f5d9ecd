#include "stream_t1/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stream_t1 {

void PropagationParams::validate() const {
  if (!(std::abs(beta) < 1.0))
    throw std::invalid_argument("beta must lie in (-1, 1), got " + std::to_string(beta));
}

NoiseChunk initial_noise(RngStream& rng, Eigen::Index frames, Eigen::Index dim) {
  if (frames < 1 || dim < 1) throw std::invalid_argument("noise shape must be positive");
  return {sample_gaussian(rng, frames, dim), 0};
}

NoiseChunk propagate_noise(const NoiseChunk& prev, const PropagationParams& params,
                           RngStream& rng) {
  params.validate();
  const double fresh_scale = std::sqrt(1.0 - params.beta * params.beta);
  Matrix eps = sample_gaussian(rng, prev.values.rows(), prev.values.cols());
  return {params.beta * prev.values + fresh_scale * eps, prev.chunk_index + 1};
}

}  // namespace stream_t1
