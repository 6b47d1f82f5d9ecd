#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "stream_t1/latent.hpp"

namespace stream_t1 {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Seeded stream of uniforms and standard normals.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the standard,
/// so draws are reproducible across platforms. Uniforms take the top 53 bits;
/// normals use the Marsaglia polar transform with the second variate cached.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  double gaussian();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Independent stream for one (chunk, candidate) pair. Streams do not depend
/// on the order in which candidates are expanded.
RngStream split_rng(std::uint64_t root_seed, std::uint64_t chunk_index,
                    std::uint64_t candidate_index);

/// rows x cols matrix of i.i.d. N(0, 1), filled row-major.
Matrix sample_gaussian(RngStream& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace stream_t1
