#include "stream_t1/rng.hpp"

#include <cmath>

namespace stream_t1 {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double RngStream::uniform() {
  // 53-bit mantissa, shifted by half an ulp so 0 is never produced.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  return u * scale;
}

RngStream split_rng(std::uint64_t root_seed, std::uint64_t chunk_index,
                    std::uint64_t candidate_index) {
  std::uint64_t h = mix64(root_seed);
  h = mix64(h ^ mix64(chunk_index ^ 0x6a09e667f3bcc908ULL));
  h = mix64(h ^ mix64(candidate_index ^ 0xbb67ae8584caa73bULL));
  return RngStream(h);
}

Matrix sample_gaussian(RngStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = rng.gaussian();
  return out;
}

}  // namespace stream_t1
