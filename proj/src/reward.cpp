#include "stream_t1/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stream_t1 {

void FusionParams::validate() const {
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("tau must lie in (0, 1], got " + std::to_string(tau));
  if (total_chunks < 1) throw std::invalid_argument("total_chunks must be >= 1");
}

double short_score(const LatentChunk& chunk, const PromptEmbedding& prompt,
                   const ShortRewardModel& model) {
  if (chunk.frame_count() < 1) throw std::invalid_argument("chunk has no frames");
  double sum = 0.0;
  for (Eigen::Index f = 0; f < chunk.frame_count(); ++f)
    sum += model.score_frame(chunk.frames.row(f).transpose(), prompt);
  return sum / static_cast<double>(chunk.frame_count());
}

double long_score(std::span<const LatentChunk> history, int window,
                  const PromptEmbedding& prompt, const LongRewardModel& model) {
  if (history.empty()) throw std::invalid_argument("long_score needs a non-empty history");
  if (window < 1) throw std::invalid_argument("reward window must be >= 1");
  const auto take = std::min(history.size(), static_cast<std::size_t>(window));
  return model.score_window(history.last(take), prompt);
}

double short_weight(int chunk_index, const FusionParams& params) {
  const double position = static_cast<double>(chunk_index) / params.total_chunks;
  return position <= params.tau ? position : params.tau;
}

double fuse(double s_short, double s_long, int chunk_index, const FusionParams& params) {
  const double w = short_weight(chunk_index, params);
  return w * s_short + (1.0 - w) * s_long;
}

double SyntheticShortOracle::score_frame(const LatentFrame& frame,
                                         const PromptEmbedding& prompt) const {
  const auto& target = script_.segments()[script_.segment_for_prompt(prompt)].attractor;
  return 1.0 / (1.0 + (frame - target).norm());
}

SyntheticLongOracle::SyntheticLongOracle(SceneScript script, double penalty)
    : script_(std::move(script)), penalty_(penalty) {
  if (!(penalty > 0.0 && penalty < 1.0))
    throw std::invalid_argument("oracle penalty must lie in (0, 1)");
}

double SyntheticLongOracle::score_window(std::span<const LatentChunk> window,
                                         const PromptEmbedding&) const {
  if (window.empty()) throw std::invalid_argument("empty reward window");
  double sum = 0.0;
  long pairs = 0;
  const LatentChunk* prev_chunk = nullptr;
  for (const auto& chunk : window) {
    for (Eigen::Index f = 0; f < chunk.frame_count(); ++f) {
      if (f > 0) {
        sum += (chunk.frames.row(f) - chunk.frames.row(f - 1)).squaredNorm();
        ++pairs;
      } else if (prev_chunk) {
        sum += (chunk.frames.row(0) - prev_chunk->frames.row(prev_chunk->frame_count() - 1))
                   .squaredNorm();
        ++pairs;
      }
    }
    prev_chunk = &chunk;
  }
  const double dim = static_cast<double>(window.front().dim());
  const double msd = pairs > 0 ? sum / (static_cast<double>(pairs) * dim) : 0.0;
  double score = std::exp(-msd);
  const auto first_seg = script_.segment_index(window.front().chunk_index);
  const auto last_seg = script_.segment_index(window.back().chunk_index);
  if (first_seg != last_seg) score *= penalty_;
  return score;
}

std::shared_ptr<const ShortRewardModel> synthetic_short_oracle(const SceneScript& script) {
  return std::make_shared<SyntheticShortOracle>(script);
}

std::shared_ptr<const LongRewardModel> synthetic_long_oracle(const SceneScript& script,
                                                             double penalty) {
  return std::make_shared<SyntheticLongOracle>(script, penalty);
}

}  // namespace stream_t1
