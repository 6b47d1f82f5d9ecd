#pragma once

#include <memory>
#include <span>

#include "stream_t1/latent.hpp"

namespace stream_t1 {

/// Per-chunk scores. `s_final` is the position-weighted fusion of the other two.
struct RewardScores {
  double s_short = 0.0;
  double s_long = 0.0;
  double s_final = 0.0;
  int chunk_index = 0;

  bool operator==(const RewardScores&) const = default;
};

struct FusionParams {
  double tau = 0.5;
  int total_chunks = 40;

  void validate() const;
};

/// Frame-level quality model. Implementations must be deterministic, return
/// finite values, and hold no mutable state (they are shared across
/// candidates). Scores are expected on the same scale as the long model.
class ShortRewardModel {
 public:
  virtual ~ShortRewardModel() = default;
  virtual double score_frame(const LatentFrame& frame, const PromptEmbedding& prompt) const = 0;
};

/// Window-level temporal-coherence model. `window` holds 1..reward_window
/// chunks in generation order.
class LongRewardModel {
 public:
  virtual ~LongRewardModel() = default;
  virtual double score_window(std::span<const LatentChunk> window,
                              const PromptEmbedding& prompt) const = 0;
};

/// Mean frame score of `chunk`.
double short_score(const LatentChunk& chunk, const PromptEmbedding& prompt,
                   const ShortRewardModel& model);

/// Long model applied to the trailing min(window, history.size()) chunks.
double long_score(std::span<const LatentChunk> history, int window,
                  const PromptEmbedding& prompt, const LongRewardModel& model);

/// Short weight n/N grows linearly with the chunk position until it reaches
/// tau, then stays there.
double fuse(double s_short, double s_long, int chunk_index, const FusionParams& params);

/// Weight given to the short score at `chunk_index`.
double short_weight(int chunk_index, const FusionParams& params);

/// 1 / (1 + ||frame - attractor||), with the attractor of the segment whose
/// prompt matches. Range (0, 1].
class SyntheticShortOracle final : public ShortRewardModel {
 public:
  explicit SyntheticShortOracle(SceneScript script) : script_(std::move(script)) {}
  double score_frame(const LatentFrame& frame, const PromptEmbedding& prompt) const override;

 private:
  SceneScript script_;
};

/// exp(-mean squared frame-to-frame step) over the concatenated window,
/// times `penalty` when the window spans more than one scene segment.
/// The step is averaged over consecutive frame pairs and latent dimensions.
class SyntheticLongOracle final : public LongRewardModel {
 public:
  SyntheticLongOracle(SceneScript script, double penalty);
  double score_window(std::span<const LatentChunk> window,
                      const PromptEmbedding& prompt) const override;

  double penalty() const { return penalty_; }

 private:
  SceneScript script_;
  double penalty_;
};

std::shared_ptr<const ShortRewardModel> synthetic_short_oracle(const SceneScript& script);
std::shared_ptr<const LongRewardModel> synthetic_long_oracle(const SceneScript& script,
                                                             double penalty = 0.5);

}  // namespace stream_t1
