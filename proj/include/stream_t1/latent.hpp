#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stream_t1 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One latent frame: a D-dimensional row.
using LatentFrame = Vector;

/// F frames of dimension D, stored one frame per row.
struct LatentChunk {
  Matrix frames;
  int chunk_index = 0;

  Eigen::Index frame_count() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

/// Text-conditioning stand-in. Constant within one scene segment.
struct PromptEmbedding {
  Vector values;

  bool operator==(const PromptEmbedding& other) const {
    return values.size() == other.values.size() && values == other.values;
  }
};

struct SceneSegment {
  int start_chunk = 0;
  Vector attractor;
  PromptEmbedding prompt;
};

/// Piecewise scene targets. Segment `i` covers chunks
/// [segments[i].start_chunk, segments[i+1].start_chunk).
class SceneScript {
 public:
  /// Throws std::invalid_argument when segments are empty, do not start at 0,
  /// are not strictly increasing, or have inconsistent dimensions.
  SceneScript(std::vector<SceneSegment> segments, int total_chunks);

  const std::vector<SceneSegment>& segments() const { return segments_; }
  int total_chunks() const { return total_chunks_; }
  Eigen::Index dim() const { return segments_.front().attractor.size(); }

  std::size_t segment_index(int chunk_index) const;
  const SceneSegment& segment(int chunk_index) const {
    return segments_[segment_index(chunk_index)];
  }
  const Vector& attractor(int chunk_index) const { return segment(chunk_index).attractor; }
  const PromptEmbedding& prompt(int chunk_index) const { return segment(chunk_index).prompt; }

  /// Index of the segment whose prompt is closest to `prompt` (exact match
  /// for prompts taken from this script).
  std::size_t segment_for_prompt(const PromptEmbedding& prompt) const;

  /// 40 chunks, switches at 13 and 27, attractors on the first three axes.
  /// Prompts equal attractors. Segments starting at or past `total_chunks`
  /// are dropped.
  static SceneScript default_script(Eigen::Index dim, int total_chunks = 40);

  /// Line-oriented text format, see data/default_scene.txt.
  static SceneScript parse(const std::string& text);
  static SceneScript load(const std::filesystem::path& path);
  std::string serialize() const;

  /// Copy truncated or extended to `total_chunks`.
  SceneScript with_total_chunks(int total_chunks) const;

 private:
  std::vector<SceneSegment> segments_;
  int total_chunks_;
};

}  // namespace stream_t1
