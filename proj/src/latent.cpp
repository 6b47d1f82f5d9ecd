#include "stream_t1/latent.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stream_t1 {

SceneScript::SceneScript(std::vector<SceneSegment> segments, int total_chunks)
    : segments_(std::move(segments)), total_chunks_(total_chunks) {
  if (segments_.empty()) throw std::invalid_argument("scene script needs at least one segment");
  if (total_chunks_ < 1) throw std::invalid_argument("scene script total_chunks must be >= 1");
  if (segments_.front().start_chunk != 0)
    throw std::invalid_argument("first scene segment must start at chunk 0");
  const auto dim = segments_.front().attractor.size();
  if (dim < 1) throw std::invalid_argument("scene attractor must be non-empty");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    if (i > 0 && seg.start_chunk <= segments_[i - 1].start_chunk)
      throw std::invalid_argument("scene segment starts must be strictly increasing");
    if (seg.attractor.size() != dim || seg.prompt.values.size() != dim)
      throw std::invalid_argument("scene segment dimension mismatch");
    if (!seg.attractor.allFinite() || !seg.prompt.values.allFinite())
      throw std::invalid_argument("scene segment values must be finite");
  }
}

std::size_t SceneScript::segment_index(int chunk_index) const {
  if (chunk_index < 0) throw std::out_of_range("negative chunk index");
  auto it = std::upper_bound(segments_.begin(), segments_.end(), chunk_index,
                             [](int n, const SceneSegment& s) { return n < s.start_chunk; });
  return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

std::size_t SceneScript::segment_for_prompt(const PromptEmbedding& prompt) const {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& p = segments_[i].prompt.values;
    if (p.size() != prompt.values.size()) continue;
    const double d = (p - prompt.values).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

SceneScript SceneScript::default_script(Eigen::Index dim, int total_chunks) {
  if (dim < 3) throw std::invalid_argument("default scene script needs dim >= 3");
  std::vector<SceneSegment> segs;
  const int starts[] = {0, 13, 27};
  for (int axis = 0; axis < 3; ++axis) {
    if (starts[axis] >= total_chunks) break;
    Vector a = Vector::Zero(dim);
    a[axis] = 1.0;
    segs.push_back({starts[axis], a, PromptEmbedding{a}});
  }
  return SceneScript(std::move(segs), total_chunks);
}

namespace {

Vector read_vector(std::istringstream& in, Eigen::Index dim, int line_no) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(in >> v[i]))
      throw std::invalid_argument("scene line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(dim) + " values");
  }
  return v;
}

}  // namespace

SceneScript SceneScript::parse(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  int total = -1;
  Eigen::Index dim = -1;
  std::vector<SceneSegment> segs;
  while (std::getline(lines, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream in(line);
    std::string word;
    if (!(in >> word)) continue;
    auto fail = [&](const std::string& what) {
      throw std::invalid_argument("scene line " + std::to_string(line_no) + ": " + what);
    };
    if (word == "total_chunks") {
      if (!(in >> total)) fail("total_chunks needs an integer");
    } else if (word == "dim") {
      long long d = 0;
      if (!(in >> d) || d < 1) fail("dim needs a positive integer");
      dim = static_cast<Eigen::Index>(d);
    } else if (word == "segment") {
      if (dim < 1) fail("dim must be declared before segments");
      SceneSegment seg;
      std::string tag;
      if (!(in >> seg.start_chunk)) fail("segment needs a start chunk");
      if (!(in >> tag) || tag != "attractor") fail("expected 'attractor'");
      seg.attractor = read_vector(in, dim, line_no);
      if (!(in >> tag) || tag != "prompt") fail("expected 'prompt'");
      seg.prompt.values = read_vector(in, dim, line_no);
      segs.push_back(std::move(seg));
    } else {
      fail("unknown directive '" + word + "'");
    }
  }
  if (total < 1) throw std::invalid_argument("scene script missing total_chunks");
  return SceneScript(std::move(segs), total);
}

SceneScript SceneScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string SceneScript::serialize() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "total_chunks " << total_chunks_ << "\n";
  out << "dim " << dim() << "\n";
  for (const auto& s : segments_) {
    out << "segment " << s.start_chunk << " attractor";
    for (double v : s.attractor) out << ' ' << v;
    out << " prompt";
    for (double v : s.prompt.values) out << ' ' << v;
    out << "\n";
  }
  return out.str();
}

SceneScript SceneScript::with_total_chunks(int total_chunks) const {
  std::vector<SceneSegment> segs;
  for (const auto& s : segments_)
    if (s.start_chunk < total_chunks) segs.push_back(s);
  return SceneScript(std::move(segs), total_chunks);
}

}  // namespace stream_t1
