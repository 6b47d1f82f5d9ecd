#include "stream_t1/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stream_t1 {

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  if (sigmas_.empty()) throw std::invalid_argument("noise schedule is empty");
  if (sigmas_.back() != 0.0) throw std::invalid_argument("noise schedule must end at 0");
  for (std::size_t i = 0; i < sigmas_.size(); ++i) {
    if (!(sigmas_[i] >= 0.0) || !std::isfinite(sigmas_[i]))
      throw std::invalid_argument("noise levels must be finite and non-negative");
    if (i > 0 && !(sigmas_[i] < sigmas_[i - 1]))
      throw std::invalid_argument("noise schedule must be strictly decreasing");
  }
  // Stored from t_0 upward.
  std::reverse(sigmas_.begin(), sigmas_.end());
}

double NoiseSchedule::sigma(int level_index) const {
  if (level_index < 0 || level_index >= steps())
    throw std::out_of_range("noise level " + std::to_string(level_index) + " out of range");
  return sigmas_[static_cast<std::size_t>(level_index)];
}

double NoiseSchedule::input_sigma(int level_index) const {
  if (level_index < 1 || level_index > steps())
    throw std::out_of_range("denoising level " + std::to_string(level_index) + " out of range");
  return level_index == steps() ? 1.0 : sigma(level_index);
}

namespace {

Matrix gaussian_matrix(RngStream& rng, Eigen::Index dim) {
  return sample_gaussian(rng, dim, dim) / std::sqrt(static_cast<double>(dim));
}

Matrix clamp_spectral_norm(Matrix m, double max_norm) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const double top = svd.singularValues()(0);
  if (top > max_norm) m *= max_norm / top;
  return m;
}

Matrix random_orthogonal(RngStream& rng, Eigen::Index dim) {
  Eigen::HouseholderQR<Matrix> qr(sample_gaussian(rng, dim, dim));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  return q;
}

}  // namespace

DenoiserWeights DenoiserWeights::generate(std::uint64_t seed, Eigen::Index dim) {
  if (dim < 1) throw std::invalid_argument("denoiser dimension must be >= 1");
  RngStream rng(mix64(seed ^ 0x5eed0fde0015eULL));
  DenoiserWeights w;
  w.query = clamp_spectral_norm(gaussian_matrix(rng, dim), kMaxSpectralNorm);
  w.key = clamp_spectral_norm(gaussian_matrix(rng, dim), kMaxSpectralNorm);
  w.value = random_orthogonal(rng, dim);
  w.output = w.value.transpose();
  w.prompt_mix = clamp_spectral_norm(gaussian_matrix(rng, dim), 0.5);
  return w;
}

ToyGenerator::ToyGenerator(DenoiserWeights weights, NoiseSchedule schedule,
                           DenoiserParams params)
    : weights_(std::move(weights)), schedule_(std::move(schedule)), params_(params) {
  if (!(params_.attractor_pull >= 0.0 && params_.attractor_pull <= 1.0))
    throw std::invalid_argument("attractor_pull must lie in [0, 1]");
  if (!(params_.pull_floor >= 0.0 && params_.pull_floor <= 1.0))
    throw std::invalid_argument("pull_floor must lie in [0, 1]");
  if (!(params_.renoise_eta >= 0.0 && params_.renoise_eta <= 1.0))
    throw std::invalid_argument("renoise_eta must lie in [0, 1]");
  if (!(params_.content_variance > 0.0))
    throw std::invalid_argument("content_variance must be positive");
}

Matrix ToyGenerator::predict_clean(const Matrix& x_t, int level_index,
                                   const AttentionContext& context,
                                   const Conditioning& cond) const {
  const Eigen::Index dim = weights_.dim();
  if (x_t.cols() != dim || cond.attractor.size() != dim || cond.prompt.values.size() != dim)
    throw std::invalid_argument("predict_clean: dimension mismatch");
  if (context.rows() > 0 && (context.keys.cols() != dim || context.values.cols() != dim))
    throw std::invalid_argument("predict_clean: context dimension mismatch");

  const double v = params_.content_variance;
  const double retain = v / (v + std::pow(schedule_.input_sigma(level_index), 2));
  const Eigen::RowVectorXd target = cond.attractor.transpose();

  Matrix ctx = Matrix::Zero(x_t.rows(), dim);
  if (context.rows() > 0) {
    const Eigen::RowVectorXd prompt_shift = (weights_.prompt_mix * cond.prompt.values).transpose();
    const Matrix queries = (x_t.rowwise() + prompt_shift) * weights_.query;
    Matrix logits = queries * context.keys.transpose();
    logits *= params_.attention_sharpness / std::sqrt(static_cast<double>(dim));
    if (context.sink_rows > 0) logits.leftCols(context.sink_rows).array() += params_.sink_attention_bias;
    for (Eigen::Index f = 0; f < logits.rows(); ++f) {
      auto row = logits.row(f);
      row.array() -= row.maxCoeff();
      row = row.array().exp().matrix();
      row /= row.sum();
    }
    ctx = logits * context.values * weights_.output;
  }

  Matrix out(x_t.rows(), dim);
  const double target_norm = target.norm();
  for (Eigen::Index f = 0; f < x_t.rows(); ++f) {
    const Eigen::RowVectorXd c = ctx.row(f);
    const Eigen::RowVectorXd base = c + retain * (x_t.row(f) - c);
    double agree = 0.0;
    const double denom = c.norm() * target_norm;
    if (denom > 0.0) {
      const double cosine = c.dot(target) / denom;
      agree = cosine > 0.0 ? cosine * cosine : 0.0;
    }
    const double w = params_.attractor_pull * (params_.pull_floor + (1.0 - params_.pull_floor) * agree);
    out.row(f) = base + w * (target - base);
  }
  return out;
}

Matrix renoise(const Matrix& x0_hat, const Matrix& eps, int level_index,
               const NoiseSchedule& schedule) {
  const double sigma = schedule.sigma(level_index);
  if (sigma == 0.0) return x0_hat;
  if (eps.rows() != x0_hat.rows() || eps.cols() != x0_hat.cols())
    throw std::invalid_argument("renoise: eps shape mismatch");
  return x0_hat + sigma * eps;
}

GeneratedChunk ToyGenerator::generate_chunk(const NoiseChunk& noise, const SinkCache& cache,
                                            const Conditioning& cond, RngStream& rng) const {
  if (noise.values.cols() != weights_.dim() || noise.values.rows() < 1)
    throw std::invalid_argument("generate_chunk: noise must be shaped (F, D)");
  const AttentionContext context = cache.assemble_context();
  const double reuse = std::sqrt(1.0 - params_.renoise_eta * params_.renoise_eta);

  Matrix x = noise.values;
  for (int level = schedule_.steps(); level >= 1; --level) {
    const Matrix x0_hat = predict_clean(x, level, context, cond);
    if (level == 1) {
      x = x0_hat;
      break;
    }
    Matrix eps = reuse * noise.values;
    if (params_.renoise_eta > 0.0)
      eps += params_.renoise_eta * sample_gaussian(rng, x.rows(), x.cols());
    x = renoise(x0_hat, eps, level - 1, schedule_);
  }

  LatentChunk chunk{std::move(x), noise.chunk_index};
  KVEntry kv = project(chunk);
  return {std::move(chunk), std::move(kv)};
}

KVEntry ToyGenerator::project(const LatentChunk& chunk) const {
  return {chunk.frames * weights_.key, chunk.frames * weights_.value, chunk.chunk_index};
}

}  // namespace stream_t1
