#include "rbd/network.hpp"

#include <cmath>
#include <string>

#include "rbd/error.hpp"
#include "rbd/random.hpp"

namespace rbd::nn {

void validate(const NetworkConfig& cfg) {
  if (cfg.input_dim == 0 || cfg.hidden == 0 || cfg.output_dim == 0) {
    throw Error(Errc::invalid_argument, "network dimensions must be positive");
  }
  if (cfg.blocks > 16) throw Error(Errc::invalid_argument, "at most 16 residual blocks are supported");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw Error(Errc::invalid_argument, "dropout must lie in [0,1)");
}

ParameterLayout::ParameterLayout(const NetworkConfig& cfg) {
  auto add = [this](std::size_t rows, std::size_t cols) {
    DenseLayout l;
    l.rows = rows;
    l.cols = cols;
    l.weight = total;
    total += rows * cols;
    l.bias = total;
    total += rows;
    layers.push_back(l);
  };
  add(cfg.hidden, cfg.input_dim);
  for (std::size_t k = 0; k < cfg.blocks; ++k) {
    add(cfg.hidden, cfg.hidden);
    add(cfg.hidden, cfg.hidden);
  }
  add(cfg.output_dim, cfg.hidden);
}

NetworkParameters::NetworkParameters(const NetworkConfig& cfg)
    : config_((validate(cfg), cfg)), layout_(cfg), values_(layout_.total, 0.0) {}

double NetworkParameters::weight_sq_norm() const {
  double s = 0.0;
  for (const DenseLayout& l : layout_.layers) {
    for (std::size_t i = 0; i < l.rows * l.cols; ++i) {
      const double w = values_[l.weight + i];
      s += w * w;
    }
  }
  return s;
}

NetworkParameters init_network(const NetworkConfig& cfg, std::uint64_t seed) {
  NetworkParameters p(cfg);
  Xoshiro256pp rng(seed);
  std::span<double> v = p.values();
  for (const DenseLayout& l : p.layout().layers) {
    const double scale = std::sqrt(2.0 / static_cast<double>(l.cols));
    for (std::size_t i = 0; i < l.rows * l.cols; ++i) v[l.weight + i] = scale * rng.normal();
  }
  return p;
}

std::vector<double> apply_dropout_mask(std::span<const double> x, std::span<const double> keep, double rate) {
  if (x.size() != keep.size()) throw Error(Errc::shape_mismatch, "dropout mask size mismatch");
  std::vector<double> out(x.size());
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = keep[i] != 0.0 ? x[i] * scale : 0.0;
  return out;
}

std::vector<double> dropout(std::span<const double> x, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(Errc::invalid_argument, "dropout must lie in [0,1)");
  if (mode == Mode::eval || rate == 0.0) return {x.begin(), x.end()};
  Xoshiro256pp rng(seed);
  std::vector<double> keep(x.size());
  for (double& k : keep) k = rng.uniform() >= rate ? 1.0 : 0.0;
  return apply_dropout_mask(x, keep, rate);
}

Vector residual_block_forward(const Vector& x, const Eigen::Ref<const RowMatrix>& w1, const Vector& b1,
                              const Eigen::Ref<const RowMatrix>& w2, const Vector& b2, const Vector* keep_scale) {
  const Eigen::Index n = x.size();
  if (w1.rows() != n || w1.cols() != n || w2.rows() != n || w2.cols() != n || b1.size() != n || b2.size() != n ||
      (keep_scale != nullptr && keep_scale->size() != n)) {
    throw Error(Errc::shape_mismatch, "residual block shape mismatch");
  }
  Vector act = (w1 * x + b1).cwiseMax(0.0);
  if (keep_scale != nullptr) act = act.cwiseProduct(*keep_scale);
  return x + w2 * act + b2;
}

namespace {

Matrix affine(const NetworkParameters& p, const DenseLayout& l, const Matrix& x) {
  Matrix out = p.weight(l) * x;
  out.colwise() += p.bias(l);
  return out;
}

Matrix draw_keep_scale(Xoshiro256pp& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  Matrix keep(rows, cols);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) keep(r, c) = rng.uniform() >= rate ? scale : 0.0;
  }
  return keep;
}

}  // namespace

Matrix forward(const NetworkParameters& params, const Matrix& input, Mode mode, std::uint64_t dropout_seed,
               ForwardCache* cache) {
  const NetworkConfig& cfg = params.config();
  const ParameterLayout& layout = params.layout();
  if (input.rows() != static_cast<Eigen::Index>(cfg.input_dim)) {
    throw Error(Errc::shape_mismatch, "input has " + std::to_string(input.rows()) + " features, network expects " +
                                          std::to_string(cfg.input_dim));
  }
  const bool use_dropout = mode == Mode::train && cfg.dropout > 0.0;
  Xoshiro256pp rng(dropout_seed);

  Matrix pre = affine(params, layout.input(), input);
  Matrix h = pre.cwiseMax(0.0);
  if (cache != nullptr) {
    cache->params = &params;
    cache->params_version = params.version();
    cache->input = input;
    cache->input_pre = pre;
    cache->hidden.assign(1, h);
    cache->block_pre.clear();
    cache->block_act.clear();
    cache->keep_scale.clear();
  }
  for (std::size_t k = 0; k < cfg.blocks; ++k) {
    Matrix a = affine(params, layout.block_first(k), h);
    Matrix act = a.cwiseMax(0.0);
    Matrix keep;
    if (use_dropout) {
      keep = draw_keep_scale(rng, act.rows(), act.cols(), cfg.dropout);
      act = act.cwiseProduct(keep);
    }
    Matrix next = affine(params, layout.block_second(k), act);
    if (cfg.architecture == Architecture::residual) next += h;
    if (cache != nullptr) {
      cache->block_pre.push_back(std::move(a));
      cache->block_act.push_back(std::move(act));
      cache->keep_scale.push_back(std::move(keep));
      cache->hidden.push_back(next);
    }
    h = std::move(next);
  }
  Matrix out = affine(params, layout.output(), h);
  if (cache != nullptr) cache->output = out;
  return out;
}

Vector network_forward(const NetworkParameters& params, const Vector& input, Mode mode, std::uint64_t dropout_seed) {
  Matrix x = input;
  return forward(params, x, mode, dropout_seed).col(0);
}

double loss_mse(const Matrix& pred, const Matrix& target, const Matrix& mask) {
  if (pred.cols() == 0) throw Error(Errc::invalid_argument, "empty batch");
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || mask.rows() != pred.rows() ||
      mask.cols() != pred.cols()) {
    throw Error(Errc::shape_mismatch, "loss operand shapes differ");
  }
  double total = 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      if (mask(r, c) == 0.0) continue;
      const double d = pred(r, c) - target(r, c);
      s += d * d;
    }
    total += s;
  }
  return total / static_cast<double>(pred.cols());
}

double regularized_loss(double loss, const NetworkParameters& params, double l2) {
  if (!(l2 >= 0.0)) throw Error(Errc::invalid_argument, "regularization coefficient must be nonnegative");
  return loss + l2 * params.weight_sq_norm();
}

namespace {

void accumulate_dense(const Matrix& upstream, const Matrix& layer_input, const DenseLayout& l,
                      ParamBuffer& grads) {
  MatrixMut gw(grads.data() + l.weight, Eigen::Index(l.rows), Eigen::Index(l.cols));
  VectorMut gb(grads.data() + l.bias, Eigen::Index(l.rows));
  gw.noalias() += upstream * layer_input.transpose();
  gb += upstream.rowwise().sum();
}

}  // namespace

ParamBuffer backward(const NetworkParameters& params, const ForwardCache& cache, const Matrix& target,
                             const Matrix& mask, double l2) {
  if (cache.params != &params || cache.params_version != params.version()) {
    throw Error(Errc::stale_cache, "forward cache does not match the current parameters");
  }
  const Matrix& out = cache.output;
  if (target.rows() != out.rows() || target.cols() != out.cols() || mask.rows() != out.rows() ||
      mask.cols() != out.cols()) {
    throw Error(Errc::shape_mismatch, "target shape does not match the cached output");
  }
  if (out.cols() == 0) throw Error(Errc::invalid_argument, "empty batch");

  const NetworkConfig& cfg = params.config();
  const ParameterLayout& layout = params.layout();
  ParamBuffer grads(layout.total, 0.0);

  const double scale = 2.0 / static_cast<double>(out.cols());
  Matrix g = (out - target).cwiseProduct(mask) * scale;

  accumulate_dense(g, cache.hidden.back(), layout.output(), grads);
  Matrix dh = params.weight(layout.output()).transpose() * g;

  for (std::size_t k = cfg.blocks; k-- > 0;) {
    const DenseLayout& first = layout.block_first(k);
    const DenseLayout& second = layout.block_second(k);
    accumulate_dense(dh, cache.block_act[k], second, grads);
    Matrix da = params.weight(second).transpose() * dh;
    if (cache.keep_scale[k].size() != 0) da = da.cwiseProduct(cache.keep_scale[k]);
    da = (cache.block_pre[k].array() > 0.0).select(da, 0.0);
    accumulate_dense(da, cache.hidden[k], first, grads);
    Matrix prev = params.weight(first).transpose() * da;
    if (cfg.architecture == Architecture::residual) prev += dh;
    dh = std::move(prev);
  }

  Matrix dz = (cache.input_pre.array() > 0.0).select(dh, 0.0);
  accumulate_dense(dz, cache.input, layout.input(), grads);

  if (l2 > 0.0) {
    std::span<const double> v = params.values();
    for (const DenseLayout& l : layout.layers) {
      for (std::size_t i = l.weight; i < l.weight + l.rows * l.cols; ++i) grads[i] += 2.0 * l2 * v[i];
    }
  }
  return grads;
}

void Adam::step(std::span<double> params, std::span<const double> grads, std::uint64_t t, double lr) {
  if (t < 1) throw Error(Errc::invalid_argument, "Adam step index starts at 1");
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error(Errc::shape_mismatch, "Adam state size mismatch");
  }
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
  }
}

void Adam::step(NetworkParameters& params, std::span<const double> grads, std::uint64_t t, double lr) {
  step(params.values(), grads, t, lr);
  params.bump_version();
}

double lr_schedule(double epoch, double lr0, double decay, double power) {
  if (!(epoch >= 0.0)) throw Error(Errc::invalid_argument, "epoch must be nonnegative");
  return lr0 * std::pow(1.0 + decay * epoch, -power);
}

Matrix target_mask(std::span<const SampleRecord> records) {
  Matrix m(static_cast<Eigen::Index>(kTargetDim), static_cast<Eigen::Index>(records.size()));
  for (std::size_t c = 0; c < records.size(); ++c) {
    for (std::size_t f = 0; f < kTargetDim; ++f) {
      m(Eigen::Index(f), Eigen::Index(c)) = records[c].active(f / kStateFeatures) ? 1.0 : 0.0;
    }
  }
  return m;
}

}  // namespace rbd::nn
