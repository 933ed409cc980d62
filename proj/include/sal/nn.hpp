#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sal/rng.hpp"
#include "sal/util.hpp"

namespace sal::nn {

using Mat = Eigen::MatrixXd;  // rows = samples, columns = features

enum class Mode { Train, Eval };

// A named tensor with its gradient accumulator.  `trainable` is false for
// stateful buffers (batch-norm running statistics) that optimizers skip but
// checkpoints and digests still cover.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  bool trainable = true;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Values a layer's forward pass stows for the matching backward pass.
struct LayerCache {
  Mode mode = Mode::Eval;
  std::vector<Mat> mats;
};

struct Tape {
  std::vector<LayerCache> layers;
};

class Layer {
 public:
  virtual ~Layer() = default;
  // Train mode may update internal statistics; eval mode never mutates state.
  virtual Mat forward(const Mat& x, Mode mode, LayerCache* cache) = 0;
  // Maps upstream dL/dy to dL/dx; accumulates parameter gradients when
  // `accumulate_params` is set.
  virtual Mat backward(const LayerCache& cache, const Mat& dy, bool accumulate_params) = 0;
  virtual std::vector<Param*> params() { return {}; }
};

class Affine : public Layer {
 public:
  Affine(int in, int out, const std::string& name, Rng& rng) {
    require(in > 0 && out > 0, "affine layer '", name, "' with non-positive size");
    w_.name = name + "/W";
    b_.name = name + "/b";
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    w_.value.resize(in, out);
    for (Eigen::Index i = 0; i < w_.value.rows(); ++i)
      for (Eigen::Index j = 0; j < w_.value.cols(); ++j) w_.value(i, j) = u(rng);
    b_.value = Mat::Zero(1, out);
    w_.zero_grad();
    b_.zero_grad();
  }

  Mat forward(const Mat& x, Mode mode, LayerCache* cache) override {
    require(x.cols() == w_.value.rows(), "affine '", w_.name, "': input has ", x.cols(),
            " features, expected ", w_.value.rows());
    if (cache) {
      cache->mode = mode;
      cache->mats = {x};
    }
    Mat y = x * w_.value;
    y.rowwise() += b_.value.row(0);
    return y;
  }

  Mat backward(const LayerCache& cache, const Mat& dy, bool accumulate_params) override {
    const Mat& x = cache.mats[0];
    if (accumulate_params) {
      w_.grad.noalias() += x.transpose() * dy;
      b_.grad.row(0) += dy.colwise().sum();
    }
    return dy * w_.value.transpose();
  }

  std::vector<Param*> params() override { return {&w_, &b_}; }

 private:
  Param w_, b_;
};

// Batch normalization over the batch dimension with per-feature affine
// output.  Train mode normalizes by biased batch statistics and refreshes the
// running statistics; eval mode normalizes by the running statistics only.
class BatchNorm : public Layer {
 public:
  BatchNorm(int dim, const std::string& name, double momentum = 0.1, double eps = 1e-5)
      : momentum_(momentum), eps_(eps) {
    gamma_.name = name + "/gamma";
    beta_.name = name + "/beta";
    run_mean_.name = name + "/run_mean";
    run_var_.name = name + "/run_var";
    gamma_.value = Mat::Ones(1, dim);
    beta_.value = Mat::Zero(1, dim);
    run_mean_.value = Mat::Zero(1, dim);
    run_var_.value = Mat::Ones(1, dim);
    run_mean_.trainable = false;
    run_var_.trainable = false;
    for (Param* p : params()) p->zero_grad();
  }

  Mat forward(const Mat& x, Mode mode, LayerCache* cache) override {
    require(x.cols() == gamma_.value.cols(), "batch-norm feature mismatch: ", x.cols(), " vs ",
            gamma_.value.cols());
    Mat mean, var;
    if (mode == Mode::Train) {
      require(x.rows() >= 2, "batch-norm train forward needs at least 2 rows, got ", x.rows());
      mean = x.colwise().mean();
      Mat centered = x.rowwise() - mean.row(0);
      var = centered.array().square().colwise().sum() / static_cast<double>(x.rows());
      run_mean_.value = (1.0 - momentum_) * run_mean_.value + momentum_ * mean;
      run_var_.value = (1.0 - momentum_) * run_var_.value + momentum_ * var;
    } else {
      mean = run_mean_.value;
      var = run_var_.value;
    }
    Mat inv_std = (var.array() + eps_).sqrt().inverse();
    Mat xhat = (x.rowwise() - mean.row(0)).array().rowwise() * inv_std.row(0).array();
    Mat y = (xhat.array().rowwise() * gamma_.value.row(0).array()).matrix();
    y.rowwise() += beta_.value.row(0);
    if (cache) {
      cache->mode = mode;
      cache->mats = {xhat, inv_std};
    }
    return y;
  }

  Mat backward(const LayerCache& cache, const Mat& dy, bool accumulate_params) override {
    const Mat& xhat = cache.mats[0];
    const Mat& inv_std = cache.mats[1];
    if (accumulate_params) {
      gamma_.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
      beta_.grad.row(0) += dy.colwise().sum();
    }
    Mat dxhat = dy.array().rowwise() * gamma_.value.row(0).array();
    if (cache.mode == Mode::Eval) {
      // Running statistics are constants: the map is elementwise affine.
      return (dxhat.array().rowwise() * inv_std.row(0).array()).matrix();
    }
    const double n = static_cast<double>(dy.rows());
    Mat mean_dxhat = dxhat.colwise().sum() / n;
    Mat mean_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum().matrix() / n;
    Mat dx = dxhat;
    dx.rowwise() -= mean_dxhat.row(0);
    dx.array() -= xhat.array().rowwise() * mean_dxhat_xhat.row(0).array();
    dx.array().rowwise() *= inv_std.row(0).array();
    return dx;
  }

  std::vector<Param*> params() override { return {&gamma_, &beta_, &run_mean_, &run_var_}; }

 private:
  Param gamma_, beta_, run_mean_, run_var_;
  double momentum_, eps_;
};

class Relu : public Layer {
 public:
  Mat forward(const Mat& x, Mode mode, LayerCache* cache) override {
    if (cache) {
      cache->mode = mode;
      cache->mats = {x};
    }
    return x.cwiseMax(0.0);
  }
  Mat backward(const LayerCache& cache, const Mat& dy, bool) override {
    return (cache.mats[0].array() > 0.0).select(dy, Mat::Zero(dy.rows(), dy.cols()));
  }
};

class LeakyRelu : public Layer {
 public:
  explicit LeakyRelu(double slope = 0.2) : slope_(slope) {}
  Mat forward(const Mat& x, Mode mode, LayerCache* cache) override {
    if (cache) {
      cache->mode = mode;
      cache->mats = {x};
    }
    return (x.array() > 0.0).select(x, slope_ * x);
  }
  Mat backward(const LayerCache& cache, const Mat& dy, bool) override {
    return (cache.mats[0].array() > 0.0).select(dy, slope_ * dy);
  }

 private:
  double slope_;
};

class Tanh : public Layer {
 public:
  Mat forward(const Mat& x, Mode mode, LayerCache* cache) override {
    Mat y = x.array().tanh().matrix();
    if (cache) {
      cache->mode = mode;
      cache->mats = {y};
    }
    return y;
  }
  Mat backward(const LayerCache& cache, const Mat& dy, bool) override {
    const Mat& y = cache.mats[0];
    return (dy.array() * (1.0 - y.array().square())).matrix();
  }
};

// A plain layer stack.  Forward with a Tape records per-layer caches that the
// matching backward consumes in reverse.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const Mlp&) = delete;
  Mlp& operator=(const Mlp&) = delete;
  Mlp(Mlp&&) = default;
  Mlp& operator=(Mlp&&) = default;

  Mlp& add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }

  bool empty() const { return layers_.empty(); }

  Mat forward(const Mat& x, Mode mode, Tape* tape = nullptr) {
    require(!layers_.empty(), "forward through empty network");
    if (tape) tape->layers.assign(layers_.size(), LayerCache{});
    Mat h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      h = layers_[i]->forward(h, mode, tape ? &tape->layers[i] : nullptr);
    return h;
  }

  // Eval-mode forward; never mutates layer state.
  Mat infer(const Mat& x) { return forward(x, Mode::Eval, nullptr); }

  // Returns dL/d(input).  Parameter gradients accumulate unless disabled
  // (disabled = the stack is frozen and only input gradients are wanted).
  Mat backward(const Tape& tape, Mat dy, bool accumulate_params = true) {
    require(tape.layers.size() == layers_.size(), "tape/layer count mismatch");
    for (std::size_t i = layers_.size(); i-- > 0;)
      dy = layers_[i]->backward(tape.layers[i], dy, accumulate_params);
    return dy;
  }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    for (auto& l : layers_)
      for (Param* p : l->params()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (Param* p : params()) p->zero_grad();
  }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Column-wise concatenation of two row-aligned batches.
inline Mat hstack(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows(), "hstack row mismatch: ", a.rows(), " vs ", b.rows());
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Row-wise concatenation of two column-aligned batches.
inline Mat vstack(const Mat& a, const Mat& b) {
  require(a.cols() == b.cols(), "vstack column mismatch: ", a.cols(), " vs ", b.cols());
  Mat out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

// Row-major standard-normal draw (draw order is part of the format).
inline Mat standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat z(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = g(rng);
  return z;
}

// Order-sensitive digest over every parameter and stateful buffer in the
// stack; detects any unintended update.
inline std::uint64_t digest(Mlp& net) {
  std::uint64_t h = fnv1a64(nullptr, 0);
  for (Param* p : net.params()) {
    h = fnv1a64(p->name.data(), p->name.size(), h);
    for (Eigen::Index i = 0; i < p->value.rows(); ++i)
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double v = p->value(i, j);
        h = fnv1a64(&v, sizeof(v), h);
      }
  }
  return h;
}

// --- stack builders -------------------------------------------------------

// Hidden layers: affine + batch-norm + relu.  Output layer: affine + tanh.
inline Mlp make_feature_stack(int in, const std::vector<int>& widths, const std::string& name,
                              Rng& rng) {
  require(!widths.empty(), "feature stack '", name, "' needs at least one width");
  Mlp net;
  int prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    std::ostringstream ln;
    ln << name << "/" << i;
    net.add(std::make_unique<Affine>(prev, widths[i], ln.str(), rng));
    if (i + 1 < widths.size()) {
      net.add(std::make_unique<BatchNorm>(widths[i], ln.str()));
      net.add(std::make_unique<Relu>());
    } else {
      net.add(std::make_unique<Tanh>());
    }
    prev = widths[i];
  }
  return net;
}

// Hidden layers: affine + batch-norm + leaky-relu; final affine produces one
// score column.  Probabilities are sigmoid(score), applied by the losses.
inline Mlp make_disc_stack(int in, const std::vector<int>& hidden, const std::string& name,
                           Rng& rng) {
  Mlp net;
  int prev = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    std::ostringstream ln;
    ln << name << "/" << i;
    net.add(std::make_unique<Affine>(prev, hidden[i], ln.str(), rng));
    net.add(std::make_unique<BatchNorm>(hidden[i], ln.str()));
    net.add(std::make_unique<LeakyRelu>(0.2));
    prev = hidden[i];
  }
  net.add(std::make_unique<Affine>(prev, 1, name + "/score", rng));
  return net;
}

// Single affine classifier head.
inline Mlp make_affine_head(int in, int out, const std::string& name, Rng& rng) {
  Mlp net;
  net.add(std::make_unique<Affine>(in, out, name, rng));
  return net;
}

}  // namespace sal::nn
