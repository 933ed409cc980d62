#pragma once

#include <cstdint>
#include <vector>

#include "sal/nn.hpp"
#include "sal/util.hpp"

namespace sal {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed set of trainable parameters.  The bound Param objects
// must outlive the optimizer; checkpoint loads overwrite values in place so
// bindings stay valid.
class Adam {
 public:
  Adam() = default;

  Adam(std::vector<nn::Param*> params, AdamConfig cfg) : cfg_(cfg) {
    for (nn::Param* p : params) {
      if (!p->trainable) continue;
      params_.push_back(p);
      m_.push_back(nn::Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(nn::Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      nn::Param* p = params_[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p->grad;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p->grad.array().square().matrix();
      p->value.array() -=
          cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
    }
  }

  void zero_grad() {
    for (nn::Param* p : params_) p->zero_grad();
  }

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps_taken() const { return t_; }
  std::size_t num_params() const { return params_.size(); }

  // Serialization access (checkpoint module).
  const nn::Param* param(std::size_t i) const { return params_[i]; }
  nn::Mat& first_moment(std::size_t i) { return m_[i]; }
  nn::Mat& second_moment(std::size_t i) { return v_[i]; }
  void set_steps_taken(std::int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::vector<nn::Param*> params_;
  std::vector<nn::Mat> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace sal
