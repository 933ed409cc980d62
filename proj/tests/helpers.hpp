#pragma once

// Shared builders for tests: tiny datasets, tiny model configurations, and a
// finite-difference gradient-check harness.

#include <functional>
#include <string>
#include <vector>

#include "sal/sal.hpp"

namespace testutil {

using sal::nn::Mat;

// A small synthetic benchmark (few categories, low dimension) for fast
// trainer-level tests.
inline sal::SynthBenchConfig tiny_bench_config(std::uint64_t seed = 7) {
  sal::SynthBenchConfig bc;
  bc.num_seen_categories = 8;
  bc.num_unseen_categories = 4;
  bc.samples_per_category_min = 4;
  bc.samples_per_category_max = 6;
  bc.schema = "a|b|c|grp:x,y,z";
  bc.raw_visual_dim = 12;
  bc.intra_class_noise_scale = 0.3;
  bc.inter_class_similarity = 0.2;
  bc.seed = seed;
  return bc;
}

// Train config with reduced widths so trainer tests run in milliseconds.
inline sal::TrainConfig tiny_train_config(std::uint64_t seed = 11) {
  sal::TrainConfig tc;
  tc.variant = sal::Variant::Sal;
  tc.epochs = 2;
  tc.pretrain_epochs = 2;
  tc.batch_size = 16;
  tc.unseen_per_batch = 8;
  tc.attr_widths = {16, 24};
  tc.gen_widths = {16, 24};
  tc.enc_widths = {16, 8};
  tc.disc_hidden = {12};
  tc.backbone_hidden = {16};
  tc.z_dim = 4;
  tc.seed = seed;
  return tc;
}

// Dim-4 surrogate model for gradient checks: every stack is tiny but keeps
// the full layer pattern (affine + batch-norm + activation).
inline sal::ModelConfig surrogate_model_config() {
  sal::ModelConfig mc;
  mc.attr_dim = 4;
  mc.visual_dim = 4;
  mc.num_categories = 3;
  mc.backbone = sal::BackboneKind::ToyMlp;
  mc.backbone_hidden = {5};
  mc.attr_widths = {5, 4};
  mc.gen_widths = {5, 4};
  mc.enc_widths = {5, 4};
  mc.disc_hidden = {5};
  mc.z_dim = 2;
  return mc;
}

// Central finite differences over every trainable parameter entry.  `loss`
// must re-evaluate the objective without touching gradients; `grads` holds
// the analytic gradients captured beforehand.  Returns the worst relative
// error, where the error floor keeps near-zero gradients from blowing up the
// ratio.
struct GradCheckResult {
  double worst_rel = 0.0;
  std::string worst_param;
  int checked = 0;
};

inline GradCheckResult finite_difference_check(const std::vector<sal::nn::Param*>& params,
                                               const std::function<double()>& loss,
                                               double step = 1e-5) {
  GradCheckResult res;
  for (sal::nn::Param* p : params) {
    if (!p->trainable) continue;
    for (Eigen::Index i = 0; i < p->value.rows(); ++i)
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double saved = p->value(i, j);
        p->value(i, j) = saved + step;
        const double up = loss();
        p->value(i, j) = saved - step;
        const double down = loss();
        p->value(i, j) = saved;
        const double fd = (up - down) / (2.0 * step);
        const double an = p->grad(i, j);
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-5});
        ++res.checked;
        if (rel > res.worst_rel) {
          res.worst_rel = rel;
          res.worst_param = p->name;
        }
      }
  }
  return res;
}

// Finite differences w.r.t. a loss input matrix.
inline GradCheckResult finite_difference_input_check(Mat& x, const Mat& analytic,
                                                     const std::function<double()>& loss,
                                                     double step = 1e-5) {
  GradCheckResult res;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + step;
      const double up = loss();
      x(i, j) = saved - step;
      const double down = loss();
      x(i, j) = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = analytic(i, j);
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-5});
      ++res.checked;
      if (rel > res.worst_rel) res.worst_rel = rel;
    }
  return res;
}

// Random labeled batch for loss tests.
struct LossBatch {
  Mat raw_visual;
  Mat attrs;
  std::vector<int> labels;
};

inline LossBatch random_loss_batch(int rows, int visual_dim, int attr_dim, int num_categories,
                                   std::uint64_t seed) {
  LossBatch b;
  sal::Rng rng = sal::make_rng(seed, "loss-batch");
  b.raw_visual = sal::nn::standard_normal(rows, visual_dim, rng);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> cat(0, num_categories - 1);
  b.attrs.resize(rows, attr_dim);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < attr_dim; ++j) b.attrs(i, j) = coin(rng);
    b.labels.push_back(cat(rng));
  }
  return b;
}

}  // namespace testutil
