// Finite-difference verification of every backward pass: the loss primitives
// and all five step-loss functions, on a small-width surrogate model that
// keeps the full layer pattern (affine + batch-norm + activation).  Central
// differences at step 1e-5; relative error must stay under 1e-4.
#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "helpers.hpp"
#include "sal/losses.hpp"
#include "sal/model.hpp"

using sal::nn::Mat;

namespace {

constexpr double kTol = 1e-4;

sal::losses::MidBatch make_batch(sal::SalModel& m, int B, int U, std::uint64_t seed) {
  testutil::LossBatch lb = testutil::random_loss_batch(B + U, m.cfg.visual_dim, m.cfg.attr_dim,
                                                       m.cfg.num_categories, seed);
  sal::losses::MidBatch b;
  b.attrs = lb.attrs.topRows(B);
  b.attrs_ext = lb.attrs;
  b.labels.assign(lb.labels.begin(), lb.labels.begin() + B);
  b.labels_ext = b.labels;
  for (int i = 0; i < U; ++i) b.labels_ext.push_back(-1);
  b.f_a = sal::extract_attribute_features(m, b.attrs);
  b.f_v = sal::extract_image_features(m, lb.raw_visual.topRows(B));
  b.f_a_ext = sal::extract_attribute_features(m, b.attrs_ext);
  return b;
}

std::vector<sal::nn::Param*> group_params(sal::SalModel& m,
                                          const std::vector<std::string>& names) {
  std::vector<sal::nn::Param*> out;
  for (auto& [name, params] : m.parameter_groups()) {
    for (const std::string& want : names) {
      if (name == want) {
        out.insert(out.end(), params.begin(), params.end());
      }
    }
  }
  REQUIRE(!out.empty());
  return out;
}

void zero_all(sal::SalModel& m) {
  for (auto& [name, params] : m.parameter_groups())
    for (sal::nn::Param* p : params) p->zero_grad();
}

}  // namespace

TEST_CASE("finite differences: loss primitives", "[gradients]") {
  sal::Rng nr = sal::make_rng(101, "noise");

  SECTION("softmax cross entropy input gradient") {
    Mat logits = sal::nn::standard_normal(5, 4, nr);
    std::vector<int> labels = {0, 3, -1, 2, 1};
    Mat analytic;
    sal::losses::softmax_cross_entropy(logits, labels, &analytic);
    auto res = testutil::finite_difference_input_check(
        logits, analytic, [&] { return sal::losses::softmax_cross_entropy(logits, labels); });
    INFO("worst rel " << res.worst_rel);
    CHECK(res.worst_rel < kTol);
  }

  SECTION("sigmoid cross entropy input gradient") {
    Mat logits = sal::nn::standard_normal(4, 6, nr);
    Mat targets(4, 6);
    std::uniform_int_distribution<int> coin(0, 1);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) targets(i, j) = coin(nr);
    Mat analytic;
    sal::losses::sigmoid_cross_entropy(logits, targets, &analytic);
    auto res = testutil::finite_difference_input_check(
        logits, analytic, [&] { return sal::losses::sigmoid_cross_entropy(logits, targets); });
    CHECK(res.worst_rel < kTol);
  }

  SECTION("mean row norm input gradient") {
    Mat diff = sal::nn::standard_normal(6, 5, nr);
    Mat analytic;
    sal::losses::mean_row_norm(diff, &analytic);
    auto res = testutil::finite_difference_input_check(
        diff, analytic, [&] { return sal::losses::mean_row_norm(diff); });
    CHECK(res.worst_rel < kTol);
  }

  SECTION("discriminator terms: parameter and input gradients") {
    sal::Rng rng = sal::make_rng(103, "model-init");
    sal::nn::Mlp disc = sal::nn::make_disc_stack(4, {5}, "d", rng);
    Mat x = sal::nn::standard_normal(6, 4, nr);
    const double coeff = -1.7;

    disc.zero_grad();
    Mat dx = Mat::Zero(6, 4);
    sal::losses::mean_log_d(disc, x, sal::nn::Mode::Train, coeff, true, &dx);
    auto res = testutil::finite_difference_check(disc.params(), [&] {
      return coeff * sal::losses::mean_log_d(disc, x, sal::nn::Mode::Train, 0.0, false);
    });
    INFO("mean_log_d params worst rel " << res.worst_rel << " at " << res.worst_param);
    CHECK(res.worst_rel < kTol);
    auto resx = testutil::finite_difference_input_check(x, dx, [&] {
      return coeff * sal::losses::mean_log_d(disc, x, sal::nn::Mode::Train, 0.0, false);
    });
    CHECK(resx.worst_rel < kTol);

    disc.zero_grad();
    Mat dx2 = Mat::Zero(6, 4);
    sal::losses::mean_log_one_minus_d(disc, x, sal::nn::Mode::Train, coeff, true, &dx2);
    auto res2 = testutil::finite_difference_check(disc.params(), [&] {
      return coeff *
             sal::losses::mean_log_one_minus_d(disc, x, sal::nn::Mode::Train, 0.0, false);
    });
    INFO("mean_log_one_minus_d worst rel " << res2.worst_rel << " at " << res2.worst_param);
    CHECK(res2.worst_rel < kTol);
    auto resx2 = testutil::finite_difference_input_check(x, dx2, [&] {
      return coeff *
             sal::losses::mean_log_one_minus_d(disc, x, sal::nn::Mode::Train, 0.0, false);
    });
    CHECK(resx2.worst_rel < kTol);
  }
}

TEST_CASE("finite differences: embedding step", "[gradients]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::SalModel m = sal::build_model(mc, 211);
  testutil::LossBatch lb = testutil::random_loss_batch(8, mc.visual_dim, mc.attr_dim,
                                                       mc.num_categories, 71);

  zero_all(m);
  sal::losses::embed_step_loss(m, lb.raw_visual, lb.attrs, lb.labels, true);

  auto params = group_params(m, {"attr_extractor", "img_branch", "enc_visual", "enc_attr",
                                 "heads"});
  auto res = testutil::finite_difference_check(params, [&] {
    return sal::losses::embed_step_loss(m, lb.raw_visual, lb.attrs, lb.labels, false).total;
  });
  INFO("checked " << res.checked << " entries; worst rel " << res.worst_rel << " at "
                  << res.worst_param);
  CHECK(res.checked > 100);
  CHECK(res.worst_rel < kTol);
}

TEST_CASE("finite differences: synthesis discriminator substep", "[gradients]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::SalModel m = sal::build_model(mc, 223);
  sal::losses::MidBatch b = make_batch(m, 6, 3, 73);
  sal::Rng z_rng = sal::make_rng(11, "noise");
  Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);
  const double lambda = 1.3;

  zero_all(m);
  sal::losses::synth_disc_loss(m, b, z, lambda, true);

  auto params = group_params(m, {"disc_pair"});
  auto res = testutil::finite_difference_check(params, [&] {
    return sal::losses::synth_disc_loss(m, b, z, lambda, false).loss;
  });
  INFO("worst rel " << res.worst_rel << " at " << res.worst_param);
  CHECK(res.worst_rel < kTol);

  // Nothing outside the discriminator accumulated.
  for (auto& [name, params2] : m.parameter_groups()) {
    if (name == "disc_pair") continue;
    for (sal::nn::Param* p : params2) CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("finite differences: synthesis generator substep", "[gradients]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::SalModel m = sal::build_model(mc, 227);
  sal::losses::MidBatch b = make_batch(m, 6, 3, 79);
  sal::Rng zr = sal::make_rng(13, "noise");
  Mat z_g = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, zr);
  Mat z_c = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, zr);
  sal::losses::Lambdas lam;
  lam.gan1 = 1.2;
  lam.cyc = 0.8;
  lam.consis = 0.6;

  zero_all(m);
  sal::losses::synth_gen_loss(m, b, z_g, z_c, lam, true);

  auto params = group_params(m, {"gen_attr", "gen_visual"});
  auto res = testutil::finite_difference_check(params, [&] {
    return sal::losses::synth_gen_loss(m, b, z_g, z_c, lam, false).total;
  });
  INFO("checked " << res.checked << " entries; worst rel " << res.worst_rel << " at "
                  << res.worst_param);
  CHECK(res.worst_rel < kTol);

  // Frozen stacks (discriminator, encoders) accumulated nothing.
  for (auto& [name, params2] : m.parameter_groups()) {
    if (name == "gen_attr" || name == "gen_visual") continue;
    for (sal::nn::Param* p : params2) CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("finite differences: alignment discriminator substep", "[gradients]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::losses::Lambdas lam;
  lam.gan2 = 1.4;
  lam.aug = 0.7;

  SECTION("with augmentation") {
    sal::SalModel m = sal::build_model(mc, 229);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 83);
    sal::Rng z_rng = sal::make_rng(17, "noise");
    Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);

    zero_all(m);
    sal::losses::align_disc_loss(m, b, z, lam, true);
    auto params = group_params(m, {"disc_common"});
    auto res = testutil::finite_difference_check(params, [&] {
      return sal::losses::align_disc_loss(m, b, z, lam, false).loss;
    });
    INFO("worst rel " << res.worst_rel << " at " << res.worst_param);
    CHECK(res.worst_rel < kTol);
  }

  SECTION("without augmentation") {
    sal::SalModel m = sal::build_model(mc, 229);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 83);
    zero_all(m);
    sal::losses::align_disc_loss(m, b, Mat(), lam, true);
    auto params = group_params(m, {"disc_common"});
    auto res = testutil::finite_difference_check(params, [&] {
      return sal::losses::align_disc_loss(m, b, Mat(), lam, false).loss;
    });
    CHECK(res.worst_rel < kTol);
  }
}

TEST_CASE("finite differences: alignment encoder substep", "[gradients]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::losses::Lambdas lam;
  lam.gan2 = 1.1;
  lam.aug = 0.9;

  SECTION("with augmentation") {
    sal::SalModel m = sal::build_model(mc, 233);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 89);
    sal::Rng z_rng = sal::make_rng(19, "noise");
    Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);

    zero_all(m);
    sal::losses::align_enc_loss(m, b, z, lam, true);
    auto params = group_params(m, {"enc_attr", "enc_visual", "heads"});
    auto res = testutil::finite_difference_check(params, [&] {
      return sal::losses::align_enc_loss(m, b, z, lam, false).total;
    });
    INFO("checked " << res.checked << " entries; worst rel " << res.worst_rel << " at "
                    << res.worst_param);
    CHECK(res.worst_rel < kTol);

    // Generators and discriminators stay untouched in this substep.
    for (auto& [name, params2] : m.parameter_groups()) {
      if (name == "enc_attr" || name == "enc_visual" || name == "heads") continue;
      for (sal::nn::Param* p : params2) CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SECTION("without augmentation only the attribute encoder moves") {
    sal::SalModel m = sal::build_model(mc, 233);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 89);
    zero_all(m);
    sal::losses::align_enc_loss(m, b, Mat(), lam, true);
    auto params = group_params(m, {"enc_attr"});
    auto res = testutil::finite_difference_check(params, [&] {
      return sal::losses::align_enc_loss(m, b, Mat(), lam, false).total;
    });
    CHECK(res.worst_rel < kTol);
    for (auto& [name, params2] : m.parameter_groups()) {
      if (name == "enc_attr") continue;
      for (sal::nn::Param* p : params2) CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}
