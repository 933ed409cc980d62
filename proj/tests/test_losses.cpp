// Loss-function tests against analytically derived oracle values (computed
// independently at high precision and frozen below), plus composition and
// replay identities that tie the returned scalars to the logged probability
// vectors.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "sal/losses.hpp"
#include "sal/model.hpp"

using Catch::Matchers::WithinAbs;
using sal::nn::Mat;

namespace {

// Frozen oracle constants (30-digit arithmetic, rounded to double).
constexpr double kLn2 = 0.69314718055994531;
constexpr double kLn3 = 1.0986122886681097;
constexpr double kTwoLn2 = 1.3862943611198906;
constexpr double kSoftplusNeg1 = 0.31326168751822283;
constexpr double kSoftplusPos1 = 1.3132616875182228;
// mean of CE([2,0,-1] @ 0) and CE([0.5,0.5,-0.5] @ 2)
constexpr double kCeTwoRowMean = 1.0159204118072684;
// softplus(1) - 1 + softplus(-2) for logits [1,-2], targets [1,0]
constexpr double kSceValue = 0.44018969856119533;

// Forces the final score layer of a discriminator stack to emit `bias` for
// every input (weights zeroed, bias set).
void force_score(sal::nn::Mlp& disc, double bias) {
  bool found = false;
  for (sal::nn::Param* p : disc.params()) {
    if (p->name.find("/score/") == std::string::npos) continue;
    found = true;
    p->value.setZero();
    if (p->name.size() >= 2 && p->name.compare(p->name.size() - 2, 2, "/b") == 0) {
      p->value.array() += bias;
    }
  }
  REQUIRE(found);
}

// Builds a mid-level batch (with U unseen-style extension rows labeled -1)
// through the model's extractors.
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

double max_abs_grad(sal::SalModel& m) {
  double worst = 0.0;
  for (auto& [name, params] : m.parameter_groups()) {
    for (sal::nn::Param* p : params) {
      if (p->grad.size() > 0) worst = std::max(worst, p->grad.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("softmax cross entropy matches frozen oracles", "[losses]") {
  // Uniform logits over M classes cost exactly ln M.
  Mat z2 = Mat::Zero(1, 2);
  Mat z3 = Mat::Zero(1, 3);
  CHECK_THAT(sal::losses::softmax_cross_entropy(z2, {0}), WithinAbs(kLn2, 1e-15));
  CHECK_THAT(sal::losses::softmax_cross_entropy(z3, {2}), WithinAbs(kLn3, 1e-15));

  // Frozen two-row value.
  Mat logits(2, 3);
  logits << 2.0, 0.0, -1.0,  //
      0.5, 0.5, -0.5;
  CHECK_THAT(sal::losses::softmax_cross_entropy(logits, {0, 2}),
             WithinAbs(kCeTwoRowMean, 1e-14));

  // Rows labeled -1 are excluded from the mean.
  Mat logits3(3, 3);
  logits3 << 2.0, 0.0, -1.0,  //
      9.0, -9.0, 4.0,         //
      0.5, 0.5, -0.5;
  CHECK_THAT(sal::losses::softmax_cross_entropy(logits3, {0, -1, 2}),
             WithinAbs(kCeTwoRowMean, 1e-14));

  // All rows excluded: zero loss, zero gradient.
  Mat d;
  CHECK(sal::losses::softmax_cross_entropy(logits, {-1, -1}, &d) == 0.0);
  CHECK(d.cwiseAbs().maxCoeff() == 0.0);

  // Gradient = (softmax - onehot) / labeled_count.
  Mat dl;
  sal::losses::softmax_cross_entropy(logits3, {0, -1, 2}, &dl);
  Eigen::ArrayXd ex = logits3.row(0).array().exp();
  Eigen::ArrayXd p = ex / ex.sum();
  CHECK_THAT(dl(0, 0), WithinAbs((p(0) - 1.0) / 2.0, 1e-14));
  CHECK_THAT(dl(0, 1), WithinAbs(p(1) / 2.0, 1e-14));
  CHECK(dl.row(1).cwiseAbs().maxCoeff() == 0.0);  // excluded row

  // Invalid label fails loudly.
  CHECK_THROWS(sal::losses::softmax_cross_entropy(z2, {5}));
}

TEST_CASE("sigmoid cross entropy matches frozen oracles", "[losses]") {
  // Zero logits: each of the m slots costs ln 2 regardless of target.
  Mat z = Mat::Zero(3, 7);
  Mat t = Mat::Zero(3, 7);
  t(0, 0) = 1.0;
  t(2, 6) = 1.0;
  CHECK_THAT(sal::losses::sigmoid_cross_entropy(z, t), WithinAbs(7.0 * kLn2, 1e-13));

  // Frozen single-row value.
  Mat l(1, 2), tt(1, 2);
  l << 1.0, -2.0;
  tt << 1.0, 0.0;
  CHECK_THAT(sal::losses::sigmoid_cross_entropy(l, tt), WithinAbs(kSceValue, 1e-15));

  // Gradient = (sigmoid(l) - t) / rows.
  Mat dl;
  sal::losses::sigmoid_cross_entropy(l, tt, &dl);
  CHECK_THAT(dl(0, 0), WithinAbs(1.0 / (1.0 + std::exp(-1.0)) - 1.0, 1e-14));
  CHECK_THAT(dl(0, 1), WithinAbs(1.0 / (1.0 + std::exp(2.0)), 1e-14));

  CHECK_THROWS(sal::losses::sigmoid_cross_entropy(l, Mat::Zero(2, 2)));
}

TEST_CASE("mean row norm value and gradient", "[losses]") {
  Mat d(2, 2);
  d << 3.0, 4.0,  //
      0.0, 0.0;
  Mat g;
  CHECK_THAT(sal::losses::mean_row_norm(d, &g), WithinAbs(2.5, 1e-15));
  // Gradient of the first row: direction / (rows * norm).
  CHECK_THAT(g(0, 0), WithinAbs(3.0 / (2.0 * 5.0), 1e-15));
  CHECK_THAT(g(0, 1), WithinAbs(4.0 / (2.0 * 5.0), 1e-15));
  // Zero rows keep a finite (floored) gradient.
  CHECK(std::isfinite(g(1, 0)));
}

TEST_CASE("discriminator log terms at forced scores", "[losses]") {
  sal::Rng rng = sal::make_rng(21, "model-init");
  sal::nn::Mlp disc = sal::nn::make_disc_stack(3, {5}, "d", rng);
  sal::Rng x_rng = sal::make_rng(1, "noise");
  Mat x = sal::nn::standard_normal(4, 3, x_rng);

  SECTION("score zero gives log(1/2) on both sides") {
    force_score(disc, 0.0);
    Mat probs;
    CHECK_THAT(sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 0.0, false, nullptr, &probs),
               WithinAbs(-kLn2, 1e-15));
    CHECK_THAT(probs(2, 0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(
        sal::losses::mean_log_one_minus_d(disc, x, sal::nn::Mode::Eval, 0.0, false),
        WithinAbs(-kLn2, 1e-15));
  }

  SECTION("score one matches softplus identities") {
    force_score(disc, 1.0);
    CHECK_THAT(sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 0.0, false),
               WithinAbs(-kSoftplusNeg1, 1e-15));
    CHECK_THAT(sal::losses::mean_log_one_minus_d(disc, x, sal::nn::Mode::Eval, 0.0, false),
               WithinAbs(-kSoftplusPos1, 1e-15));
  }

  SECTION("returned mean is unweighted; coefficient scales gradients only") {
    force_score(disc, 0.0);
    const double v1 = sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 1.0, false);
    const double v2 = sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 2.5, false);
    CHECK_THAT(v1, WithinAbs(v2, 1e-15));

    // At score 0 the score-layer bias gradient is exactly coeff * (1 - 1/2).
    sal::nn::Param* score_b = nullptr;
    for (sal::nn::Param* p : disc.params()) {
      if (p->name == "d/score/b") score_b = p;
    }
    REQUIRE(score_b != nullptr);
    disc.zero_grad();
    sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 2.5, true);
    CHECK_THAT(score_b->grad(0, 0), WithinAbs(2.5 * 0.5, 1e-12));
    disc.zero_grad();
    sal::losses::mean_log_one_minus_d(disc, x, sal::nn::Mode::Eval, 2.5, true);
    CHECK_THAT(score_b->grad(0, 0), WithinAbs(-2.5 * 0.5, 1e-12));
  }

  SECTION("input gradient accumulates across calls") {
    // Untouched (random) score layer so input gradients are non-trivial.
    Mat dx1 = Mat::Zero(4, 3);
    sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 1.0, false, &dx1);
    REQUIRE(dx1.cwiseAbs().maxCoeff() > 0.0);
    Mat dx2 = Mat::Zero(4, 3);
    sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 1.0, false, &dx2);
    sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 1.0, false, &dx2);
    CHECK((dx2 - 2.0 * dx1).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("logged probabilities equal disc_probabilities in eval mode") {
    Mat probs;
    sal::losses::mean_log_d(disc, x, sal::nn::Mode::Eval, 0.0, false, nullptr, &probs);
    Mat direct = sal::losses::disc_probabilities(disc, x);
    CHECK((probs - direct).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("head loss composes and weight scales gradients only", "[losses]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::SalModel m = sal::build_model(mc, 5);
  testutil::LossBatch lb = testutil::random_loss_batch(6, mc.visual_dim, mc.attr_dim,
                                                       mc.num_categories, 31);
  sal::Rng emb_rng = sal::make_rng(2, "noise");
  Mat emb = sal::nn::standard_normal(6, mc.embed_dim(), emb_rng);

  Mat demb1, demb2;
  m.category_head(sal::Branch::Visual).zero_grad();
  m.attribute_head(sal::Branch::Visual).zero_grad();
  sal::losses::HeadLossOut o1 =
      sal::losses::head_loss(m.category_head(sal::Branch::Visual),
                             m.attribute_head(sal::Branch::Visual), emb, lb.labels, lb.attrs,
                             true, &demb1, 1.0);
  Mat g1 = m.category_head(sal::Branch::Visual).params()[0]->grad;

  m.category_head(sal::Branch::Visual).zero_grad();
  m.attribute_head(sal::Branch::Visual).zero_grad();
  sal::losses::HeadLossOut o2 =
      sal::losses::head_loss(m.category_head(sal::Branch::Visual),
                             m.attribute_head(sal::Branch::Visual), emb, lb.labels, lb.attrs,
                             true, &demb2, 2.0);
  Mat g2 = m.category_head(sal::Branch::Visual).params()[0]->grad;

  CHECK_THAT(o1.total, WithinAbs(o1.category + o1.attribute, 1e-14));
  // Values are unweighted; gradients double with the weight.
  CHECK_THAT(o2.total, WithinAbs(o1.total, 1e-14));
  CHECK((demb2 - 2.0 * demb1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("embed step loss composes branch terms and respects accumulate flag",
          "[losses]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::SalModel m = sal::build_model(mc, 9);
  testutil::LossBatch lb = testutil::random_loss_batch(8, mc.visual_dim, mc.attr_dim,
                                                       mc.num_categories, 17);

  for (auto& [name, params] : m.parameter_groups())
    for (sal::nn::Param* p : params) p->zero_grad();
  sal::losses::EmbedOut silent = sal::losses::embed_step_loss(m, lb.raw_visual, lb.attrs,
                                                              lb.labels, /*accumulate=*/false);
  CHECK(max_abs_grad(m) == 0.0);

  sal::losses::EmbedOut loud = sal::losses::embed_step_loss(m, lb.raw_visual, lb.attrs,
                                                            lb.labels, /*accumulate=*/true);
  CHECK(max_abs_grad(m) > 0.0);

  // Same parameters, same batch statistics: identical values either way.
  CHECK_THAT(loud.total, WithinAbs(silent.total, 1e-12));
  CHECK_THAT(loud.total, WithinAbs(loud.visual.total + loud.attribute.total, 1e-14));
  CHECK(loud.visual.category > 0.0);
  CHECK(loud.attribute.attribute > 0.0);
}

TEST_CASE("pair-gan discriminator loss at balanced scores and replay identity",
          "[losses]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();

  SECTION("forced-balance oracle") {
    sal::SalModel m = sal::build_model(mc, 13);
    force_score(m.disc_pair, 0.0);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 41);
    sal::Rng z_rng = sal::make_rng(3, "noise");
    Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);
    sal::losses::SynthDiscOut out = sal::losses::synth_disc_loss(m, b, z, 2.0, false);
    // r = -ln2, f_av = f_va = -ln2; objective = -2 ln 2; loss = -lambda * obj.
    CHECK_THAT(out.objective, WithinAbs(-kTwoLn2, 1e-12));
    CHECK_THAT(out.loss, WithinAbs(2.0 * kTwoLn2, 1e-12));
    CHECK_THAT(out.p_real(0, 0), WithinAbs(0.5, 1e-12));
  }

  SECTION("objective replays from logged probability vectors") {
    sal::SalModel m = sal::build_model(mc, 13);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 41);
    sal::Rng z_rng = sal::make_rng(3, "noise");
    Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);
    sal::losses::SynthDiscOut out = sal::losses::synth_disc_loss(m, b, z, 1.5, false);

    auto mean_log = [](const Mat& p, bool one_minus) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < p.rows(); ++i)
        s += std::log(one_minus ? 1.0 - p(i, 0) : p(i, 0));
      return s / static_cast<double>(p.rows());
    };
    const double replay = mean_log(out.p_real, false) + 0.5 * mean_log(out.p_fake_av, true) +
                          0.5 * mean_log(out.p_fake_va, true);
    CHECK_THAT(out.objective, WithinAbs(replay, 1e-9));
    CHECK_THAT(out.loss, WithinAbs(-1.5 * out.objective, 1e-12));

    // Linear lambda scaling on a fresh identical model (train-mode forwards
    // mutate batch-norm running statistics, so reuse would not be pure).
    sal::SalModel m2 = sal::build_model(mc, 13);
    sal::losses::MidBatch b2 = make_batch(m2, 6, 3, 41);
    sal::Rng z2_rng = sal::make_rng(3, "noise");
    Mat z2 = sal::nn::standard_normal(b2.ext_rows(), mc.z_dim, z2_rng);
    sal::losses::SynthDiscOut out2 = sal::losses::synth_disc_loss(m2, b2, z2, 3.0, false);
    CHECK_THAT(out2.loss, WithinAbs(2.0 * out.loss, 1e-12));
  }
}

TEST_CASE("generator loss composes its terms", "[losses]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::SalModel m = sal::build_model(mc, 23);
  sal::losses::MidBatch b = make_batch(m, 6, 3, 43);
  sal::Rng zr = sal::make_rng(4, "noise");
  Mat z_g = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, zr);
  Mat z_c = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, zr);

  sal::losses::Lambdas lam;
  lam.gan1 = 2.0;
  lam.cyc = 0.7;
  lam.consis = 0.3;
  sal::losses::SynthGenOut out = sal::losses::synth_gen_loss(m, b, z_g, z_c, lam, false);

  CHECK_THAT(out.consistency,
             WithinAbs(out.t_syn_attr_vs_real_visual + out.t_syn_visual_vs_real_attr +
                           out.t_syn_attr_vs_real_attr + out.t_syn_visual_vs_real_visual,
                       1e-13));
  CHECK_THAT(out.total, WithinAbs(out.g_attr + out.g_visual + lam.cyc * out.cycle +
                                      lam.consis * out.consistency,
                                  1e-13));
  CHECK(out.cycle > 0.0);
  CHECK(out.consistency > 0.0);

  // With the pair discriminator forced to balance, both fool terms are
  // exactly (lambda/2) * ln 2.
  sal::SalModel m2 = sal::build_model(mc, 23);
  force_score(m2.disc_pair, 0.0);
  sal::losses::MidBatch b2 = make_batch(m2, 6, 3, 43);
  sal::Rng zr2 = sal::make_rng(4, "noise");
  Mat z_g2 = sal::nn::standard_normal(b2.ext_rows(), mc.z_dim, zr2);
  Mat z_c2 = sal::nn::standard_normal(b2.ext_rows(), mc.z_dim, zr2);
  sal::losses::SynthGenOut out2 = sal::losses::synth_gen_loss(m2, b2, z_g2, z_c2, lam, false);
  CHECK_THAT(out2.g_visual, WithinAbs(0.5 * lam.gan1 * kLn2, 1e-12));
  CHECK_THAT(out2.g_attr, WithinAbs(0.5 * lam.gan1 * kLn2, 1e-12));
}

TEST_CASE("alignment discriminator loss with and without augmentation", "[losses]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::losses::Lambdas lam;
  lam.gan2 = 1.5;
  lam.aug = 0.5;

  SECTION("no augmentation: forced-balance oracle") {
    sal::SalModel m = sal::build_model(mc, 29);
    force_score(m.disc_common, 0.0);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 47);
    sal::losses::AlignDiscOut out = sal::losses::align_disc_loss(m, b, Mat(), lam, false);
    CHECK_THAT(out.objective_real, WithinAbs(-kTwoLn2, 1e-12));
    CHECK(out.objective_aug == 0.0);
    CHECK_THAT(out.loss, WithinAbs(1.5 * kTwoLn2, 1e-12));
    CHECK(out.p_syn_visual.size() == 0);
  }

  SECTION("augmentation adds the synthetic objective") {
    sal::SalModel m = sal::build_model(mc, 29);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 47);
    sal::Rng z_rng = sal::make_rng(5, "noise");
    Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);
    sal::losses::AlignDiscOut out = sal::losses::align_disc_loss(m, b, z, lam, false);
    CHECK(out.p_syn_visual.rows() == b.ext_rows());
    CHECK(out.p_syn_attr.rows() == b.seen_rows());
    CHECK_THAT(out.loss,
               WithinAbs(-lam.gan2 * out.objective_real - lam.aug * out.objective_aug, 1e-13));

    auto mean_log = [](const Mat& p, bool one_minus) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < p.rows(); ++i)
        s += std::log(one_minus ? 1.0 - p(i, 0) : p(i, 0));
      return s / static_cast<double>(p.rows());
    };
    CHECK_THAT(out.objective_real,
               WithinAbs(mean_log(out.p_visual, false) + mean_log(out.p_attr, true), 1e-9));
    CHECK_THAT(out.objective_aug,
               WithinAbs(mean_log(out.p_syn_visual, false) + mean_log(out.p_syn_attr, true),
                         1e-9));
  }
}

TEST_CASE("alignment encoder loss composes its terms", "[losses]") {
  sal::ModelConfig mc = testutil::surrogate_model_config();
  sal::losses::Lambdas lam;
  lam.gan2 = 2.0;
  lam.aug = 0.5;

  SECTION("no augmentation reduces to the real fool term") {
    sal::SalModel m = sal::build_model(mc, 37);
    force_score(m.disc_common, 0.0);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 53);
    sal::losses::AlignEncOut out = sal::losses::align_enc_loss(m, b, Mat(), lam, false);
    // fool = -lambda_gan2 * mean log D = -lambda * (-ln 2).
    CHECK_THAT(out.fool_attr, WithinAbs(lam.gan2 * kLn2, 1e-12));
    CHECK(out.fool_syn_attr == 0.0);
    CHECK(out.reveal_syn_visual == 0.0);
    CHECK_THAT(out.total, WithinAbs(out.fool_attr, 1e-13));
  }

  SECTION("full composition with augmentation") {
    sal::SalModel m = sal::build_model(mc, 37);
    sal::losses::MidBatch b = make_batch(m, 6, 3, 53);
    sal::Rng z_rng = sal::make_rng(6, "noise");
    Mat z = sal::nn::standard_normal(b.ext_rows(), mc.z_dim, z_rng);
    sal::losses::AlignEncOut out = sal::losses::align_enc_loss(m, b, z, lam, false);
    CHECK_THAT(out.total,
               WithinAbs(out.fool_attr + out.fool_syn_attr + out.reveal_syn_visual +
                             lam.aug * (out.embed_syn_attr.total + out.embed_syn_visual.total),
                         1e-13));
    CHECK(out.embed_syn_attr.total > 0.0);
    CHECK(out.embed_syn_visual.total > 0.0);
  }
}

TEST_CASE("evaluation wrappers replay from logged probabilities", "[losses]") {
  sal::Rng rng = sal::make_rng(61, "model-init");
  sal::nn::Mlp disc = sal::nn::make_disc_stack(4, {6}, "d", rng);
  sal::Rng nr = sal::make_rng(7, "noise");
  Mat real = sal::nn::standard_normal(5, 4, nr);
  Mat fake1 = sal::nn::standard_normal(7, 4, nr);
  Mat fake2 = sal::nn::standard_normal(5, 4, nr);

  auto mean_log = [](const Mat& p, bool one_minus) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      s += std::log(one_minus ? 1.0 - p(i, 0) : p(i, 0));
    return s / static_cast<double>(p.rows());
  };

  sal::losses::PairGanEval pg = sal::losses::eval_pair_gan(disc, real, fake1, fake2);
  const double replay = mean_log(pg.p_real, false) + 0.5 * mean_log(pg.p_fake_av, true) +
                        0.5 * mean_log(pg.p_fake_va, true);
  CHECK_THAT(pg.d_objective, WithinAbs(replay, 1e-9));
  CHECK_THAT(pg.d_loss, WithinAbs(-pg.d_objective, 1e-15));
  CHECK_THAT(pg.g_loss_visual, WithinAbs(-0.5 * mean_log(pg.p_fake_av, false), 1e-9));
  CHECK_THAT(pg.g_loss_attr, WithinAbs(-0.5 * mean_log(pg.p_fake_va, false), 1e-9));

  sal::losses::CommonGanEval cg = sal::losses::eval_common_gan(disc, real, fake2);
  CHECK_THAT(cg.d_objective,
             WithinAbs(mean_log(cg.p_visual, false) + mean_log(cg.p_attr, true), 1e-9));
  CHECK_THAT(cg.g_loss, WithinAbs(-mean_log(cg.p_attr, false), 1e-9));
}
