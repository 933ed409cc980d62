#pragma once

#include <cmath>
#include <vector>

#include "sal/model.hpp"
#include "sal/nn.hpp"
#include "sal/util.hpp"

namespace sal::losses {

using nn::Mat;
using nn::Mlp;
using nn::Mode;
using nn::Tape;

namespace detail {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// Loss-term weights for the two adversarial objectives and their companions.
struct Lambdas {
  double gan1 = 1.0;
  double cyc = 1.0;
  double consis = 1.0;
  double gan2 = 1.0;
  double aug = 1.0;
};

// --- primitives -------------------------------------------------------------

// Mean over labeled rows (label >= 0) of -log softmax(logits)[label].  Rows
// labeled -1 are excluded; an all-excluded batch scores exactly 0.
inline double softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels,
                                    Mat* dlogits = nullptr) {
  require(static_cast<std::size_t>(logits.rows()) == labels.size(),
          "softmax_cross_entropy: ", logits.rows(), " rows vs ", labels.size(), " labels");
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  Eigen::Index labeled = 0;
  for (int y : labels)
    if (y >= 0) ++labeled;
  if (labeled == 0) return 0.0;
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(labeled);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    require(y < logits.cols(), "category label ", y, " out of range for ", logits.cols(),
            " logits");
    const double shift = logits.row(i).maxCoeff();
    const Eigen::ArrayXd ex = (logits.row(i).array() - shift).exp();
    const double lse = std::log(ex.sum());
    total += lse - (logits(i, y) - shift);
    if (dlogits) {
      dlogits->row(i) = (ex / ex.sum()).matrix() * inv;
      (*dlogits)(i, y) -= inv;
    }
  }
  return total * inv;
}

// Mean over rows of the per-row sum of independent sigmoid cross-entropies.
inline double sigmoid_cross_entropy(const Mat& logits, const Mat& targets,
                                    Mat* dlogits = nullptr) {
  require(logits.rows() == targets.rows() && logits.cols() == targets.cols(),
          "sigmoid_cross_entropy shape mismatch: ", logits.rows(), "x", logits.cols(), " vs ",
          targets.rows(), "x", targets.cols());
  require(logits.rows() > 0, "sigmoid_cross_entropy on empty batch");
  const double inv = 1.0 / static_cast<double>(logits.rows());
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double l = logits(i, j), t = targets(i, j);
      total += detail::softplus(l) - t * l;
      if (dlogits) (*dlogits)(i, j) = (detail::sigmoid(l) - t) * inv;
    }
  return total * inv;
}

// Mean over rows of the Euclidean norm of each row.
inline double mean_row_norm(const Mat& diff, Mat* ddiff = nullptr) {
  require(diff.rows() > 0, "mean_row_norm on empty batch");
  const double inv = 1.0 / static_cast<double>(diff.rows());
  if (ddiff) ddiff->resize(diff.rows(), diff.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < diff.rows(); ++i) {
    const double n = diff.row(i).norm();
    total += n;
    if (ddiff) ddiff->row(i) = diff.row(i) * (inv / std::max(n, 1e-12));
  }
  return total * inv;
}

// --- discriminator score terms ----------------------------------------------
// Discriminator stacks emit one raw score column; probability = sigmoid(score).
// Each term returns the UNWEIGHTED mean; the gradient of (coeff * mean) flows
// into the discriminator parameters (acc_disc) and/or the inputs (*dx).

inline Mat disc_probabilities(Mlp& disc, const Mat& x) {
  Mat s = disc.infer(x);
  for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, 0) = detail::sigmoid(s(i, 0));
  return s;
}

namespace detail {

// positive = true: mean log sigmoid(score); false: mean log(1 - sigmoid(score)).
inline double mean_log_disc(Mlp& disc, const Mat& x, Mode mode, bool positive, double coeff,
                            bool acc_disc, Mat* dx, Mat* probs) {
  require(x.rows() > 0, "discriminator term on empty batch");
  const bool need_grad = acc_disc || dx != nullptr;
  Tape tape;
  Mat s = disc.forward(x, mode, need_grad ? &tape : nullptr);
  require(s.cols() == 1, "discriminator must emit one score column, got ", s.cols());
  const double inv = 1.0 / static_cast<double>(s.rows());
  double total = 0.0;
  Mat ds;
  if (need_grad) ds.resize(s.rows(), 1);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double v = s(i, 0);
    // log sigmoid(v) = -softplus(-v);  log(1 - sigmoid(v)) = -softplus(v)
    total += positive ? -softplus(-v) : -softplus(v);
    if (need_grad) {
      const double dmean_ds = positive ? 1.0 - sigmoid(v) : -sigmoid(v);
      ds(i, 0) = coeff * dmean_ds * inv;
    }
  }
  if (probs) {
    probs->resize(s.rows(), 1);
    for (Eigen::Index i = 0; i < s.rows(); ++i) (*probs)(i, 0) = sigmoid(s(i, 0));
  }
  if (need_grad) {
    Mat dinput = disc.backward(tape, ds, acc_disc);
    if (dx) *dx += dinput;
  }
  return total * inv;
}

}  // namespace detail

inline double mean_log_d(Mlp& disc, const Mat& x, Mode mode, double coeff, bool acc_disc,
                         Mat* dx = nullptr, Mat* probs = nullptr) {
  return detail::mean_log_disc(disc, x, mode, true, coeff, acc_disc, dx, probs);
}

inline double mean_log_one_minus_d(Mlp& disc, const Mat& x, Mode mode, double coeff,
                                   bool acc_disc, Mat* dx = nullptr, Mat* probs = nullptr) {
  return detail::mean_log_disc(disc, x, mode, false, coeff, acc_disc, dx, probs);
}

// --- classifier-head losses ---------------------------------------------------

struct HeadLossOut {
  double total = 0.0;
  double category = 0.0;
  double attribute = 0.0;
};

// Category + attribute loss on a batch of common-space embeddings.  `weight`
// scales gradients only (head accumulation and *demb); returned values stay
// unweighted.  Label -1 excludes a row from the category term.
inline HeadLossOut head_loss(Mlp& head_cat, Mlp& head_att, const Mat& emb,
                             const std::vector<int>& labels, const Mat& attr_targets,
                             bool acc_heads, Mat* demb, double weight = 1.0) {
  HeadLossOut out;
  const bool need = acc_heads || demb != nullptr;
  Tape t_cat, t_att;
  Mat logits_c = head_cat.forward(emb, Mode::Train, need ? &t_cat : nullptr);
  Mat dlc;
  out.category = softmax_cross_entropy(logits_c, labels, need ? &dlc : nullptr);
  Mat logits_a = head_att.forward(emb, Mode::Train, need ? &t_att : nullptr);
  Mat dla;
  out.attribute = sigmoid_cross_entropy(logits_a, attr_targets, need ? &dla : nullptr);
  out.total = out.category + out.attribute;
  if (need) {
    Mat d1 = head_cat.backward(t_cat, weight * dlc, acc_heads);
    Mat d2 = head_att.backward(t_att, weight * dla, acc_heads);
    if (demb) *demb = d1 + d2;
  }
  return out;
}

// Encoder forward + head loss for one branch.  `dmid` receives the gradient
// at the mid-level input when requested.
inline HeadLossOut branch_embed_loss(Mlp& encoder, Mlp& head_cat, Mlp& head_att, const Mat& mid,
                                     const std::vector<int>& labels, const Mat& attr_targets,
                                     Mode enc_mode, bool acc_encoder, bool acc_heads,
                                     Mat* dmid = nullptr) {
  const bool need = acc_encoder || acc_heads || dmid != nullptr;
  Tape t_enc;
  Mat emb = encoder.forward(mid, enc_mode, need ? &t_enc : nullptr);
  Mat demb;
  HeadLossOut out =
      head_loss(head_cat, head_att, emb, labels, attr_targets, acc_heads, need ? &demb : nullptr);
  if (need) {
    Mat d = encoder.backward(t_enc, demb, acc_encoder);
    if (dmid) *dmid = d;
  }
  return out;
}

// --- batch bundle -------------------------------------------------------------

// One training batch after the mid-level extractors ran in eval mode.  The
// extended attribute side appends sampled unseen combinations below the real
// rows; labels_ext marks those rows -1 (no category).
struct MidBatch {
  Mat attrs;                    // B x m
  Mat attrs_ext;                // (B+U) x m
  std::vector<int> labels;      // B
  std::vector<int> labels_ext;  // B+U
  Mat f_a;                      // B x mid
  Mat f_v;                      // B x mid
  Mat f_a_ext;                  // (B+U) x mid

  Eigen::Index seen_rows() const { return f_a.rows(); }
  Eigen::Index ext_rows() const { return f_a_ext.rows(); }
};

// --- step 1: embedding loss on both branches ----------------------------------

struct EmbedOut {
  double total = 0.0;
  HeadLossOut visual;
  HeadLossOut attribute;
};

inline EmbedOut embed_step_loss(SalModel& m, const Mat& raw_visual, const Mat& attrs,
                                const std::vector<int>& labels, bool accumulate) {
  EmbedOut out;
  Tape t_img, t_attr;
  Mat f_v = m.img_branch.forward(raw_visual, Mode::Train, accumulate ? &t_img : nullptr);
  Mat f_a = m.attr_extractor.forward(attrs, Mode::Train, accumulate ? &t_attr : nullptr);
  Mat df_v, df_a;
  out.visual = branch_embed_loss(m.enc_visual, m.category_head(Branch::Visual),
                                 m.attribute_head(Branch::Visual), f_v, labels, attrs,
                                 Mode::Train, accumulate, accumulate,
                                 accumulate ? &df_v : nullptr);
  out.attribute = branch_embed_loss(m.enc_attr, m.category_head(Branch::Attribute),
                                    m.attribute_head(Branch::Attribute), f_a, labels, attrs,
                                    Mode::Train, accumulate, accumulate,
                                    accumulate ? &df_a : nullptr);
  if (accumulate) {
    m.img_branch.backward(t_img, df_v, true);
    m.attr_extractor.backward(t_attr, df_a, true);
  }
  out.total = out.visual.total + out.attribute.total;
  return out;
}

// --- step 2: cross-modal synthesis, discriminator substep ----------------------
// Pair discriminator ascends:
//   mean log D(f_a, f_v) + 1/2 mean log(1-D(f_a_ext, fake_v))
//                        + 1/2 mean log(1-D(fake_a, f_v))
// `loss` is the minimized value, -lambda_gan1 * objective.

struct SynthDiscOut {
  double objective = 0.0;
  double loss = 0.0;
  Mat p_real, p_fake_av, p_fake_va;
};

inline SynthDiscOut synth_disc_loss(SalModel& m, const MidBatch& b, const Mat& z,
                                    double lambda_gan1, bool accumulate) {
  require(z.rows() == b.ext_rows() && z.cols() == m.cfg.z_dim,
          "synthesis noise shape mismatch: ", z.rows(), "x", z.cols());
  // Generators belong to this step's update set, so train-mode forwards are
  // fine here; outputs are detached (no tapes).
  Mat fake_v = m.gen_visual.forward(nn::hstack(b.f_a_ext, z), Mode::Train, nullptr);
  Mat fake_a = m.gen_attr.forward(b.f_v, Mode::Train, nullptr);

  SynthDiscOut out;
  const double r = mean_log_d(m.disc_pair, nn::hstack(b.f_a, b.f_v), Mode::Train,
                              -lambda_gan1, accumulate, nullptr, &out.p_real);
  const double f_av =
      mean_log_one_minus_d(m.disc_pair, nn::hstack(b.f_a_ext, fake_v), Mode::Train,
                           -0.5 * lambda_gan1, accumulate, nullptr, &out.p_fake_av);
  const double f_va = mean_log_one_minus_d(m.disc_pair, nn::hstack(fake_a, b.f_v), Mode::Train,
                                           -0.5 * lambda_gan1, accumulate, nullptr,
                                           &out.p_fake_va);
  out.objective = r + 0.5 * f_av + 0.5 * f_va;
  out.loss = -lambda_gan1 * out.objective;
  return out;
}

// --- step 2: cross-modal synthesis, generator substep ---------------------------
// Non-saturating fool terms (each weighted lambda_gan1/2), a one-way cycle
// term (visual synthesis re-encoded to the attribute side must return to its
// source), and a granularity-consistency term comparing common-space
// embeddings of synthetic and real features through frozen encoders.

struct SynthGenOut {
  double total = 0.0;
  double g_attr = 0.0;    // weighted fool term for the attribute generator
  double g_visual = 0.0;  // weighted fool term for the visual generator
  double cycle = 0.0;     // unweighted cycle value
  double consistency = 0.0;  // unweighted sum of the four terms below
  double t_syn_attr_vs_real_visual = 0.0;
  double t_syn_visual_vs_real_attr = 0.0;
  double t_syn_attr_vs_real_attr = 0.0;
  double t_syn_visual_vs_real_visual = 0.0;
};

inline SynthGenOut synth_gen_loss(SalModel& m, const MidBatch& b, const Mat& z_gen,
                                  const Mat& z_cyc, const Lambdas& lam, bool accumulate) {
  const Eigen::Index B = b.seen_rows();
  const int mid = m.cfg.mid_dim();
  SynthGenOut out;

  Tape t_gv, t_ga;
  Mat fake_v = m.gen_visual.forward(nn::hstack(b.f_a_ext, z_gen), Mode::Train,
                                    accumulate ? &t_gv : nullptr);
  Mat fake_a = m.gen_attr.forward(b.f_v, Mode::Train, accumulate ? &t_ga : nullptr);
  Mat d_fake_v = Mat::Zero(fake_v.rows(), fake_v.cols());
  Mat d_fake_a = Mat::Zero(fake_a.rows(), fake_a.cols());

  // Fool terms through the frozen pair discriminator (eval-free: the pair
  // discriminator is in this step's update set, but its parameters must not
  // accumulate here).
  {
    Mat dpairs_v = Mat::Zero(b.ext_rows(), 2 * mid);
    const double mv = mean_log_d(m.disc_pair, nn::hstack(b.f_a_ext, fake_v), Mode::Train,
                                 -0.5 * lam.gan1, false, accumulate ? &dpairs_v : nullptr);
    out.g_visual = -0.5 * lam.gan1 * mv;
    if (accumulate) d_fake_v += dpairs_v.rightCols(mid);

    Mat dpairs_a = Mat::Zero(B, 2 * mid);
    const double ma = mean_log_d(m.disc_pair, nn::hstack(fake_a, b.f_v), Mode::Train,
                                 -0.5 * lam.gan1, false, accumulate ? &dpairs_a : nullptr);
    out.g_attr = -0.5 * lam.gan1 * ma;
    if (accumulate) d_fake_a += dpairs_a.leftCols(mid);
  }

  // One-way cycle with its own noise draw.
  {
    Tape t_gv2, t_ga2;
    Mat mid_syn = m.gen_visual.forward(nn::hstack(b.f_a_ext, z_cyc), Mode::Train,
                                       accumulate ? &t_gv2 : nullptr);
    Mat rec = m.gen_attr.forward(mid_syn, Mode::Train, accumulate ? &t_ga2 : nullptr);
    Mat drec;
    out.cycle = mean_row_norm(rec - b.f_a_ext, accumulate ? &drec : nullptr);
    if (accumulate && lam.cyc != 0.0) {
      Mat dmid_syn = m.gen_attr.backward(t_ga2, lam.cyc * drec, true);
      m.gen_visual.backward(t_gv2, dmid_syn, true);
    }
  }

  // Granularity consistency through frozen encoders (eval mode: the encoders
  // are outside this step's update set, so even their running statistics must
  // not move).  Gradients flow to the synthetic inputs only.
  {
    Tape t_ea, t_ev;
    Mat e_syn_a = m.enc_attr.forward(fake_a, Mode::Eval, accumulate ? &t_ea : nullptr);
    Mat e_syn_v = m.enc_visual.forward(fake_v, Mode::Eval, accumulate ? &t_ev : nullptr);
    Mat e_real_v = m.enc_visual.infer(b.f_v);
    Mat e_real_a = m.enc_attr.infer(b.f_a_ext);

    Mat d1, d2, d3, d4;
    out.t_syn_attr_vs_real_visual =
        mean_row_norm(e_syn_a - e_real_v, accumulate ? &d1 : nullptr);
    out.t_syn_visual_vs_real_attr =
        mean_row_norm(e_syn_v - e_real_a, accumulate ? &d2 : nullptr);
    out.t_syn_attr_vs_real_attr =
        mean_row_norm(e_syn_a - e_real_a.topRows(B), accumulate ? &d3 : nullptr);
    out.t_syn_visual_vs_real_visual =
        mean_row_norm(e_syn_v.topRows(B) - e_real_v, accumulate ? &d4 : nullptr);
    out.consistency = out.t_syn_attr_vs_real_visual + out.t_syn_visual_vs_real_attr +
                      out.t_syn_attr_vs_real_attr + out.t_syn_visual_vs_real_visual;
    if (accumulate && lam.consis != 0.0) {
      Mat dsa = lam.consis * (d1 + d3);
      Mat dsv = lam.consis * d2;
      dsv.topRows(B) += lam.consis * d4;
      d_fake_a += m.enc_attr.backward(t_ea, dsa, false);
      d_fake_v += m.enc_visual.backward(t_ev, dsv, false);
    }
  }

  if (accumulate) {
    m.gen_attr.backward(t_ga, d_fake_a, true);
    m.gen_visual.backward(t_gv, d_fake_v, true);
  }
  out.total =
      out.g_attr + out.g_visual + lam.cyc * out.cycle + lam.consis * out.consistency;
  return out;
}

// --- step 3: common-space alignment, discriminator substep ----------------------
// The common-space discriminator separates visual-side embeddings (positive)
// from attribute-side embeddings (negative), on real embeddings and — when
// augmentation is on — on embeddings of synthetic features from the frozen
// generators.  Pass an empty z_aug to disable augmentation.

struct AlignDiscOut {
  double objective_real = 0.0;
  double objective_aug = 0.0;
  double loss = 0.0;
  Mat p_visual, p_attr, p_syn_visual, p_syn_attr;
};

inline AlignDiscOut align_disc_loss(SalModel& m, const MidBatch& b, const Mat& z_aug,
                                    const Lambdas& lam, bool accumulate) {
  AlignDiscOut out;
  // Encoders are in this step's update set; train-mode forwards, detached.
  Mat e_v = m.enc_visual.forward(b.f_v, Mode::Train, nullptr);
  Mat e_a = m.enc_attr.forward(b.f_a_ext, Mode::Train, nullptr);
  const double rv = mean_log_d(m.disc_common, e_v, Mode::Train, -lam.gan2, accumulate, nullptr,
                               &out.p_visual);
  const double ra = mean_log_one_minus_d(m.disc_common, e_a, Mode::Train, -lam.gan2, accumulate,
                                         nullptr, &out.p_attr);
  out.objective_real = rv + ra;
  if (z_aug.rows() > 0) {
    require(z_aug.rows() == b.ext_rows() && z_aug.cols() == m.cfg.z_dim,
            "augmentation noise shape mismatch");
    // Generators are frozen in step 3: eval-mode forwards only.
    Mat fake_v = m.gen_visual.forward(nn::hstack(b.f_a_ext, z_aug), Mode::Eval, nullptr);
    Mat fake_a = m.gen_attr.forward(b.f_v, Mode::Eval, nullptr);
    Mat se_v = m.enc_visual.forward(fake_v, Mode::Train, nullptr);
    Mat se_a = m.enc_attr.forward(fake_a, Mode::Train, nullptr);
    const double sv = mean_log_d(m.disc_common, se_v, Mode::Train, -lam.aug, accumulate,
                                 nullptr, &out.p_syn_visual);
    const double sa = mean_log_one_minus_d(m.disc_common, se_a, Mode::Train, -lam.aug,
                                           accumulate, nullptr, &out.p_syn_attr);
    out.objective_aug = sv + sa;
  }
  out.loss = -lam.gan2 * out.objective_real - lam.aug * out.objective_aug;
  return out;
}

// --- step 3: common-space alignment, encoder substep -----------------------------
// Both encoders and the shared heads update.  The attribute encoder fools the
// common-space discriminator on real and synthetic inputs (non-saturating);
// the visual encoder minimizes the literal positive-class term on synthetic
// visual embeddings; the classifier heads supervise both synthetic streams.

struct AlignEncOut {
  double total = 0.0;
  double fool_attr = 0.0;
  double fool_syn_attr = 0.0;
  double reveal_syn_visual = 0.0;
  HeadLossOut embed_syn_attr;
  HeadLossOut embed_syn_visual;
};

inline AlignEncOut align_enc_loss(SalModel& m, const MidBatch& b, const Mat& z_aug,
                                  const Lambdas& lam, bool accumulate) {
  AlignEncOut out;
  Tape t_ea;
  Mat e_a = m.enc_attr.forward(b.f_a_ext, Mode::Train, accumulate ? &t_ea : nullptr);
  Mat de_a = Mat::Zero(e_a.rows(), e_a.cols());
  const double fa = mean_log_d(m.disc_common, e_a, Mode::Train, -lam.gan2, false,
                               accumulate ? &de_a : nullptr);
  out.fool_attr = -lam.gan2 * fa;
  if (accumulate) m.enc_attr.backward(t_ea, de_a, true);

  if (z_aug.rows() > 0) {
    require(z_aug.rows() == b.ext_rows() && z_aug.cols() == m.cfg.z_dim,
            "augmentation noise shape mismatch");
    Mat fake_v = m.gen_visual.forward(nn::hstack(b.f_a_ext, z_aug), Mode::Eval, nullptr);
    Mat fake_a = m.gen_attr.forward(b.f_v, Mode::Eval, nullptr);
    Tape t_sea, t_sev;
    Mat se_a = m.enc_attr.forward(fake_a, Mode::Train, accumulate ? &t_sea : nullptr);
    Mat se_v = m.enc_visual.forward(fake_v, Mode::Train, accumulate ? &t_sev : nullptr);
    Mat dse_a = Mat::Zero(se_a.rows(), se_a.cols());
    Mat dse_v = Mat::Zero(se_v.rows(), se_v.cols());

    const double fsa = mean_log_d(m.disc_common, se_a, Mode::Train, -lam.aug, false,
                                  accumulate ? &dse_a : nullptr);
    out.fool_syn_attr = -lam.aug * fsa;
    const double rsv = mean_log_d(m.disc_common, se_v, Mode::Train, lam.aug, false,
                                  accumulate ? &dse_v : nullptr);
    out.reveal_syn_visual = lam.aug * rsv;

    Mat dh_a, dh_v;
    out.embed_syn_attr = head_loss(m.category_head(Branch::Attribute),
                                   m.attribute_head(Branch::Attribute), se_a, b.labels, b.attrs,
                                   accumulate, accumulate ? &dh_a : nullptr, lam.aug);
    out.embed_syn_visual = head_loss(m.category_head(Branch::Visual),
                                     m.attribute_head(Branch::Visual), se_v, b.labels_ext,
                                     b.attrs_ext, accumulate, accumulate ? &dh_v : nullptr,
                                     lam.aug);
    if (accumulate) {
      m.enc_attr.backward(t_sea, dse_a + dh_a, true);
      m.enc_visual.backward(t_sev, dse_v + dh_v, true);
    }
  }
  out.total = out.fool_attr + out.fool_syn_attr + out.reveal_syn_visual +
              lam.aug * (out.embed_syn_attr.total + out.embed_syn_visual.total);
  return out;
}

// --- pure evaluation wrappers (eval-mode forwards, no gradients) -----------------

struct PairGanEval {
  double d_objective = 0.0;
  double d_loss = 0.0;
  double g_loss_attr = 0.0;
  double g_loss_visual = 0.0;
  Mat p_real, p_fake_av, p_fake_va;
};

inline PairGanEval eval_pair_gan(Mlp& disc, const Mat& real, const Mat& fake_av,
                                 const Mat& fake_va) {
  PairGanEval out;
  const double r = mean_log_d(disc, real, Mode::Eval, 0.0, false, nullptr, &out.p_real);
  const double f1 =
      mean_log_one_minus_d(disc, fake_av, Mode::Eval, 0.0, false, nullptr, &out.p_fake_av);
  const double f2 =
      mean_log_one_minus_d(disc, fake_va, Mode::Eval, 0.0, false, nullptr, &out.p_fake_va);
  out.d_objective = r + 0.5 * f1 + 0.5 * f2;
  out.d_loss = -out.d_objective;
  out.g_loss_visual = -0.5 * mean_log_d(disc, fake_av, Mode::Eval, 0.0, false);
  out.g_loss_attr = -0.5 * mean_log_d(disc, fake_va, Mode::Eval, 0.0, false);
  return out;
}

struct CommonGanEval {
  double d_objective = 0.0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  Mat p_visual, p_attr;
};

inline CommonGanEval eval_common_gan(Mlp& disc, const Mat& e_visual, const Mat& e_attr) {
  CommonGanEval out;
  const double rv = mean_log_d(disc, e_visual, Mode::Eval, 0.0, false, nullptr, &out.p_visual);
  const double ra =
      mean_log_one_minus_d(disc, e_attr, Mode::Eval, 0.0, false, nullptr, &out.p_attr);
  out.d_objective = rv + ra;
  out.d_loss = -out.d_objective;
  out.g_loss = -mean_log_d(disc, e_attr, Mode::Eval, 0.0, false);
  return out;
}

}  // namespace sal::losses
