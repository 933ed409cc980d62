#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sal/adam.hpp"
#include "sal/checkpoint.hpp"
#include "sal/dataset.hpp"
#include "sal/losses.hpp"
#include "sal/metrics.hpp"
#include "sal/model.hpp"
#include "sal/util.hpp"

namespace sal {

// Training variants, from the plain embedding baseline to the full method:
//   Embed          embedding losses only
//   EmbedAdv       embedding + common-space adversarial alignment
//   EmbedSymbAdv   both adversarial modules, no unseen-combination sampling
//   Sal            full method (synthesis + alignment + unseen sampling)
//   SalStagewise   full method, but synthesis trained to completion before
//                  alignment starts (update counts per step match Sal)
enum class Variant { Embed, EmbedAdv, EmbedSymbAdv, Sal, SalStagewise };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Embed: return "embed";
    case Variant::EmbedAdv: return "embed+adv";
    case Variant::EmbedSymbAdv: return "embed+symb-adv";
    case Variant::Sal: return "sal";
    case Variant::SalStagewise: return "sal-stagewise";
  }
  fail("unhandled variant");
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "embed") return Variant::Embed;
  if (s == "embed+adv") return Variant::EmbedAdv;
  if (s == "embed+symb-adv") return Variant::EmbedSymbAdv;
  if (s == "sal") return Variant::Sal;
  if (s == "sal-stagewise") return Variant::SalStagewise;
  fail("unknown variant '", s,
       "' (expected embed, embed+adv, embed+symb-adv, sal, or sal-stagewise)");
}

struct TrainConfig {
  Variant variant = Variant::Sal;
  int epochs = 60;
  int batch_size = 128;
  double lr_image_branch = 0.001;    // image branch + visual encoder
  double lr_attribute_branch = 0.01; // attribute extractor + attribute encoder
  double lr_gan = 0.001;             // generators and discriminators
  double lr_heads = 0.001;           // classifier heads
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  losses::Lambdas lambdas;
  int unseen_per_batch = -1;   // -1: default to batch_size (variants with sampling)
  int pretrain_epochs = 30;    // cap for the embedding warm-up
  int pretrain_patience = 5;   // epochs without train-split mAP improvement
  std::uint64_t seed = 1;
  bool shared_heads = true;
  bool interpolated_ap = false;
  std::string backbone = "toy-mlp";
  std::vector<int> backbone_hidden = {256};
  std::vector<int> attr_widths = {64, 128, 256, 512};
  std::vector<int> gen_widths = {256, 128, 256, 512};
  std::vector<int> enc_widths = {512, 256, 128};
  std::vector<int> disc_hidden = {512, 256};
  int z_dim = 64;
  int eval_every = 1;

  void validate() const {
    require(epochs >= 0, "epochs must be non-negative");
    require(batch_size >= 2, "batch_size must be at least 2");
    require(lr_image_branch > 0 && lr_attribute_branch > 0 && lr_gan > 0 && lr_heads > 0,
            "learning rates must be positive");
    require(lambdas.gan1 >= 0 && lambdas.cyc >= 0 && lambdas.consis >= 0 && lambdas.gan2 >= 0 &&
                lambdas.aug >= 0,
            "loss weights must be non-negative");
    require(pretrain_epochs >= 0, "pretrain_epochs must be non-negative");
    require(pretrain_patience >= 1, "pretrain_patience must be at least 1");
    require(eval_every >= 1, "eval_every must be at least 1");
    require(z_dim > 0, "z_dim must be positive");
  }

  bool synthesis_active() const {
    const bool variant_on = variant == Variant::EmbedSymbAdv || variant == Variant::Sal ||
                            variant == Variant::SalStagewise;
    const bool any_weight =
        lambdas.gan1 != 0.0 || lambdas.cyc != 0.0 || lambdas.consis != 0.0;
    return variant_on && any_weight;
  }
  bool alignment_active() const { return variant != Variant::Embed; }
  bool augmentation_active() const { return synthesis_active() && lambdas.aug > 0.0; }
  int unseen_count() const {
    if (variant != Variant::Sal && variant != Variant::SalStagewise) return 0;
    return unseen_per_batch < 0 ? batch_size : unseen_per_batch;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"variant", to_string(c.variant)},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"lr_image_branch", c.lr_image_branch},
                     {"lr_attribute_branch", c.lr_attribute_branch},
                     {"lr_gan", c.lr_gan},
                     {"lr_heads", c.lr_heads},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_eps", c.adam_eps},
                     {"lambda_gan1", c.lambdas.gan1},
                     {"lambda_cyc", c.lambdas.cyc},
                     {"lambda_consis", c.lambdas.consis},
                     {"lambda_gan2", c.lambdas.gan2},
                     {"lambda_aug", c.lambdas.aug},
                     {"unseen_per_batch", c.unseen_per_batch},
                     {"pretrain_epochs", c.pretrain_epochs},
                     {"pretrain_patience", c.pretrain_patience},
                     {"seed", c.seed},
                     {"shared_heads", c.shared_heads},
                     {"interpolated_ap", c.interpolated_ap},
                     {"backbone", c.backbone},
                     {"backbone_hidden", c.backbone_hidden},
                     {"attr_widths", c.attr_widths},
                     {"gen_widths", c.gen_widths},
                     {"enc_widths", c.enc_widths},
                     {"disc_hidden", c.disc_hidden},
                     {"z_dim", c.z_dim},
                     {"eval_every", c.eval_every}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.variant = variant_from_string(j.value("variant", to_string(d.variant)));
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr_image_branch = j.value("lr_image_branch", d.lr_image_branch);
  c.lr_attribute_branch = j.value("lr_attribute_branch", d.lr_attribute_branch);
  c.lr_gan = j.value("lr_gan", d.lr_gan);
  c.lr_heads = j.value("lr_heads", d.lr_heads);
  c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
  c.adam_eps = j.value("adam_eps", d.adam_eps);
  c.lambdas.gan1 = j.value("lambda_gan1", d.lambdas.gan1);
  c.lambdas.cyc = j.value("lambda_cyc", d.lambdas.cyc);
  c.lambdas.consis = j.value("lambda_consis", d.lambdas.consis);
  c.lambdas.gan2 = j.value("lambda_gan2", d.lambdas.gan2);
  c.lambdas.aug = j.value("lambda_aug", d.lambdas.aug);
  c.unseen_per_batch = j.value("unseen_per_batch", d.unseen_per_batch);
  c.pretrain_epochs = j.value("pretrain_epochs", d.pretrain_epochs);
  c.pretrain_patience = j.value("pretrain_patience", d.pretrain_patience);
  c.seed = j.value("seed", d.seed);
  c.shared_heads = j.value("shared_heads", d.shared_heads);
  c.interpolated_ap = j.value("interpolated_ap", d.interpolated_ap);
  c.backbone = j.value("backbone", d.backbone);
  c.backbone_hidden = j.value("backbone_hidden", d.backbone_hidden);
  c.attr_widths = j.value("attr_widths", d.attr_widths);
  c.gen_widths = j.value("gen_widths", d.gen_widths);
  c.enc_widths = j.value("enc_widths", d.enc_widths);
  c.disc_hidden = j.value("disc_hidden", d.disc_hidden);
  c.z_dim = j.value("z_dim", d.z_dim);
  c.eval_every = j.value("eval_every", d.eval_every);
}

// Which of the three per-iteration steps a phase runs.
struct StepMask {
  bool embed = true;
  bool synth = true;
  bool align = true;
};

struct EpochRecord {
  std::string phase;  // pretrain | train | stage-synth | stage-align
  int epoch = 0;      // 1-based within phase
  std::map<std::string, double> losses;
  bool evaluated = false;
  MetricsReport metrics;
};

struct RunResult {
  MetricsReport final_metrics;
  std::vector<EpochRecord> epochs;
};

class SalTrainer {
 public:
  SalTrainer(TrainConfig cfg, Dataset train_data, Dataset eval_data)
      : cfg_(std::move(cfg)), train_(std::move(train_data)), eval_(std::move(eval_data)) {
    cfg_.validate();
    train_.validate();
    eval_.validate();
    require(train_.schema == eval_.schema, "train and eval splits use different schemas");

    ModelConfig mc;
    mc.attr_dim = train_.schema.total_dim();
    mc.num_categories = train_.num_categories;
    mc.backbone = backbone_from_string(cfg_.backbone);
    mc.backbone_hidden = cfg_.backbone_hidden;
    mc.attr_widths = cfg_.attr_widths;
    mc.gen_widths = cfg_.gen_widths;
    mc.enc_widths = cfg_.enc_widths;
    mc.disc_hidden = cfg_.disc_hidden;
    mc.z_dim = cfg_.z_dim;
    mc.shared_heads = cfg_.shared_heads;
    train_attrs_ = train_.attribute_matrix();
    train_visuals_ = train_.visual_matrix();
    train_labels_ = train_.categories();
    mc.visual_dim = static_cast<int>(train_visuals_.cols());
    model_ = build_model(mc, cfg_.seed);

    stats_ = estimate_attribute_stats(train_);
    shuffle_rng_ = make_rng(cfg_.seed, "batch-shuffle");
    unseen_rng_ = make_rng(cfg_.seed, "unseen-attrs");
    z_rng_ = make_rng(cfg_.seed, "noise");

    const AdamConfig base{0.0, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps};
    auto add_opt = [&](const std::string& name, double lr) {
      AdamConfig ac = base;
      ac.lr = lr;
      for (auto& [gname, params] : model_.parameter_groups())
        if (gname == name) {
          opts_.emplace(name, Adam(params, ac));
          return;
        }
      fail("no parameter group named '", name, "'");
    };
    add_opt("attr_extractor", cfg_.lr_attribute_branch);
    add_opt("img_branch", cfg_.lr_image_branch);
    add_opt("gen_attr", cfg_.lr_gan);
    add_opt("gen_visual", cfg_.lr_gan);
    add_opt("disc_pair", cfg_.lr_gan);
    add_opt("enc_visual", cfg_.lr_image_branch);
    add_opt("enc_attr", cfg_.lr_attribute_branch);
    add_opt("disc_common", cfg_.lr_gan);
    add_opt("heads", cfg_.lr_heads);
  }

  const TrainConfig& config() const { return cfg_; }
  SalModel& model() { return model_; }
  const Dataset& train_data() const { return train_; }
  const Dataset& eval_data() const { return eval_; }

  // --- batching -------------------------------------------------------------

  int iterations_per_epoch() const {
    const int n = static_cast<int>(train_.size());
    const int full = n / cfg_.batch_size;
    const int tail = n % cfg_.batch_size;
    return full + (tail >= 2 ? 1 : 0);  // a 0/1-sample tail batch is dropped
  }

  std::vector<int> next_batch() {
    const int n = static_cast<int>(train_.size());
    if (order_.empty()) {
      order_.resize(static_cast<std::size_t>(n));
      std::iota(order_.begin(), order_.end(), 0);
    }
    if (cursor_ >= static_cast<std::size_t>(n) - 1) {  // fewer than 2 samples left
      std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
      cursor_ = 0;
    }
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size),
                              static_cast<std::size_t>(n) - cursor_);
    std::vector<int> idx(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                         order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
    cursor_ += take;
    // If fewer than 2 samples remain they cannot form a batch; the next call
    // starts a fresh shuffled epoch.
    return idx;
  }

  // --- one gated iteration ----------------------------------------------------

  std::map<std::string, double> iteration(StepMask mask = StepMask()) {
    auto idx = next_batch();
    std::map<std::string, double> vals;
    if (mask.embed) run_embed_step(idx, vals);
    const bool want_synth = mask.synth && cfg_.synthesis_active();
    const bool want_align = mask.align && cfg_.alignment_active();
    if (want_synth || want_align) {
      losses::MidBatch b = make_mid_batch(idx);
      if (want_synth) run_synth_step(b, vals);
      if (want_align) run_align_step(b, vals);
    }
    for (const auto& [k, v] : vals)
      require(std::isfinite(v), "training diverged: '", k, "' is non-finite at phase ", phase_,
              " epoch ", epoch_in_phase_ + 1);
    return vals;
  }

  // --- full run -----------------------------------------------------------------

  RunResult run() {
    RunResult result;
    const int total_phases = num_phases();
    for (; phase_ < total_phases; ++phase_, epoch_in_phase_ = 0) run_phase(result);
    result.final_metrics = evaluate();
    return result;
  }

  MetricsReport evaluate(bool on_train = false) {
    MetricsReport rep = evaluate_retrieval(model_, on_train ? train_ : eval_,
                                           cfg_.interpolated_ap);
    rep.variant = to_string(cfg_.variant);
    rep.seed = cfg_.seed;
    return rep;
  }

  // --- checkpointing ---------------------------------------------------------------

  void save(const std::filesystem::path& path) {
    CheckpointMeta meta;
    nlohmann::json j;
    j["train"] = cfg_;
    j["model"] = model_.cfg;
    j["progress"] = {{"phase", phase_},
                     {"epoch_in_phase", epoch_in_phase_},
                     {"pretrain_best", pretrain_best_},
                     {"pretrain_stale", pretrain_stale_},
                     {"cursor", cursor_},
                     {"order", order_}};
    meta.config_json = j.dump();
    meta.epoch = phase_ * 1000000 + epoch_in_phase_;
    meta.rng_states = {{"batch-shuffle", rng_state_string(shuffle_rng_)},
                       {"unseen-attrs", rng_state_string(unseen_rng_)},
                       {"noise", rng_state_string(z_rng_)}};
    save_checkpoint(path, model_, optimizer_map(), meta);
  }

  void load(const std::filesystem::path& path) {
    CheckpointMeta meta = load_checkpoint(path, model_, optimizer_map());
    const nlohmann::json j = nlohmann::json::parse(meta.config_json);
    const auto& p = j.at("progress");
    phase_ = p.at("phase").get<int>();
    epoch_in_phase_ = p.at("epoch_in_phase").get<int>();
    pretrain_best_ = p.at("pretrain_best").get<double>();
    pretrain_stale_ = p.at("pretrain_stale").get<int>();
    cursor_ = p.at("cursor").get<std::size_t>();
    p.at("order").get_to(order_);
    set_rng_state(shuffle_rng_, meta.rng_states.at("batch-shuffle"));
    set_rng_state(unseen_rng_, meta.rng_states.at("unseen-attrs"));
    set_rng_state(z_rng_, meta.rng_states.at("noise"));
  }

  std::map<std::string, Adam*> optimizer_map() {
    std::map<std::string, Adam*> m;
    for (auto& [name, opt] : opts_) m[name] = &opt;
    return m;
  }

  losses::MidBatch make_mid_batch(const std::vector<int>& idx) {
    losses::MidBatch b;
    gather_batch(idx, b.attrs, b.labels);
    nn::Mat raw = gather_rows(train_visuals_, idx);
    b.f_v = model_.img_branch.infer(raw);
    b.f_a = model_.attr_extractor.infer(b.attrs);
    const int u = cfg_.unseen_count();
    if (u > 0) {
      const auto unseen = sample_unseen_attributes(train_.schema, stats_, u, unseen_rng_);
      nn::Mat ua(u, train_.schema.total_dim());
      for (int i = 0; i < u; ++i)
        for (int j = 0; j < train_.schema.total_dim(); ++j)
          ua(i, j) = unseen[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(j)];
      b.attrs_ext = nn::vstack(b.attrs, ua);
      b.f_a_ext = nn::vstack(b.f_a, model_.attr_extractor.infer(ua));
      b.labels_ext = b.labels;
      b.labels_ext.insert(b.labels_ext.end(), static_cast<std::size_t>(u), -1);
    } else {
      b.attrs_ext = b.attrs;
      b.f_a_ext = b.f_a;
      b.labels_ext = b.labels;
    }
    return b;
  }

 private:
  // Phase plan per variant.  Phase 0 is always the embedding warm-up; the
  // stage-wise variant splits the main epochs into a synthesis-only block
  // followed by an alignment-only block with matching per-step update counts.
  int num_phases() const { return cfg_.variant == Variant::SalStagewise ? 3 : 2; }

  std::string phase_name(int phase) const {
    if (phase == 0) return "pretrain";
    if (cfg_.variant != Variant::SalStagewise) return "train";
    return phase == 1 ? "stage-synth" : "stage-align";
  }

  StepMask phase_mask(int phase) const {
    if (phase == 0) return {true, false, false};
    if (cfg_.variant != Variant::SalStagewise) return {true, true, true};
    if (phase == 1) return {true, true, false};
    return {false, false, true};
  }

  int phase_epoch_cap(int phase) const { return phase == 0 ? cfg_.pretrain_epochs : cfg_.epochs; }

  void run_phase(RunResult& result) {
    const StepMask mask = phase_mask(phase_);
    const std::string name = phase_name(phase_);
    const int cap = phase_epoch_cap(phase_);
    const int iters = iterations_per_epoch();
    for (; epoch_in_phase_ < cap; ) {
      std::map<std::string, double> sums;
      for (int it = 0; it < iters; ++it)
        for (const auto& [k, v] : iteration(mask)) sums[k] += v;
      for (auto& [k, v] : sums) v /= iters;
      ++epoch_in_phase_;

      EpochRecord rec;
      rec.phase = name;
      rec.epoch = epoch_in_phase_;
      rec.losses = std::move(sums);
      const bool last = epoch_in_phase_ == cap;
      bool stop = false;
      if (phase_ == 0) {
        // Convergence gate: train-split retrieval must keep improving.
        const double train_map = evaluate(true).map;
        rec.losses["pretrain_train_map"] = train_map;
        if (train_map > pretrain_best_ + 1e-4) {
          pretrain_best_ = train_map;
          pretrain_stale_ = 0;
        } else if (++pretrain_stale_ >= cfg_.pretrain_patience) {
          stop = true;
        }
      }
      if (epoch_in_phase_ % cfg_.eval_every == 0 || last || stop) {
        rec.evaluated = true;
        rec.metrics = evaluate();
      }
      result.epochs.push_back(std::move(rec));
      if (stop) break;
    }
  }

  void gather_batch(const std::vector<int>& idx, nn::Mat& attrs, std::vector<int>& labels) const {
    attrs = gather_rows(train_attrs_, idx);
    labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      labels[i] = train_labels_[static_cast<std::size_t>(idx[i])];
  }

  static nn::Mat gather_rows(const nn::Mat& src, const std::vector<int>& idx) {
    nn::Mat out(static_cast<Eigen::Index>(idx.size()), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = src.row(idx[i]);
    return out;
  }

  void run_embed_step(const std::vector<int>& idx, std::map<std::string, double>& vals) {
    nn::Mat attrs;
    std::vector<int> labels;
    gather_batch(idx, attrs, labels);
    nn::Mat raw = gather_rows(train_visuals_, idx);
    for (const char* g : {"attr_extractor", "img_branch", "enc_visual", "enc_attr", "heads"})
      opts_.at(g).zero_grad();
    const auto out = losses::embed_step_loss(model_, raw, attrs, labels, true);
    for (const char* g : {"attr_extractor", "img_branch", "enc_visual", "enc_attr", "heads"})
      opts_.at(g).step();
    vals["embed_total"] = out.total;
    vals["embed_cat_visual"] = out.visual.category;
    vals["embed_att_visual"] = out.visual.attribute;
    vals["embed_cat_attr"] = out.attribute.category;
    vals["embed_att_attr"] = out.attribute.attribute;
  }

  void run_synth_step(const losses::MidBatch& b, std::map<std::string, double>& vals) {
    const nn::Mat z_d = nn::standard_normal(b.ext_rows(), cfg_.z_dim, z_rng_);
    for (const char* g : {"gen_attr", "gen_visual", "disc_pair"}) opts_.at(g).zero_grad();
    const auto d_out = losses::synth_disc_loss(model_, b, z_d, cfg_.lambdas.gan1, true);
    opts_.at("disc_pair").step();

    const nn::Mat z_g = nn::standard_normal(b.ext_rows(), cfg_.z_dim, z_rng_);
    const nn::Mat z_c = nn::standard_normal(b.ext_rows(), cfg_.z_dim, z_rng_);
    opts_.at("gen_attr").zero_grad();
    opts_.at("gen_visual").zero_grad();
    const auto g_out = losses::synth_gen_loss(model_, b, z_g, z_c, cfg_.lambdas, true);
    opts_.at("gen_attr").step();
    opts_.at("gen_visual").step();

    vals["synth_d_objective"] = d_out.objective;
    vals["synth_d_loss"] = d_out.loss;
    vals["synth_g_attr"] = g_out.g_attr;
    vals["synth_g_visual"] = g_out.g_visual;
    vals["synth_cycle"] = g_out.cycle;
    vals["synth_consistency"] = g_out.consistency;
    vals["synth_g_total"] = g_out.total;
  }

  void run_align_step(const losses::MidBatch& b, std::map<std::string, double>& vals) {
    const bool aug = cfg_.augmentation_active();
    nn::Mat z_aug_d, z_aug_g;
    if (aug) z_aug_d = nn::standard_normal(b.ext_rows(), cfg_.z_dim, z_rng_);
    opts_.at("disc_common").zero_grad();
    const auto d_out = losses::align_disc_loss(model_, b, z_aug_d, cfg_.lambdas, true);
    opts_.at("disc_common").step();

    if (aug) z_aug_g = nn::standard_normal(b.ext_rows(), cfg_.z_dim, z_rng_);
    for (const char* g : {"enc_attr", "enc_visual", "heads"}) opts_.at(g).zero_grad();
    const auto e_out = losses::align_enc_loss(model_, b, z_aug_g, cfg_.lambdas, true);
    for (const char* g : {"enc_attr", "enc_visual", "heads"}) opts_.at(g).step();

    vals["align_d_objective"] = d_out.objective_real;
    vals["align_d_objective_aug"] = d_out.objective_aug;
    vals["align_d_loss"] = d_out.loss;
    vals["align_enc_total"] = e_out.total;
    vals["align_fool_attr"] = e_out.fool_attr;
    if (aug) {
      vals["align_fool_syn_attr"] = e_out.fool_syn_attr;
      vals["align_reveal_syn_visual"] = e_out.reveal_syn_visual;
      vals["align_embed_syn"] =
          e_out.embed_syn_attr.total + e_out.embed_syn_visual.total;
    }
  }

  TrainConfig cfg_;
  Dataset train_, eval_;
  nn::Mat train_attrs_, train_visuals_;
  std::vector<int> train_labels_;
  SalModel model_;
  std::map<std::string, Adam> opts_;
  AttributeStats stats_;
  Rng shuffle_rng_, unseen_rng_, z_rng_;
  std::vector<int> order_;
  std::size_t cursor_ = std::numeric_limits<std::size_t>::max();  // forces first shuffle
  int phase_ = 0;
  int epoch_in_phase_ = 0;
  double pretrain_best_ = -1.0;
  int pretrain_stale_ = 0;
};

}  // namespace sal
