#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sal/nn.hpp"
#include "sal/rng.hpp"
#include "sal/util.hpp"

namespace sal {

// How raw visual inputs become the mid-level visual feature.
//  - Precomputed: inputs are fixed backbone features; one trainable affine
//    projection + squash maps them to the mid width.
//  - ToyMlp: inputs are raw vectors; a small trainable stack maps them to the
//    mid width (hidden widths configurable).
enum class BackboneKind { Precomputed, ToyMlp };

inline std::string to_string(BackboneKind k) {
  return k == BackboneKind::Precomputed ? "precomputed" : "toy-mlp";
}

inline BackboneKind backbone_from_string(const std::string& s) {
  if (s == "precomputed") return BackboneKind::Precomputed;
  if (s == "toy-mlp") return BackboneKind::ToyMlp;
  fail("unknown backbone kind '", s, "' (expected precomputed or toy-mlp)");
}

struct ModelConfig {
  int attr_dim = 0;        // flat attribute slots (m)
  int visual_dim = 0;      // raw visual input width (d)
  int num_categories = 0;  // training categories (M)
  BackboneKind backbone = BackboneKind::ToyMlp;
  std::vector<int> backbone_hidden = {256};

  std::vector<int> attr_widths = {64, 128, 256, 512};
  std::vector<int> gen_widths = {256, 128, 256, 512};
  std::vector<int> enc_widths = {512, 256, 128};
  std::vector<int> disc_hidden = {512, 256};
  int z_dim = 64;
  bool shared_heads = true;

  int mid_dim() const { return attr_widths.back(); }
  int embed_dim() const { return enc_widths.back(); }

  void validate() const {
    require(attr_dim > 0, "model config: attr_dim must be positive");
    require(visual_dim > 0, "model config: visual_dim must be positive");
    require(num_categories > 0, "model config: num_categories must be positive");
    require(!attr_widths.empty() && !gen_widths.empty() && !enc_widths.empty(),
            "model config: stack widths must be non-empty");
    require(gen_widths.back() == mid_dim(),
            "model config: generator output width must equal the mid-level width");
    require(z_dim > 0, "model config: z_dim must be positive");
    for (int w : attr_widths) require(w > 0, "non-positive attr width");
    for (int w : gen_widths) require(w > 0, "non-positive generator width");
    for (int w : enc_widths) require(w > 0, "non-positive encoder width");
    for (int w : disc_hidden) require(w > 0, "non-positive discriminator width");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"attr_dim", c.attr_dim},
                     {"visual_dim", c.visual_dim},
                     {"num_categories", c.num_categories},
                     {"backbone", to_string(c.backbone)},
                     {"backbone_hidden", c.backbone_hidden},
                     {"attr_widths", c.attr_widths},
                     {"gen_widths", c.gen_widths},
                     {"enc_widths", c.enc_widths},
                     {"disc_hidden", c.disc_hidden},
                     {"z_dim", c.z_dim},
                     {"shared_heads", c.shared_heads}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.attr_dim = j.value("attr_dim", d.attr_dim);
  c.visual_dim = j.value("visual_dim", d.visual_dim);
  c.num_categories = j.value("num_categories", d.num_categories);
  c.backbone = backbone_from_string(j.value("backbone", to_string(d.backbone)));
  c.backbone_hidden = j.value("backbone_hidden", d.backbone_hidden);
  c.attr_widths = j.value("attr_widths", d.attr_widths);
  c.gen_widths = j.value("gen_widths", d.gen_widths);
  c.enc_widths = j.value("enc_widths", d.enc_widths);
  c.disc_hidden = j.value("disc_hidden", d.disc_hidden);
  c.z_dim = j.value("z_dim", d.z_dim);
  c.shared_heads = j.value("shared_heads", d.shared_heads);
}

enum class Branch { Visual, Attribute };

// All networks of the model.  Naming mirrors the roles: two mid-level
// extractors, two cross-modal generators with a pair discriminator, two
// common-space encoders with a common-space discriminator, and classifier
// heads on the common space.
struct SalModel {
  ModelConfig cfg;

  nn::Mlp attr_extractor;  // attributes -> mid-level attribute feature
  nn::Mlp img_branch;      // raw visual -> mid-level visual feature
  nn::Mlp gen_attr;        // mid visual -> synthetic mid attribute feature
  nn::Mlp gen_visual;      // [mid attribute, z] -> synthetic mid visual feature
  nn::Mlp disc_pair;       // [attr feature | visual feature] -> real/fake score
  nn::Mlp enc_visual;      // mid visual -> common embedding
  nn::Mlp enc_attr;        // mid attribute -> common embedding
  nn::Mlp disc_common;     // common embedding -> modality score
  nn::Mlp head_cat_v, head_att_v;  // shared heads when cfg.shared_heads
  nn::Mlp head_cat_a, head_att_a;  // per-branch heads otherwise

  nn::Mlp& category_head(Branch b) {
    return (cfg.shared_heads || b == Branch::Visual) ? head_cat_v : head_cat_a;
  }
  nn::Mlp& attribute_head(Branch b) {
    return (cfg.shared_heads || b == Branch::Visual) ? head_att_v : head_att_a;
  }

  // Stable module partition for optimizers, checkpoints, and update audits.
  std::vector<std::pair<std::string, std::vector<nn::Param*>>> parameter_groups() {
    std::vector<std::pair<std::string, std::vector<nn::Param*>>> groups;
    groups.emplace_back("attr_extractor", attr_extractor.params());
    groups.emplace_back("img_branch", img_branch.params());
    groups.emplace_back("gen_attr", gen_attr.params());
    groups.emplace_back("gen_visual", gen_visual.params());
    groups.emplace_back("disc_pair", disc_pair.params());
    groups.emplace_back("enc_visual", enc_visual.params());
    groups.emplace_back("enc_attr", enc_attr.params());
    groups.emplace_back("disc_common", disc_common.params());
    std::vector<nn::Param*> heads = head_cat_v.params();
    for (auto* p : head_att_v.params()) heads.push_back(p);
    if (!cfg.shared_heads) {
      for (auto* p : head_cat_a.params()) heads.push_back(p);
      for (auto* p : head_att_a.params()) heads.push_back(p);
    }
    groups.emplace_back("heads", std::move(heads));
    return groups;
  }

  std::uint64_t group_digest(const std::string& group_name) {
    for (auto& [name, params] : parameter_groups()) {
      if (name != group_name) continue;
      std::uint64_t h = fnv1a64(nullptr, 0);
      for (nn::Param* p : params) {
        h = fnv1a64(p->name.data(), p->name.size(), h);
        for (Eigen::Index i = 0; i < p->value.rows(); ++i)
          for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
            const double v = p->value(i, j);
            h = fnv1a64(&v, sizeof(v), h);
          }
      }
      return h;
    }
    fail("unknown parameter group '", group_name, "'");
  }

  std::vector<std::pair<std::string, std::uint64_t>> all_digests() {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    for (auto& [name, params] : parameter_groups()) {
      (void)params;
      out.emplace_back(name, group_digest(name));
    }
    return out;
  }
};

inline SalModel build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SalModel m;
  m.cfg = cfg;
  const int mid = cfg.mid_dim();
  const int emb = cfg.embed_dim();

  Rng rng = make_rng(seed, "model-init");
  m.attr_extractor = nn::make_feature_stack(cfg.attr_dim, cfg.attr_widths, "attr_extractor", rng);
  if (cfg.backbone == BackboneKind::Precomputed) {
    m.img_branch = nn::make_feature_stack(cfg.visual_dim, {mid}, "img_branch", rng);
  } else {
    std::vector<int> widths = cfg.backbone_hidden;
    widths.push_back(mid);
    m.img_branch = nn::make_feature_stack(cfg.visual_dim, widths, "img_branch", rng);
  }
  m.gen_attr = nn::make_feature_stack(mid, cfg.gen_widths, "gen_attr", rng);
  m.gen_visual = nn::make_feature_stack(mid + cfg.z_dim, cfg.gen_widths, "gen_visual", rng);
  m.disc_pair = nn::make_disc_stack(2 * mid, cfg.disc_hidden, "disc_pair", rng);
  m.enc_visual = nn::make_feature_stack(mid, cfg.enc_widths, "enc_visual", rng);
  m.enc_attr = nn::make_feature_stack(mid, cfg.enc_widths, "enc_attr", rng);
  m.disc_common = nn::make_disc_stack(emb, cfg.disc_hidden, "disc_common", rng);
  m.head_cat_v = nn::make_affine_head(emb, cfg.num_categories, "head_cat", rng);
  m.head_att_v = nn::make_affine_head(emb, cfg.attr_dim, "head_att", rng);
  if (!cfg.shared_heads) {
    m.head_cat_a = nn::make_affine_head(emb, cfg.num_categories, "head_cat_a", rng);
    m.head_att_a = nn::make_affine_head(emb, cfg.attr_dim, "head_att_a", rng);
  }
  return m;
}

// --- inference-time feature ops (eval mode, no state updates) --------------

inline nn::Mat extract_attribute_features(SalModel& m, const nn::Mat& attrs) {
  return m.attr_extractor.infer(attrs);
}

inline nn::Mat extract_image_features(SalModel& m, const nn::Mat& raw_visual) {
  return m.img_branch.infer(raw_visual);
}

inline nn::Mat embed_attribute_features(SalModel& m, const nn::Mat& mid_attr) {
  return m.enc_attr.infer(mid_attr);
}

inline nn::Mat embed_visual_features(SalModel& m, const nn::Mat& mid_visual) {
  return m.enc_visual.infer(mid_visual);
}

}  // namespace sal
