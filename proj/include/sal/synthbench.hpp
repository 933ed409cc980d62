#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sal/dataset.hpp"
#include "sal/rng.hpp"
#include "sal/schema.hpp"
#include "sal/util.hpp"

namespace sal {

// Synthetic attribute-to-appearance benchmark: each category is a distinct
// attribute combination; its visual prototype is a fixed random nonlinear map
// of the attributes plus category-private and shared components, and samples
// scatter around the prototype with Gaussian noise.  Seen and unseen category
// sets are disjoint by construction.
struct SynthBenchConfig {
  int num_seen_categories = 50;
  int num_unseen_categories = 20;
  int samples_per_category_min = 8;
  int samples_per_category_max = 12;
  std::string schema =
      "gender|bag|hat|glasses|backpack|shorts|age:child,adult,senior|tone:dark,light,mixed";
  int raw_visual_dim = 48;
  double intra_class_noise_scale = 0.6;
  double inter_class_similarity = 0.3;
  std::uint64_t seed = 1;

  void validate() const {
    require(num_seen_categories >= 2, "need at least 2 seen categories");
    require(num_unseen_categories >= 1, "need at least 1 unseen category");
    require(samples_per_category_min >= 2, "need at least 2 samples per category");
    require(samples_per_category_max >= samples_per_category_min,
            "samples_per_category_max below min");
    require(raw_visual_dim >= 4, "raw_visual_dim must be at least 4");
    require(intra_class_noise_scale >= 0.0, "negative intra_class_noise_scale");
    require(inter_class_similarity >= 0.0 && inter_class_similarity <= 1.0,
            "inter_class_similarity must be in [0,1]");
    const AttributeSchema s = AttributeSchema::parse(schema);
    const std::uint64_t need =
        static_cast<std::uint64_t>(num_seen_categories) + num_unseen_categories;
    require(s.combination_capacity() >= need, "schema admits ", s.combination_capacity(),
            " distinct attribute combinations but ", need, " categories were requested");
  }
};

inline void to_json(nlohmann::json& j, const SynthBenchConfig& c) {
  j = nlohmann::json{{"num_seen_categories", c.num_seen_categories},
                     {"num_unseen_categories", c.num_unseen_categories},
                     {"samples_per_category_min", c.samples_per_category_min},
                     {"samples_per_category_max", c.samples_per_category_max},
                     {"schema", c.schema},
                     {"raw_visual_dim", c.raw_visual_dim},
                     {"intra_class_noise_scale", c.intra_class_noise_scale},
                     {"inter_class_similarity", c.inter_class_similarity},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SynthBenchConfig& c) {
  SynthBenchConfig defaults;
  c.num_seen_categories = j.value("num_seen_categories", defaults.num_seen_categories);
  c.num_unseen_categories = j.value("num_unseen_categories", defaults.num_unseen_categories);
  c.samples_per_category_min =
      j.value("samples_per_category_min", defaults.samples_per_category_min);
  c.samples_per_category_max =
      j.value("samples_per_category_max", defaults.samples_per_category_max);
  c.schema = j.value("schema", defaults.schema);
  c.raw_visual_dim = j.value("raw_visual_dim", defaults.raw_visual_dim);
  c.intra_class_noise_scale =
      j.value("intra_class_noise_scale", defaults.intra_class_noise_scale);
  c.inter_class_similarity = j.value("inter_class_similarity", defaults.inter_class_similarity);
  c.seed = j.value("seed", defaults.seed);
}

namespace detail {

// Draws `count` distinct attribute combinations.  Small schemas are fully
// enumerated and shuffled; large ones use rejection sampling over uniform
// per-group draws (capacity is pre-checked by SynthBenchConfig::validate).
inline std::vector<AttributeVector> draw_distinct_combinations(const AttributeSchema& schema,
                                                               std::size_t count, Rng& rng) {
  const std::uint64_t capacity = schema.combination_capacity(1ull << 20);
  require(capacity >= count, "requested ", count, " distinct combinations, schema admits ",
          capacity);
  std::vector<AttributeVector> picked;
  if (capacity <= (1ull << 20)) {
    std::vector<AttributeVector> all;
    AttributeVector cur;
    cur.values.assign(static_cast<std::size_t>(schema.total_dim()), 0);
    // Depth-first enumeration over groups in schema order.
    auto enumerate = [&](auto&& self, std::size_t g) -> void {
      if (g == schema.num_groups()) {
        all.push_back(cur);
        return;
      }
      const auto& grp = schema.groups()[g];
      const int off = schema.group_offset(g);
      for (int v = 0; v < (grp.is_exclusive() ? grp.width() : 2); ++v) {
        if (grp.is_exclusive()) {
          for (int k = 0; k < grp.width(); ++k)
            cur.values[static_cast<std::size_t>(off + k)] = (k == v);
        } else {
          cur.values[static_cast<std::size_t>(off)] = static_cast<std::uint8_t>(v);
        }
        self(self, g + 1);
      }
    };
    enumerate(enumerate, 0);
    std::shuffle(all.begin(), all.end(), rng);
    picked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    std::set<std::vector<std::uint8_t>> seen;
    while (picked.size() < count) {
      AttributeVector a;
      a.values.assign(static_cast<std::size_t>(schema.total_dim()), 0);
      for (std::size_t g = 0; g < schema.num_groups(); ++g) {
        const auto& grp = schema.groups()[g];
        const int off = schema.group_offset(g);
        if (grp.is_exclusive()) {
          std::uniform_int_distribution<int> pick(0, grp.width() - 1);
          a.values[static_cast<std::size_t>(off + pick(rng))] = 1;
        } else {
          std::uniform_int_distribution<int> coin(0, 1);
          a.values[static_cast<std::size_t>(off)] = static_cast<std::uint8_t>(coin(rng));
        }
      }
      if (seen.insert(a.values).second) picked.push_back(std::move(a));
    }
  }
  return picked;
}

}  // namespace detail

// Generates the (train, eval) datasets.  Deterministic per config+seed.
inline std::pair<Dataset, Dataset> generate_synth_benchmark(const SynthBenchConfig& cfg) {
  cfg.validate();
  const AttributeSchema schema = AttributeSchema::parse(cfg.schema);
  const int m = schema.total_dim();
  const int d = cfg.raw_visual_dim;
  const std::size_t total_cats =
      static_cast<std::size_t>(cfg.num_seen_categories) + cfg.num_unseen_categories;

  Rng combo_rng = make_rng(cfg.seed, "bench-combos");
  Rng proto_rng = make_rng(cfg.seed, "bench-prototypes");
  Rng noise_rng = make_rng(cfg.seed, "bench-noise");
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto combos = detail::draw_distinct_combinations(schema, total_cats, combo_rng);

  // Fixed attribute-to-appearance map: entries scaled so the pre-squash
  // activation has roughly unit variance regardless of attribute width.
  Eigen::MatrixXd w(d, m);
  const double w_sd = 1.0 / std::sqrt(static_cast<double>(m));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < m; ++c) w(r, c) = w_sd * gauss(proto_rng);
  Eigen::VectorXd shared(d);
  for (int r = 0; r < d; ++r) shared(r) = gauss(proto_rng);

  const double s = cfg.inter_class_similarity;
  const double private_scale = 0.5 * (1.0 - s);
  const double shared_scale = 2.0 * s;

  std::vector<Eigen::VectorXd> prototypes;
  prototypes.reserve(total_cats);
  for (std::size_t c = 0; c < total_cats; ++c) {
    Eigen::VectorXd signed_attrs(m);
    for (int j = 0; j < m; ++j) signed_attrs(j) = 2.0 * combos[c].values[static_cast<std::size_t>(j)] - 1.0;
    Eigen::VectorXd priv(d);
    for (int r = 0; r < d; ++r) priv(r) = gauss(proto_rng);
    Eigen::VectorXd pre = w * signed_attrs + private_scale * priv + shared_scale * shared;
    prototypes.push_back(pre.array().tanh().matrix());
  }

  auto build = [&](std::size_t cat_begin, std::size_t cat_end) {
    std::vector<std::pair<VisualSource, AttributeVector>> records;
    std::uniform_int_distribution<int> n_samples(cfg.samples_per_category_min,
                                                 cfg.samples_per_category_max);
    for (std::size_t c = cat_begin; c < cat_end; ++c) {
      const int n = n_samples(noise_rng);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(d);
        for (int r = 0; r < d; ++r) x(r) = gauss(noise_rng);
        x = prototypes[c] + cfg.intra_class_noise_scale * x;
        records.emplace_back(VisualSource(std::move(x)), combos[c]);
      }
    }
    return derive_categories(schema, std::move(records));
  };

  Dataset train = build(0, static_cast<std::size_t>(cfg.num_seen_categories));
  Dataset eval = build(static_cast<std::size_t>(cfg.num_seen_categories), total_cats);
  require(train.num_categories == cfg.num_seen_categories, "seen category count mismatch");
  require(eval.num_categories == cfg.num_unseen_categories, "unseen category count mismatch");
  return {std::move(train), std::move(eval)};
}

// Writes train/eval manifests, feature sidecars, and a config echo to out_dir.
inline void write_synth_benchmark(const SynthBenchConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  auto [train, eval] = generate_synth_benchmark(cfg);
  std::filesystem::create_directories(out_dir);
  write_manifest(train, out_dir / "train.manifest", "train.feat");
  write_manifest(eval, out_dir / "eval.manifest", "eval.feat");
  std::ofstream os(out_dir / "benchmark_config.json");
  require(os.good(), "cannot write benchmark_config.json in ", out_dir.string());
  os << nlohmann::json(cfg).dump(2) << "\n";
}

}  // namespace sal
