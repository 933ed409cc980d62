#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sal/rng.hpp"
#include "sal/schema.hpp"
#include "sal/util.hpp"

namespace sal {

// A sample's visual side: either a path to an image file (resolved by an
// external backbone) or a precomputed raw feature vector.
using VisualSource = std::variant<std::string, Eigen::VectorXd>;

struct Sample {
  VisualSource visual;
  AttributeVector attrs;
  int category = -1;  // dense id within the owning dataset
};

enum class VisualMode { Precomputed, Image };

struct Dataset {
  AttributeSchema schema;
  std::vector<Sample> samples;
  int num_categories = 0;
  VisualMode visual_mode = VisualMode::Precomputed;

  std::size_t size() const { return samples.size(); }

  // N x m matrix of 0/1 attribute slots.
  Eigen::MatrixXd attribute_matrix() const {
    Eigen::MatrixXd a(samples.size(), schema.total_dim());
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (int j = 0; j < schema.total_dim(); ++j)
        a(static_cast<Eigen::Index>(i), j) = samples[i].attrs.values[j];
    return a;
  }

  // N x d matrix of precomputed raw visual features.  Throws when any sample
  // references an image file instead.
  Eigen::MatrixXd visual_matrix() const {
    require(!samples.empty(), "visual_matrix on empty dataset");
    const auto* first = std::get_if<Eigen::VectorXd>(&samples.front().visual);
    require(first != nullptr, "visual_matrix requires precomputed features, sample 0 "
                              "references an image file");
    Eigen::MatrixXd v(samples.size(), first->size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto* f = std::get_if<Eigen::VectorXd>(&samples[i].visual);
      require(f != nullptr, "visual_matrix requires precomputed features, sample ", i,
              " references an image file");
      require(f->size() == first->size(), "raw feature length mismatch at sample ", i, ": ",
              f->size(), " vs ", first->size());
      v.row(static_cast<Eigen::Index>(i)) = f->transpose();
    }
    return v;
  }

  std::vector<int> categories() const {
    std::vector<int> y(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) y[i] = samples[i].category;
    return y;
  }

  // Checks attribute validity, category density (ids 0..num_categories-1, all
  // present), and consistent visual mode.
  void validate() const {
    require(!samples.empty(), "dataset has no samples");
    std::vector<char> seen(static_cast<std::size_t>(std::max(num_categories, 0)), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::ostringstream ctx;
      ctx << "sample " << i;
      validate_attributes(schema, samples[i].attrs, ctx.str());
      require(samples[i].category >= 0 && samples[i].category < num_categories, "sample ", i,
              " has category ", samples[i].category, " outside [0, ", num_categories, ")");
      seen[static_cast<std::size_t>(samples[i].category)] = 1;
      const bool is_pre = std::holds_alternative<Eigen::VectorXd>(samples[i].visual);
      require(is_pre == (visual_mode == VisualMode::Precomputed), "sample ", i,
              " visual source does not match dataset visual mode");
    }
    for (int c = 0; c < num_categories; ++c)
      require(seen[static_cast<std::size_t>(c)], "category id ", c, " has no samples");
  }
};

// Assigns dense category ids by first occurrence of each distinct attribute
// combination, in sample order.
inline Dataset derive_categories(AttributeSchema schema,
                                 std::vector<std::pair<VisualSource, AttributeVector>> records) {
  Dataset ds;
  ds.schema = std::move(schema);
  require(!records.empty(), "derive_categories on empty record list");
  ds.visual_mode = std::holds_alternative<Eigen::VectorXd>(records.front().first)
                       ? VisualMode::Precomputed
                       : VisualMode::Image;
  std::map<std::vector<std::uint8_t>, int> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& [vis, attrs] = records[i];
    std::ostringstream ctx;
    ctx << "record " << i;
    validate_attributes(ds.schema, attrs, ctx.str());
    auto [it, inserted] = ids.emplace(attrs.values, static_cast<int>(ids.size()));
    ds.samples.push_back(Sample{std::move(vis), std::move(attrs), it->second});
    (void)inserted;
  }
  ds.num_categories = static_cast<int>(ids.size());
  ds.validate();
  return ds;
}

// Splits by category: every sample of a category lands on one side, so the
// two sides share no attribute combination.  Category ids are re-densified
// per side preserving sample order.
inline std::pair<Dataset, Dataset> split_by_category(const Dataset& ds, double train_fraction,
                                                     std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must be in (0,1), got ",
          train_fraction);
  require(ds.num_categories >= 2, "split_by_category needs at least 2 categories, dataset has ",
          ds.num_categories);
  std::vector<int> order(static_cast<std::size_t>(ds.num_categories));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, "category-split");
  std::shuffle(order.begin(), order.end(), rng);
  const int want = static_cast<int>(std::llround(train_fraction * ds.num_categories));
  const int n_train = std::clamp(want, 1, ds.num_categories - 1);
  std::vector<char> to_train(static_cast<std::size_t>(ds.num_categories), 0);
  for (int i = 0; i < n_train; ++i) to_train[static_cast<std::size_t>(order[i])] = 1;

  auto build_side = [&](bool train_side) {
    Dataset side;
    side.schema = ds.schema;
    side.visual_mode = ds.visual_mode;
    std::map<int, int> remap;
    for (const auto& s : ds.samples) {
      if (static_cast<bool>(to_train[static_cast<std::size_t>(s.category)]) != train_side)
        continue;
      auto [it, ins] = remap.emplace(s.category, static_cast<int>(remap.size()));
      (void)ins;
      Sample copy = s;
      copy.category = it->second;
      side.samples.push_back(std::move(copy));
    }
    side.num_categories = static_cast<int>(remap.size());
    side.validate();
    return side;
  };
  return {build_side(true), build_side(false)};
}

// Per-group empirical probabilities estimated from a training split: binary
// groups hold {P(active)}, exclusive groups hold a distribution over values.
struct AttributeStats {
  std::vector<std::vector<double>> group_probs;
};

inline AttributeStats estimate_attribute_stats(const Dataset& train) {
  require(!train.samples.empty(), "estimate_attribute_stats on empty dataset");
  AttributeStats st;
  const double n = static_cast<double>(train.samples.size());
  for (std::size_t g = 0; g < train.schema.num_groups(); ++g) {
    const auto& grp = train.schema.groups()[g];
    std::vector<double> probs(static_cast<std::size_t>(grp.width()), 0.0);
    for (const auto& s : train.samples)
      for (int k = 0; k < grp.width(); ++k)
        probs[static_cast<std::size_t>(k)] += s.attrs.values[train.schema.group_offset(g) + k];
    for (auto& p : probs) p /= n;
    st.group_probs.push_back(std::move(probs));
  }
  return st;
}

// Draws attribute combinations from the per-group marginals: one Bernoulli
// trial per binary group, one single-trial multinomial per exclusive group.
// Every draw is schema-valid by construction.
inline std::vector<AttributeVector> sample_unseen_attributes(const AttributeSchema& schema,
                                                             const AttributeStats& stats,
                                                             int count, Rng& rng) {
  require(stats.group_probs.size() == schema.num_groups(),
          "attribute stats cover ", stats.group_probs.size(), " groups, schema has ",
          schema.num_groups());
  require(count >= 0, "negative sample count");
  std::vector<std::bernoulli_distribution> coins;
  std::vector<std::discrete_distribution<int>> dice;
  for (std::size_t g = 0; g < schema.num_groups(); ++g) {
    const auto& grp = schema.groups()[g];
    const auto& probs = stats.group_probs[g];
    require(static_cast<int>(probs.size()) == grp.width(), "stats width mismatch in group '",
            grp.name, "'");
    if (grp.is_exclusive()) {
      double total = 0.0;
      for (double p : probs) {
        require(p >= 0.0, "negative probability in group '", grp.name, "'");
        total += p;
      }
      require(total > 0.0, "all-zero probabilities in exclusive group '", grp.name, "'");
      dice.emplace_back(probs.begin(), probs.end());
    } else {
      require(probs[0] >= 0.0 && probs[0] <= 1.0, "binary probability out of [0,1] in group '",
              grp.name, "'");
      coins.emplace_back(probs[0]);
    }
  }
  std::vector<AttributeVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    AttributeVector a;
    a.values.assign(static_cast<std::size_t>(schema.total_dim()), 0);
    std::size_t coin_i = 0, die_i = 0;
    for (std::size_t g = 0; g < schema.num_groups(); ++g) {
      const auto& grp = schema.groups()[g];
      const int off = schema.group_offset(g);
      if (grp.is_exclusive()) {
        a.values[static_cast<std::size_t>(off + dice[die_i++](rng))] = 1;
      } else {
        a.values[static_cast<std::size_t>(off)] = coins[coin_i++](rng) ? 1 : 0;
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest and raw-feature-file input/output.
//
// Manifest layout (text, one record per line):
//   line 1:  #schema: <schema grammar text>
//   line 2:  #visual: mode=precomputed file=<sidecar>   or   mode=image
//   rest:    <visual>,<slot>,<slot>,...   where <visual> is @<row> into the
//            sidecar feature file (precomputed) or an image path (image).
//
// Feature sidecar (binary, little-endian):
//   magic "SALFEAT\x01", u32 dtype (8=f64, 4=f32), u64 rows, u64 cols,
//   then rows*cols values row-major.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(is.good(), "truncated input while reading ", what);
  return v;
}

}  // namespace detail

inline constexpr char kFeatureMagic[8] = {'S', 'A', 'L', 'F', 'E', 'A', 'T', '\x01'};

inline void write_feature_file(const std::filesystem::path& path, const Eigen::MatrixXd& rows) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open feature file for writing: ", path.string());
  os.write(kFeatureMagic, sizeof(kFeatureMagic));
  detail::write_pod<std::uint32_t>(os, 8);
  detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(rows.rows()));
  detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(rows.cols()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index c = 0; c < rows.cols(); ++c) detail::write_pod<double>(os, rows(r, c));
  require(os.good(), "write failed for feature file: ", path.string());
}

inline Eigen::MatrixXd read_feature_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open feature file: ", path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  require(is.good() && std::equal(magic, magic + 8, kFeatureMagic), "bad magic in feature file: ",
          path.string());
  const auto dtype = detail::read_pod<std::uint32_t>(is, "feature dtype");
  require(dtype == 8 || dtype == 4, "unsupported feature dtype code ", dtype, " in ",
          path.string());
  const auto rows = detail::read_pod<std::uint64_t>(is, "feature row count");
  const auto cols = detail::read_pod<std::uint64_t>(is, "feature column count");
  require(rows > 0 && cols > 0, "empty feature file: ", path.string());
  require(rows < (1ull << 32) && cols < (1ull << 20), "implausible feature shape in ",
          path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r)
    for (std::uint64_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          dtype == 8 ? detail::read_pod<double>(is, "feature value")
                     : static_cast<double>(detail::read_pod<float>(is, "feature value"));
  return m;
}

// Writes `ds` as a manifest; precomputed features go to a sidecar named
// `feature_file` in the manifest's directory.
inline void write_manifest(const Dataset& ds, const std::filesystem::path& manifest_path,
                           const std::string& feature_file = {}) {
  ds.validate();
  std::ofstream os(manifest_path);
  require(os.good(), "cannot open manifest for writing: ", manifest_path.string());
  os << "#schema: " << ds.schema.format() << "\n";
  if (ds.visual_mode == VisualMode::Precomputed) {
    require(!feature_file.empty(), "precomputed manifest needs a feature_file name");
    os << "#visual: mode=precomputed file=" << feature_file << "\n";
    write_feature_file(manifest_path.parent_path() / feature_file, ds.visual_matrix());
  } else {
    os << "#visual: mode=image\n";
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (ds.visual_mode == VisualMode::Precomputed)
      os << '@' << i;
    else
      os << std::get<std::string>(ds.samples[i].visual);
    for (auto v : ds.samples[i].attrs.values) os << ',' << static_cast<int>(v);
    os << "\n";
  }
  require(os.good(), "write failed for manifest: ", manifest_path.string());
}

// Loads a manifest written by write_manifest (categories re-derived from
// attribute combinations).  Errors name the offending row and field.
inline Dataset load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream is(manifest_path);
  require(is.good(), "cannot open manifest: ", manifest_path.string());
  std::string line;

  require(static_cast<bool>(std::getline(is, line)), "manifest missing schema header: ",
          manifest_path.string());
  std::string_view l1 = trim(line);
  require(l1.rfind("#schema:", 0) == 0, "manifest line 1 must start with '#schema:'");
  AttributeSchema schema = AttributeSchema::parse(l1.substr(8));

  require(static_cast<bool>(std::getline(is, line)), "manifest missing visual header: ",
          manifest_path.string());
  std::string_view l2 = trim(line);
  require(l2.rfind("#visual:", 0) == 0, "manifest line 2 must start with '#visual:'");
  l2 = trim(l2.substr(8));
  VisualMode mode;
  Eigen::MatrixXd features;
  if (l2.rfind("mode=precomputed", 0) == 0) {
    mode = VisualMode::Precomputed;
    const auto fpos = l2.find("file=");
    require(fpos != std::string_view::npos, "precomputed visual header missing file=");
    const std::string fname{trim(l2.substr(fpos + 5))};
    features = read_feature_file(manifest_path.parent_path() / fname);
  } else if (l2 == "mode=image") {
    mode = VisualMode::Image;
  } else {
    fail("unknown visual mode in manifest header: '", l2, "'");
  }

  std::vector<std::pair<VisualSource, AttributeVector>> records;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    std::string_view t = trim(line);
    if (t.empty()) continue;
    ++row;
    auto fields = split(t, ',');
    require(fields.size() == 1 + static_cast<std::size_t>(schema.total_dim()), "row ", row,
            ": expected ", 1 + schema.total_dim(), " comma-separated fields, got ",
            fields.size());
    VisualSource vis;
    const std::string_view v0 = trim(fields[0]);
    if (mode == VisualMode::Precomputed) {
      require(!v0.empty() && v0[0] == '@', "row ", row, ": precomputed visual field must be @<row>");
      std::size_t idx = 0;
      try {
        idx = std::stoull(std::string(v0.substr(1)));
      } catch (const std::exception&) {
        fail("row ", row, ": bad feature row reference '", v0, "'");
      }
      require(idx < static_cast<std::size_t>(features.rows()), "row ", row,
              ": feature row ", idx, " out of range (file has ", features.rows(), " rows)");
      vis = Eigen::VectorXd(features.row(static_cast<Eigen::Index>(idx)).transpose());
    } else {
      require(!v0.empty(), "row ", row, ": empty image path");
      vis = std::string(v0);
    }
    AttributeVector attrs;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const std::string_view fv = trim(fields[f]);
      require(fv == "0" || fv == "1", "row ", row, ": attribute slot ", f - 1,
              " must be 0 or 1, got '", fv, "'");
      attrs.values.push_back(fv == "1" ? 1 : 0);
    }
    std::ostringstream ctx;
    ctx << "row " << row;
    validate_attributes(schema, attrs, ctx.str());
    records.emplace_back(std::move(vis), std::move(attrs));
  }
  require(!records.empty(), "manifest has no data rows: ", manifest_path.string());
  return derive_categories(std::move(schema), std::move(records));
}

}  // namespace sal
