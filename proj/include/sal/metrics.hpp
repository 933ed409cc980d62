#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sal/dataset.hpp"
#include "sal/model.hpp"
#include "sal/util.hpp"

namespace sal {

// One query's retrieval result: gallery indices ordered by descending cosine
// similarity (ties broken by ascending gallery index), with parallel
// relevance flags.
struct Ranking {
  int query_id = -1;
  std::vector<int> order;
  std::vector<char> relevant_at_rank;

  int num_relevant() const {
    return static_cast<int>(std::count(relevant_at_rank.begin(), relevant_at_rank.end(), 1));
  }
};

// Cosine similarity; an all-zero vector on either side scores -1 and bumps
// *zero_norm_count so callers can surface a warning.
inline double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                int* zero_norm_count = nullptr) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    if (zero_norm_count) ++*zero_norm_count;
    return -1.0;
  }
  return a.dot(b) / (na * nb);
}

inline Ranking rank_gallery(const Eigen::VectorXd& query_emb, const nn::Mat& gallery_embs,
                            const std::vector<char>& relevant_by_index, int query_id,
                            int* zero_norm_count = nullptr) {
  require(static_cast<std::size_t>(gallery_embs.rows()) == relevant_by_index.size(),
          "gallery size mismatch: ", gallery_embs.rows(), " embeddings vs ",
          relevant_by_index.size(), " relevance flags");
  require(gallery_embs.rows() > 0, "empty gallery");
  const Eigen::Index n = gallery_embs.rows();
  std::vector<double> sim(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    sim[static_cast<std::size_t>(i)] =
        cosine_similarity(query_emb, gallery_embs.row(i).transpose(), zero_norm_count);
  Ranking r;
  r.query_id = query_id;
  r.order.resize(static_cast<std::size_t>(n));
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
    return sim[static_cast<std::size_t>(a)] > sim[static_cast<std::size_t>(b)];
  });
  r.relevant_at_rank.resize(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < r.order.size(); ++k)
    r.relevant_at_rank[k] = relevant_by_index[static_cast<std::size_t>(r.order[k])];
  return r;
}

// Fraction of queries with at least one relevant item in the top k.  Queries
// with no relevant gallery item are excluded from the denominator and counted
// into *excluded_queries.
inline double cmc_at_k(const std::vector<Ranking>& rankings, int k,
                       int* excluded_queries = nullptr) {
  require(k >= 1, "cmc rank threshold must be >= 1, got ", k);
  int usable = 0, hits = 0;
  for (const auto& r : rankings) {
    if (r.num_relevant() == 0) {
      if (excluded_queries) ++*excluded_queries;
      continue;
    }
    ++usable;
    const std::size_t upto = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                   r.relevant_at_rank.size());
    for (std::size_t i = 0; i < upto; ++i)
      if (r.relevant_at_rank[i]) {
        ++hits;
        break;
      }
  }
  return usable == 0 ? 0.0 : static_cast<double>(hits) / usable;
}

// Non-interpolated average precision: mean over relevant positions of the
// precision at each relevant rank.  `interpolated` switches to the
// running-maximum variant.
inline double average_precision(const Ranking& r, bool interpolated = false) {
  const int total_rel = r.num_relevant();
  if (total_rel == 0) return 0.0;
  double sum = 0.0;
  int rel_seen = 0;
  std::vector<double> prec_at_rel;
  for (std::size_t i = 0; i < r.relevant_at_rank.size(); ++i) {
    if (!r.relevant_at_rank[i]) continue;
    ++rel_seen;
    prec_at_rel.push_back(static_cast<double>(rel_seen) / static_cast<double>(i + 1));
  }
  if (interpolated) {
    double best = 0.0;
    for (std::size_t i = prec_at_rel.size(); i-- > 0;) {
      best = std::max(best, prec_at_rel[i]);
      prec_at_rel[i] = best;
    }
  }
  for (double p : prec_at_rel) sum += p;
  return sum / static_cast<double>(total_rel);
}

// Mean over queries that have at least one relevant gallery item.
inline double mean_average_precision(const std::vector<Ranking>& rankings,
                                     bool interpolated = false,
                                     int* excluded_queries = nullptr) {
  int usable = 0;
  double sum = 0.0;
  for (const auto& r : rankings) {
    if (r.num_relevant() == 0) {
      if (excluded_queries) ++*excluded_queries;
      continue;
    }
    ++usable;
    sum += average_precision(r, interpolated);
  }
  return usable == 0 ? 0.0 : sum / usable;
}

struct MetricsReport {
  double map = 0.0;
  double cmc1 = 0.0;
  double cmc5 = 0.0;
  double cmc10 = 0.0;
  int num_queries = 0;
  int num_gallery = 0;
  int excluded_queries = 0;    // queries with no relevant gallery item
  int zero_norm_embeddings = 0;
  std::string variant;
  std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"map", r.map},
                     {"cmc1", r.cmc1},
                     {"cmc5", r.cmc5},
                     {"cmc10", r.cmc10},
                     {"num_queries", r.num_queries},
                     {"num_gallery", r.num_gallery},
                     {"excluded_queries", r.excluded_queries},
                     {"zero_norm_embeddings", r.zero_norm_embeddings},
                     {"variant", r.variant},
                     {"seed", r.seed}};
}

// Attribute-query retrieval over a dataset: one query per distinct category
// (its attribute combination, first occurrence order), gallery = every sample
// embedded through the visual pathway.
inline MetricsReport evaluate_retrieval(SalModel& model, const Dataset& data,
                                        bool interpolated_ap = false) {
  require(!data.samples.empty(), "evaluate_retrieval on empty dataset");
  const nn::Mat gallery_mid = extract_image_features(model, data.visual_matrix());
  const nn::Mat gallery_emb = embed_visual_features(model, gallery_mid);

  std::vector<int> first_row_of_cat(static_cast<std::size_t>(data.num_categories), -1);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    int& slot = first_row_of_cat[static_cast<std::size_t>(data.samples[i].category)];
    if (slot < 0) slot = static_cast<int>(i);
  }

  nn::Mat query_attrs(data.num_categories, data.schema.total_dim());
  for (int c = 0; c < data.num_categories; ++c) {
    const auto& a = data.samples[static_cast<std::size_t>(first_row_of_cat[
        static_cast<std::size_t>(c)])].attrs;
    for (int j = 0; j < data.schema.total_dim(); ++j)
      query_attrs(c, j) = a.values[static_cast<std::size_t>(j)];
  }
  const nn::Mat query_mid = extract_attribute_features(model, query_attrs);
  const nn::Mat query_emb = embed_attribute_features(model, query_mid);

  MetricsReport rep;
  rep.num_queries = data.num_categories;
  rep.num_gallery = static_cast<int>(data.samples.size());
  std::vector<Ranking> rankings;
  rankings.reserve(static_cast<std::size_t>(data.num_categories));
  for (int c = 0; c < data.num_categories; ++c) {
    std::vector<char> relevant(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i)
      relevant[i] = data.samples[i].category == c;
    rankings.push_back(rank_gallery(query_emb.row(c).transpose(), gallery_emb, relevant, c,
                                    &rep.zero_norm_embeddings));
  }
  rep.map = mean_average_precision(rankings, interpolated_ap, &rep.excluded_queries);
  rep.cmc1 = cmc_at_k(rankings, 1);
  rep.cmc5 = cmc_at_k(rankings, 5);
  rep.cmc10 = cmc_at_k(rankings, 10);
  return rep;
}

}  // namespace sal
