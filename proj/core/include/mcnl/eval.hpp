#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcnl/dataset.hpp"
#include "mcnl/embedder.hpp"
#include "mcnl/matrix.hpp"

namespace mcnl {

// Row metadata for embedded query/gallery/feature matrices.
struct EvalMeta {
  std::vector<int> ids;
  std::vector<int> cams;
};

struct CmcResult {
  std::vector<double> cmc;  // cmc[k-1] = fraction of queries with a hit in top k
  double map = 0.0;
  int n_queries = 0;         // queries actually scored
  int n_dropped = 0;         // queries with no valid relevant entry

  double rank(int k) const;  // cmc at rank k, clamped to the curve length
};

// Cross-camera retrieval protocol. For each query, gallery entries with the
// same identity AND same camera are junk and excluded; the rest are ranked by
// ascending Euclidean distance (ties by gallery index); a gallery entry is
// relevant iff it has the query identity. AP per query is the mean of
// precision-at-r over the relevant positions r. Queries with zero valid
// relevant entries are dropped and counted.
CmcResult cmc_map(const Matrix& query_emb, const EvalMeta& query_meta, const Matrix& gallery_emb,
                  const EvalMeta& gallery_meta);

// Calinski-Harabasz statistic with cameras as clusters:
//   PF = (SSB / (k - 1)) / (SSW / (n - k))
// Returns +inf when the within-camera scatter is exactly zero. Lower values
// mean the features carry less camera information.
double pseudo_f(const Matrix& features, const std::vector<int>& camera_labels);

// Fraction of anchors whose globally nearest different-identity entry lies in
// a different camera (ties to the lowest index). Anchors that lack a
// different-identity entry in their own camera or in another camera are
// skipped; *n_skipped reports how many.
double xcam_nn_prob(const Matrix& features, const EvalMeta& meta, int* n_skipped = nullptr);

// Full evaluation summary. JSON field names are fixed:
// rank1, rank5, rank10, map, pseudo_f, xcam_nn_prob, n_queries
// (plus n_dropped_queries, n_skipped_anchors). A non-finite pseudo_f is
// serialized as the string "inf".
struct EvalReport {
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  double map = 0.0;
  double pseudo_f = 0.0;
  double xcam_nn_prob = 0.0;
  int n_queries = 0;
  int n_dropped_queries = 0;
  int n_skipped_anchors = 0;
};

std::string eval_report_to_json(const EvalReport& r);
EvalReport eval_report_from_json(const std::string& text);

// Embeds query and gallery and computes the report. pseudo_f and xcam_nn_prob
// run on the combined test features; when 0 < pseudo_f_sample < n, pseudo_f
// uses that many features drawn deterministically from sample_seed.
EvalReport evaluate_model(const Embedder& e, const Dataset& query, const Dataset& gallery,
                          int pseudo_f_sample = 0, std::uint64_t sample_seed = 0);

// Writes `id,camera,e0,...,e{d_emb-1}` rows of embedded inputs.
void export_features(const Embedder& e, const Dataset& d, const std::string& path);

Matrix embed_dataset(const Embedder& e, const Dataset& d);
EvalMeta dataset_meta(const Dataset& d);

}  // namespace mcnl
