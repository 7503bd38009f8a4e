#include "mcnl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mcnl/io_util.hpp"
#include "mcnl/rng.hpp"

namespace mcnl {

double CmcResult::rank(int k) const {
  if (cmc.empty() || k < 1) return 0.0;
  const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(k), cmc.size());
  return cmc[idx - 1];
}

CmcResult cmc_map(const Matrix& query_emb, const EvalMeta& query_meta, const Matrix& gallery_emb,
                  const EvalMeta& gallery_meta) {
  const std::size_t nq = query_emb.rows();
  const std::size_t ng = gallery_emb.rows();
  if (query_meta.ids.size() != nq || query_meta.cams.size() != nq ||
      gallery_meta.ids.size() != ng || gallery_meta.cams.size() != ng)
    throw DataError("cmc_map: metadata does not match embedding rows");
  if (query_emb.cols() != gallery_emb.cols())
    throw DataError("cmc_map: query and gallery embedding widths differ");

  CmcResult result;
  result.cmc.assign(ng, 0.0);
  double ap_sum = 0.0;

  std::vector<std::pair<double, std::size_t>> ranked;  // (distance, gallery index)
  for (std::size_t q = 0; q < nq; ++q) {
    ranked.clear();
    for (std::size_t g = 0; g < ng; ++g) {
      // junk rule: same identity in the same camera is excluded
      if (gallery_meta.ids[g] == query_meta.ids[q] && gallery_meta.cams[g] == query_meta.cams[q])
        continue;
      ranked.emplace_back(std::sqrt(squared_distance(query_emb.row(q), gallery_emb.row(g))), g);
    }
    bool any_relevant = false;
    for (const auto& [dist, g] : ranked)
      if (gallery_meta.ids[g] == query_meta.ids[q]) {
        any_relevant = true;
        break;
      }
    if (!any_relevant) {
      ++result.n_dropped;
      continue;
    }
    std::sort(ranked.begin(), ranked.end());  // pair ordering breaks ties by gallery index

    std::size_t first_hit = 0;
    std::size_t n_rel = 0;
    double ap = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (gallery_meta.ids[ranked[r].second] != query_meta.ids[q]) continue;
      if (n_rel == 0) first_hit = r;
      ++n_rel;
      ap += static_cast<double>(n_rel) / static_cast<double>(r + 1);
    }
    ap_sum += ap / static_cast<double>(n_rel);
    result.cmc[first_hit] += 1.0;
    ++result.n_queries;
  }

  if (result.n_queries > 0) {
    double acc = 0.0;
    for (double& v : result.cmc) {
      acc += v;
      v = acc / static_cast<double>(result.n_queries);
    }
    result.map = ap_sum / static_cast<double>(result.n_queries);
  }
  return result;
}

double pseudo_f(const Matrix& features, const std::vector<int>& camera_labels) {
  const std::size_t n = features.rows();
  if (camera_labels.size() != n) throw DataError("pseudo_f: label count mismatch");
  std::map<int, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[camera_labels[i]].push_back(i);
  const std::size_t k = clusters.size();
  if (k < 2) throw DataError("pseudo_f: need at least two cameras");
  if (n <= k) throw DataError("pseudo_f: need more samples than cameras");

  const std::size_t dim = features.cols();
  std::vector<double> grand(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) grand[d] += features(i, d);
  for (double& v : grand) v /= static_cast<double>(n);

  double ssb = 0.0, ssw = 0.0;
  std::vector<double> mean(dim);
  for (const auto& [cam, idxs] : clusters) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t i : idxs)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += features(i, d);
    for (double& v : mean) v /= static_cast<double>(idxs.size());
    double db = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = mean[d] - grand[d];
      db += diff * diff;
    }
    ssb += static_cast<double>(idxs.size()) * db;
    for (std::size_t i : idxs)
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = features(i, d) - mean[d];
        ssw += diff * diff;
      }
  }
  if (ssw == 0.0) return std::numeric_limits<double>::infinity();
  return (ssb / static_cast<double>(k - 1)) / (ssw / static_cast<double>(n - k));
}

double xcam_nn_prob(const Matrix& features, const EvalMeta& meta, int* n_skipped) {
  const std::size_t n = features.rows();
  if (meta.ids.size() != n || meta.cams.size() != n)
    throw DataError("xcam_nn_prob: metadata does not match feature rows");

  int skipped = 0, counted = 0, cross = 0;
  for (std::size_t a = 0; a < n; ++a) {
    bool has_same = false, has_other = false;
    for (std::size_t j = 0; j < n && !(has_same && has_other); ++j) {
      if (meta.ids[j] == meta.ids[a]) continue;
      (meta.cams[j] == meta.cams[a] ? has_same : has_other) = true;
    }
    if (!has_same || !has_other) {
      ++skipped;
      continue;
    }
    std::size_t best = n;
    double best_d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (meta.ids[j] == meta.ids[a]) continue;
      const double d = squared_distance(features.row(a), features.row(j));
      if (best == n || d < best_d) {  // strict: ties keep the lowest index
        best = j;
        best_d = d;
      }
    }
    ++counted;
    if (meta.cams[best] != meta.cams[a]) ++cross;
  }
  if (n_skipped) *n_skipped = skipped;
  if (counted == 0) throw DataError("xcam_nn_prob: no evaluable anchors");
  return static_cast<double>(cross) / static_cast<double>(counted);
}

Matrix embed_dataset(const Embedder& e, const Dataset& d) {
  Matrix inputs(d.size(), static_cast<std::size_t>(d.d_in()));
  for (std::size_t i = 0; i < d.size(); ++i)
    std::copy(d.examples()[i].input.begin(), d.examples()[i].input.end(),
              inputs.row(i).begin());
  return e.forward(inputs);
}

EvalMeta dataset_meta(const Dataset& d) {
  EvalMeta meta;
  meta.ids.reserve(d.size());
  meta.cams.reserve(d.size());
  for (const auto& ex : d.examples()) {
    meta.ids.push_back(ex.identity);
    meta.cams.push_back(ex.camera);
  }
  return meta;
}

EvalReport evaluate_model(const Embedder& e, const Dataset& query, const Dataset& gallery,
                          int pseudo_f_sample, std::uint64_t sample_seed) {
  const Matrix query_emb = embed_dataset(e, query);
  const Matrix gallery_emb = embed_dataset(e, gallery);
  const EvalMeta qmeta = dataset_meta(query);
  const EvalMeta gmeta = dataset_meta(gallery);

  EvalReport report;
  const CmcResult cmc = cmc_map(query_emb, qmeta, gallery_emb, gmeta);
  report.rank1 = cmc.rank(1);
  report.rank5 = cmc.rank(5);
  report.rank10 = cmc.rank(10);
  report.map = cmc.map;
  report.n_queries = cmc.n_queries;
  report.n_dropped_queries = cmc.n_dropped;

  // combined test features
  const std::size_t n = query_emb.rows() + gallery_emb.rows();
  Matrix feats(n, query_emb.cols());
  EvalMeta meta;
  for (std::size_t i = 0; i < query_emb.rows(); ++i)
    std::copy(query_emb.row(i).begin(), query_emb.row(i).end(), feats.row(i).begin());
  for (std::size_t i = 0; i < gallery_emb.rows(); ++i)
    std::copy(gallery_emb.row(i).begin(), gallery_emb.row(i).end(),
              feats.row(query_emb.rows() + i).begin());
  meta.ids = qmeta.ids;
  meta.ids.insert(meta.ids.end(), gmeta.ids.begin(), gmeta.ids.end());
  meta.cams = qmeta.cams;
  meta.cams.insert(meta.cams.end(), gmeta.cams.begin(), gmeta.cams.end());

  if (pseudo_f_sample > 0 && static_cast<std::size_t>(pseudo_f_sample) < n) {
    Rng rng(mix_seed(sample_seed, 0x9f));
    const auto pick = rng.sample_indices(n, static_cast<std::size_t>(pseudo_f_sample));
    Matrix sub(pick.size(), feats.cols());
    std::vector<int> sub_cams(pick.size());
    for (std::size_t i = 0; i < pick.size(); ++i) {
      std::copy(feats.row(pick[i]).begin(), feats.row(pick[i]).end(), sub.row(i).begin());
      sub_cams[i] = meta.cams[pick[i]];
    }
    report.pseudo_f = pseudo_f(sub, sub_cams);
  } else {
    report.pseudo_f = pseudo_f(feats, meta.cams);
  }
  report.xcam_nn_prob = xcam_nn_prob(feats, meta, &report.n_skipped_anchors);
  return report;
}

namespace {
using nlohmann::json;

json pf_to_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double pf_from_json(const json& j) {
  if (j.is_string()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}
}  // namespace

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["rank1"] = r.rank1;
  j["rank5"] = r.rank5;
  j["rank10"] = r.rank10;
  j["map"] = r.map;
  j["pseudo_f"] = pf_to_json(r.pseudo_f);
  j["xcam_nn_prob"] = r.xcam_nn_prob;
  j["n_queries"] = r.n_queries;
  j["n_dropped_queries"] = r.n_dropped_queries;
  j["n_skipped_anchors"] = r.n_skipped_anchors;
  return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.rank1 = j.at("rank1").get<double>();
    r.rank5 = j.at("rank5").get<double>();
    r.rank10 = j.at("rank10").get<double>();
    r.map = j.at("map").get<double>();
    r.pseudo_f = pf_from_json(j.at("pseudo_f"));
    r.xcam_nn_prob = j.at("xcam_nn_prob").get<double>();
    r.n_queries = j.at("n_queries").get<int>();
    r.n_dropped_queries = j.value("n_dropped_queries", 0);
    r.n_skipped_anchors = j.value("n_skipped_anchors", 0);
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("eval report: ") + e.what());
  }
}

void export_features(const Embedder& e, const Dataset& d, const std::string& path) {
  const int d_emb = e.config().d_emb;
  std::ostringstream out;
  out << "id,camera";
  for (int j = 0; j < d_emb; ++j) out << ",e" << j;
  out << '\n';
  if (!d.empty()) {
    const Matrix emb = embed_dataset(e, d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      out << d.examples()[i].identity << ',' << d.examples()[i].camera;
      for (std::size_t j = 0; j < emb.cols(); ++j) out << ',' << format_double(emb(i, j));
      out << '\n';
    }
  }
  write_file_atomic(path, out.str());
}

}  // namespace mcnl
