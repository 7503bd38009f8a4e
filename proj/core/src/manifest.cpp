#include "mcnl/manifest.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "mcnl/io_util.hpp"

namespace mcnl {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(std::move(cur));
  }
  return lines;
}

json label_map_to_json(const std::map<std::string, int>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::map<std::string, int> label_map_from_json(const json& j) {
  std::map<std::string, int> m;
  for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = it.value().get<int>();
  return m;
}

// Resolves a label column value to a dense integer. `remap` is non-null when
// string labels are being assigned on the fly (no sidecar mapping).
int resolve_label(const std::string& raw, const std::map<std::string, int>* sidecar_map,
                  std::map<std::string, int>* remap, bool literal_ints, std::size_t line_no,
                  const char* column) {
  if (sidecar_map && !sidecar_map->empty()) {
    auto it = sidecar_map->find(raw);
    if (it == sidecar_map->end())
      throw ParseError(std::string("unknown ") + column + " label '" + raw + "'", line_no);
    return it->second;
  }
  if (literal_ints) {
    int v = 0;
    if (!parse_nonneg_int(raw, v))
      throw ParseError(std::string("invalid ") + column + " label '" + raw + "'", line_no);
    return v;
  }
  auto [it, inserted] = remap->try_emplace(raw, static_cast<int>(remap->size()));
  return it->second;
}

}  // namespace

std::string sidecar_path(const std::string& manifest_path) { return manifest_path + ".json"; }

void save_manifest(const Dataset& d, const std::string& path) {
  save_manifest(d, path, LabelMaps{});
}

void save_manifest(const Dataset& d, const std::string& path, const LabelMaps& maps) {
  std::ostringstream out;
  out << "id,camera";
  for (int j = 0; j < d.d_in(); ++j) out << ",f" << j;
  out << '\n';
  for (const auto& ex : d.examples()) {
    out << ex.identity << ',' << ex.camera;
    for (double v : ex.input) out << ',' << format_double(v);
    out << '\n';
  }
  write_file_atomic(path, out.str());

  json side;
  side["n_cameras"] = d.n_cameras();
  side["n_identities"] = d.n_identities();
  side["d_in"] = d.d_in();
  side["label_map"] = {{"identities", label_map_to_json(maps.identities)},
                       {"cameras", label_map_to_json(maps.cameras)}};
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

LoadedManifest load_manifest_full(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("missing header", 1);

  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "id" || header[1] != "camera")
    throw ParseError("header must start with 'id,camera'", 1);
  const int d_in = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < d_in; ++j)
    if (header[2 + j] != "f" + std::to_string(j))
      throw ParseError("feature column " + std::to_string(j) + " must be named f" +
                           std::to_string(j),
                       1);

  // Sidecar, when present, pins n_cameras and any string-label mapping.
  bool have_sidecar = false;
  int sidecar_cams = 0;
  LabelMaps sidecar_maps;
  const std::string spath = sidecar_path(path);
  if (std::filesystem::exists(spath)) {
    have_sidecar = true;
    json side;
    try {
      side = json::parse(read_file(spath));
      sidecar_cams = side.at("n_cameras").get<int>();
      if (side.at("d_in").get<int>() != d_in)
        throw DataError("sidecar d_in " + std::to_string(side.at("d_in").get<int>()) +
                        " does not match header width " + std::to_string(d_in));
      if (side.contains("label_map")) {
        sidecar_maps.identities = label_map_from_json(side["label_map"].at("identities"));
        sidecar_maps.cameras = label_map_from_json(side["label_map"].at("cameras"));
      }
    } catch (const json::exception& e) {
      throw DataError("sidecar '" + spath + "': " + e.what());
    }
  }

  // First pass decides whether label columns are literal integers. With a
  // non-empty sidecar map the map wins; otherwise a single non-integer value
  // switches the whole column to first-appearance remapping.
  bool ids_literal = sidecar_maps.identities.empty();
  bool cams_literal = sidecar_maps.cameras.empty();
  if (!have_sidecar || (sidecar_maps.identities.empty() && sidecar_maps.cameras.empty())) {
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const auto fields = split_csv_line(lines[li]);
      if (fields.size() < 2) continue;  // reported properly in the second pass
      int tmp = 0;
      if (!parse_nonneg_int(fields[0], tmp)) ids_literal = false;
      if (!parse_nonneg_int(fields[1], tmp)) cams_literal = false;
    }
  }

  LoadedManifest result;
  std::vector<LabeledExample> examples;
  int max_camera = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(fields.size()),
                       line_no);
    LabeledExample ex;
    ex.identity = resolve_label(fields[0], &sidecar_maps.identities, &result.label_maps.identities,
                                ids_literal, line_no, "identity");
    ex.camera = resolve_label(fields[1], &sidecar_maps.cameras, &result.label_maps.cameras,
                              cams_literal, line_no, "camera");
    if (have_sidecar && ex.camera >= sidecar_cams)
      throw ParseError("unknown camera index " + std::to_string(ex.camera) + " (n_cameras = " +
                           std::to_string(sidecar_cams) + ")",
                       line_no);
    ex.input.resize(d_in);
    for (int j = 0; j < d_in; ++j) {
      double v = 0.0;
      if (!parse_double(fields[2 + j], v))
        throw ParseError("invalid float '" + fields[2 + j] + "' in column f" + std::to_string(j),
                         line_no);
      if (!std::isfinite(v))
        throw ParseError("non-finite value in column f" + std::to_string(j), line_no);
      ex.input[j] = v;
    }
    max_camera = std::max(max_camera, ex.camera);
    examples.push_back(std::move(ex));
  }

  const int n_cameras = have_sidecar ? sidecar_cams : max_camera + 1;
  result.dataset = Dataset(std::move(examples), n_cameras, d_in);
  return result;
}

Dataset load_manifest(const std::string& path) { return load_manifest_full(path).dataset; }

}  // namespace mcnl
