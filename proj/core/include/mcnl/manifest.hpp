#pragma once

#include <map>
#include <string>

#include "mcnl/dataset.hpp"

namespace mcnl {

// Original label string -> dense integer label, per column.
struct LabelMaps {
  std::map<std::string, int> identities;
  std::map<std::string, int> cameras;
};

struct LoadedManifest {
  Dataset dataset;
  LabelMaps label_maps;  // empty when labels were literal integers
};

// Manifest format: UTF-8 CSV, header `id,camera,f0,...,f{D-1}`, one example
// per row, '\n' line endings. Floats are written in shortest round-trip form,
// so save -> load -> save is byte-stable. A JSON sidecar `<path>.json` is
// written next to the manifest:
//   { "n_cameras": int, "n_identities": int, "d_in": int,
//     "label_map": { "identities": {...}, "cameras": {...} } }
// Integer labels are stored literally (empty label_map); arbitrary string
// labels are remapped to dense integers in order of first appearance and the
// mapping goes in the sidecar.
void save_manifest(const Dataset& d, const std::string& path);
void save_manifest(const Dataset& d, const std::string& path, const LabelMaps& maps);

LoadedManifest load_manifest_full(const std::string& path);
Dataset load_manifest(const std::string& path);

std::string sidecar_path(const std::string& manifest_path);

}  // namespace mcnl
