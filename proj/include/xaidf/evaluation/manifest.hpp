#pragma once

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "xaidf/error.hpp"

namespace xaidf {

enum class TrueLabel { fake, real };

struct ManifestEntry {
  std::string path;       // as written in the manifest; used for seeding and reporting
  std::string resolved;   // path to open, relative entries anchored at the manifest's directory
  std::string fake_type;  // empty for real entries
  TrueLabel label = TrueLabel::fake;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  void validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries) {
      if (e.path.empty()) throw InvalidArgument("manifest entry with an empty path");
      if (!seen.insert(e.path).second) throw InvalidArgument("duplicate manifest path \"" + e.path + "\"");
      if (e.label == TrueLabel::fake && e.fake_type.empty()) {
        throw InvalidArgument("fake entry \"" + e.path + "\" has no fake_type");
      }
    }
  }

  // Fake types in order of first appearance.
  std::vector<std::string> fake_types() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
      if (e.label == TrueLabel::fake && std::find(out.begin(), out.end(), e.fake_type) == out.end()) {
        out.push_back(e.fake_type);
      }
    }
    return out;
  }
};

inline TrueLabel parse_label(const std::string& s) {
  if (s == "fake") return TrueLabel::fake;
  if (s == "real") return TrueLabel::real;
  throw InvalidArgument("label must be \"fake\" or \"real\", got \"" + s + "\"");
}

/// Parses JSON Lines: {"path": ..., "fake_type": ..., "label": "fake"|"real"}.
/// Blank lines are skipped; "label" defaults to "fake".
inline DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {}) {
  DatasetManifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("path") || !j["path"].is_string()) {
      throw InvalidArgument("manifest line " + std::to_string(line_no) + ": expected an object with a string \"path\"");
    }
    ManifestEntry e;
    e.path = j["path"].get<std::string>();
    const std::filesystem::path p(e.path);
    e.resolved = (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
    if (j.contains("fake_type") && !j["fake_type"].is_null()) e.fake_type = j["fake_type"].get<std::string>();
    if (j.contains("label")) e.label = parse_label(j["label"].get<std::string>());
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  return parse_manifest(in, std::filesystem::path(path).parent_path());
}

inline void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["path"] = e.path;
    j["fake_type"] = e.fake_type;
    j["label"] = e.label == TrueLabel::fake ? "fake" : "real";
    out << j.dump() << '\n';
  }
}

}  // namespace xaidf
