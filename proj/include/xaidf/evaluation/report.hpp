#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xaidf/error.hpp"

namespace xaidf {

inline constexpr int kReportDecimals = 6;

// Rounds to the report's fixed precision so that values survive a
// write/read cycle bit for bit.
inline double round_report_value(double v) { return std::round(v * 1e6) / 1e6; }

struct FakeTypeSummary {
  std::string fake_type;
  std::size_t manifest_count = 0;  // fake entries of this type in the manifest
  std::size_t evaluated = 0;       // loaded and classified
  std::size_t excluded = 0;        // classified as real, hence not attacked
  std::optional<double> original_accuracy;  // null when nothing was classified

  friend bool operator==(const FakeTypeSummary&, const FakeTypeSummary&) = default;
};

struct ReportCell {
  std::string method;
  std::string fake_type;
  int k = 0;
  std::size_t attacked_count = 0;
  std::size_t flipped_count = 0;
  // All four are null when nothing was attacked.
  std::optional<double> adversarial_accuracy;
  std::optional<double> sufficiency;
  std::optional<double> mean_iterations;
  std::optional<double> mean_queries;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct EntryError {
  std::string path;
  std::string message;

  friend bool operator==(const EntryError&, const EntryError&) = default;
};

struct EvaluationReport {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  bool complete = true;
  std::size_t excluded_count = 0;
  std::vector<FakeTypeSummary> fake_types;
  std::vector<ReportCell> cells;  // method-major, then fake type, then k
  std::vector<EntryError> errors;

  const ReportCell* find_cell(const std::string& method, const std::string& fake_type, int k) const {
    for (const auto& c : cells) {
      if (c.method == method && c.fake_type == fake_type && c.k == k) return &c;
    }
    return nullptr;
  }

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

namespace detail {

inline std::string fixed(double v, int decimals = kReportDecimals) {
  if (!std::isfinite(v)) throw InvalidArgument("report values must be finite");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) s = std::string(buf + (buf[0] == '-' ? 1 : 0));
  return s;
}

inline std::string json_number(const std::optional<double>& v) { return v ? fixed(*v) : "null"; }

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string indent_block(const std::string& text, const std::string& pad) {
  std::string out;
  for (char c : text) {
    out += c;
    if (c == '\n') out += pad;
  }
  return out;
}

template <typename Json>
std::optional<double> optional_number(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.template get<double>();
}

}  // namespace detail

/// Canonical JSON: fixed key order, metrics with six decimals, null for
/// cells without attacked images. Byte-stable for equal reports.
inline std::string report_to_json(const EvaluationReport& r) {
  std::ostringstream o;
  o << "{\n";
  o << "  \"config\": " << detail::indent_block(r.config.dump(2), "  ") << ",\n";
  o << "  \"complete\": " << (r.complete ? "true" : "false") << ",\n";
  o << "  \"excluded_count\": " << r.excluded_count << ",\n";
  o << "  \"fake_types\": [";
  for (std::size_t i = 0; i < r.fake_types.size(); ++i) {
    const auto& t = r.fake_types[i];
    o << (i ? ",\n" : "\n") << "    {\"fake_type\": " << detail::json_string(t.fake_type)
      << ", \"manifest_count\": " << t.manifest_count << ", \"evaluated\": " << t.evaluated
      << ", \"excluded\": " << t.excluded << ", \"original_accuracy\": " << detail::json_number(t.original_accuracy)
      << "}";
  }
  o << (r.fake_types.empty() ? "],\n" : "\n  ],\n");
  o << "  \"cells\": [";
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const auto& c = r.cells[i];
    o << (i ? ",\n" : "\n") << "    {\"method\": " << detail::json_string(c.method)
      << ", \"fake_type\": " << detail::json_string(c.fake_type) << ", \"k\": " << c.k
      << ", \"attacked_count\": " << c.attacked_count << ", \"flipped_count\": " << c.flipped_count
      << ", \"adversarial_accuracy\": " << detail::json_number(c.adversarial_accuracy)
      << ", \"sufficiency\": " << detail::json_number(c.sufficiency)
      << ", \"mean_iterations\": " << detail::json_number(c.mean_iterations)
      << ", \"mean_queries\": " << detail::json_number(c.mean_queries) << "}";
  }
  o << (r.cells.empty() ? "],\n" : "\n  ],\n");
  o << "  \"errors\": [";
  for (std::size_t i = 0; i < r.errors.size(); ++i) {
    o << (i ? ",\n" : "\n") << "    {\"path\": " << detail::json_string(r.errors[i].path)
      << ", \"message\": " << detail::json_string(r.errors[i].message) << "}";
  }
  o << (r.errors.empty() ? "]\n" : "\n  ]\n");
  o << "}\n";
  return o.str();
}

inline EvaluationReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    EvaluationReport r;
    r.config = j.at("config");
    r.complete = j.at("complete").get<bool>();
    r.excluded_count = j.at("excluded_count").get<std::size_t>();
    for (const auto& t : j.at("fake_types")) {
      r.fake_types.push_back({t.at("fake_type").get<std::string>(), t.at("manifest_count").get<std::size_t>(),
                              t.at("evaluated").get<std::size_t>(), t.at("excluded").get<std::size_t>(),
                              detail::optional_number(t, "original_accuracy")});
    }
    for (const auto& c : j.at("cells")) {
      ReportCell cell;
      cell.method = c.at("method").get<std::string>();
      cell.fake_type = c.at("fake_type").get<std::string>();
      cell.k = c.at("k").get<int>();
      cell.attacked_count = c.at("attacked_count").get<std::size_t>();
      cell.flipped_count = c.at("flipped_count").get<std::size_t>();
      cell.adversarial_accuracy = detail::optional_number(c, "adversarial_accuracy");
      cell.sufficiency = detail::optional_number(c, "sufficiency");
      cell.mean_iterations = detail::optional_number(c, "mean_iterations");
      cell.mean_queries = detail::optional_number(c, "mean_queries");
      r.cells.push_back(std::move(cell));
    }
    for (const auto& e : j.at("errors")) {
      r.errors.push_back({e.at("path").get<std::string>(), e.at("message").get<std::string>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void save_report(const EvaluationReport& report, const std::string& path) {
  write_text_file(path, report_to_json(report));
}

inline EvaluationReport load_report(const std::string& path) { return report_from_json(read_text_file(path)); }

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(const std::optional<double>& v) { return v ? fixed(*v) : ""; }

}  // namespace detail

/// One row per report cell; null metrics become empty fields.
inline std::string report_to_csv(const EvaluationReport& r) {
  std::ostringstream o;
  o << "method,fake_type,k,adversarial_accuracy,sufficiency,attacked_count,flipped_count,mean_iterations,"
       "mean_queries\n";
  for (const auto& c : r.cells) {
    o << detail::csv_field(c.method) << ',' << detail::csv_field(c.fake_type) << ',' << c.k << ','
      << detail::csv_number(c.adversarial_accuracy) << ',' << detail::csv_number(c.sufficiency) << ','
      << c.attacked_count << ',' << c.flipped_count << ',' << detail::csv_number(c.mean_iterations) << ','
      << detail::csv_number(c.mean_queries) << '\n';
  }
  return o.str();
}

namespace detail {

struct TableLayout {
  std::vector<std::string> methods;
  std::vector<std::string> fake_types;
  std::vector<int> ks;
};

inline TableLayout table_layout(const EvaluationReport& r) {
  TableLayout t;
  const auto add = [](auto& list, const auto& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  for (const auto& c : r.cells) {
    add(t.methods, c.method);
    add(t.fake_types, c.fake_type);
    add(t.ks, c.k);
  }
  std::sort(t.ks.begin(), t.ks.end());
  return t;
}

template <typename Get>
std::string markdown_table(const EvaluationReport& r, const TableLayout& t, Get get, bool lower_is_better) {
  std::ostringstream o;
  o << "| Method |";
  for (const auto& ft : t.fake_types) {
    for (int k : t.ks) o << ' ' << ft << " top-" << k << " |";
  }
  o << "\n|---|";
  for (std::size_t i = 0; i < t.fake_types.size() * t.ks.size(); ++i) o << "---|";
  o << '\n';
  // Best value per column, compared at the printed precision.
  std::vector<std::optional<std::string>> best;
  for (const auto& ft : t.fake_types) {
    for (int k : t.ks) {
      std::optional<double> b;
      for (const auto& m : t.methods) {
        const auto* cell = r.find_cell(m, ft, k);
        const auto v = cell ? get(*cell) : std::nullopt;
        if (v && (!b || (lower_is_better ? *v < *b : *v > *b))) b = v;
      }
      best.push_back(b ? std::optional<std::string>(fixed(*b, 3)) : std::nullopt);
    }
  }
  for (const auto& m : t.methods) {
    o << "| " << m << " |";
    std::size_t col = 0;
    for (const auto& ft : t.fake_types) {
      for (int k : t.ks) {
        const auto* cell = r.find_cell(m, ft, k);
        const auto v = cell ? get(*cell) : std::nullopt;
        if (!v) {
          o << " n/a |";
        } else {
          const std::string s = fixed(*v, 3);
          o << ' ' << (best[col] == s ? "**" + s + "**" : s) << " |";
        }
        ++col;
      }
    }
    o << '\n';
  }
  return o.str();
}

}  // namespace detail

/// Two tables shaped like the accuracy and sufficiency tables of the
/// framework: methods as rows, fake type x top-k as columns, best per column
/// in bold (lowest accuracy, highest sufficiency).
inline std::string report_to_markdown(const EvaluationReport& r) {
  const auto t = detail::table_layout(r);
  std::ostringstream o;
  o << "## Adversarial accuracy\n\n";
  o << "Original accuracy:";
  if (r.fake_types.empty()) o << " n/a";
  for (std::size_t i = 0; i < r.fake_types.size(); ++i) {
    const auto& ft = r.fake_types[i];
    o << (i ? ", " : " ") << ft.fake_type << ' '
      << (ft.original_accuracy ? detail::fixed(*ft.original_accuracy, 3) : std::string("n/a"));
  }
  o << "\n\n";
  o << detail::markdown_table(r, t, [](const ReportCell& c) { return c.adversarial_accuracy; }, true);
  o << "\n## Sufficiency\n\n";
  o << detail::markdown_table(r, t, [](const ReportCell& c) { return c.sufficiency; }, false);
  return o.str();
}

}  // namespace xaidf
