#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vatspam/error.hpp"

namespace vatspam {

// One input row. Unlabeled examples carry an absent optional, never a default.
struct Example {
  long long id = 0;
  std::string text;
  std::optional<int> label;  // 0/1 after remapping
};

using Dataset = std::vector<Example>;

struct LoadReport {
  std::size_t kept = 0;
  std::size_t skipped = 0;
};

namespace detail {

// Minimal RFC-4180 reader: quoted fields, "" escapes, embedded newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    const char ch = static_cast<char>(c);
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        break;
      case '\r': break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        break;
      default: field += ch;
    }
  }
  if (any && (!field.empty() || !row.empty())) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

// Header must name a `text` column; `label` is required only when
// require_label. Label values 0/1 accepted, 4 remapped to 1 (the common
// sentiment-dump convention); anything else marks the row malformed. Malformed
// rows are skipped and counted, never fatal.
inline Dataset load_csv(const std::string& path, bool require_label,
                        LoadReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("load_csv: cannot read " + path);
  auto rows = detail::parse_csv(in);
  if (rows.empty()) throw data_error("load_csv: empty file " + path);

  const auto& header = rows[0];
  int text_col = -1, label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "text") text_col = static_cast<int>(i);
    if (header[i] == "label") label_col = static_cast<int>(i);
  }
  if (text_col < 0) throw data_error("load_csv: no 'text' column in " + path);
  if (require_label && label_col < 0) throw data_error("load_csv: no 'label' column in " + path);

  Dataset out;
  LoadReport rep;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      ++rep.skipped;
      continue;
    }
    Example ex;
    ex.id = static_cast<long long>(r);
    ex.text = row[static_cast<std::size_t>(text_col)];
    if (label_col >= 0) {
      const std::string& lab = row[static_cast<std::size_t>(label_col)];
      if (lab.empty()) {
        if (require_label) {
          ++rep.skipped;
          continue;
        }
      } else if (lab == "0") {
        ex.label = 0;
      } else if (lab == "1" || lab == "4") {
        ex.label = 1;  // 4 = positive in the {0,4} scheme
      } else {
        ++rep.skipped;
        continue;
      }
    }
    out.push_back(std::move(ex));
    ++rep.kept;
  }
  if (report) *report = rep;
  if (out.empty()) throw data_error("load_csv: no usable rows in " + path);
  return out;
}

// Always-quoted fields, so any text round-trips.
inline void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("save_csv: cannot write " + path);
  out << "text,label\n";
  for (const auto& ex : data) {
    out << detail::csv_quote(ex.text) << ',';
    if (ex.label) out << *ex.label;
    out << '\n';
  }
}

}  // namespace vatspam
