#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dockmtl/dataset.hpp"
#include "dockmtl/featurizer.hpp"
#include "dockmtl/metrics.hpp"

namespace dockmtl::io {

class CsvFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits one CSV record. Double-quoted fields may contain commas and "".
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw CsvFormatError("unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw CsvFormatError("not a number: '" + std::string(s) + "'");
  return v;
}

// Shortest text that reads back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::size_t worker_count() {
  if (const char* env = std::getenv("DOCKMTL_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Featurizes independent SMILES on a small worker pool; results are in
// input order. Failures are returned as messages instead of graphs.
struct FeaturizeOutcome {
  std::optional<FeaturizedGraph> graph;
  std::string error;
};

inline std::vector<FeaturizeOutcome> featurize_all(const std::vector<std::string>& smiles, std::size_t workers = worker_count()) {
  std::vector<FeaturizeOutcome> out(smiles.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        out[i].graph = featurize_smiles(smiles[i]);
      } catch (const SmilesParseError& e) {
        out[i].error = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, smiles.size() / 64 + 1));
  if (workers == 1) {
    work(0, smiles.size());
    return out;
  }
  std::vector<std::thread> threads;
  const std::size_t chunk = (smiles.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(smiles.size(), lo + chunk);
    if (lo < hi) threads.emplace_back(work, lo, hi);
  }
  for (auto& t : threads) t.join();
  return out;
}

struct RowError {
  std::size_t line = 0;  // 1-based line in the file
  std::string message;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicates_merged = 0;
  std::vector<RowError> errors;
};

struct IngestOptions {
  // Rows without any label are rejected when set (training data).
  bool require_labels = true;
  // Rows sharing a SMILES string are merged and their labels averaged.
  bool merge_duplicates = true;
  std::map<std::string, HitDirection> direction_overrides;
};

struct IngestResult {
  TaskDataset dataset;
  IngestReport report;
};

namespace detail {

struct ColumnPlan {
  std::size_t task = 0;
  bool ic50 = false;
};

inline void parse_metadata(std::string_view line, std::map<std::string, HitDirection>& directions) {
  line.remove_prefix(1);
  line = trim(line);
  const std::string_view key = "hit_direction:";
  if (line.substr(0, key.size()) != key) return;
  std::istringstream tokens{std::string(line.substr(key.size()))};
  std::string tok;
  while (tokens >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw CsvFormatError("bad hit_direction entry '" + tok + "'");
    directions[tok.substr(0, eq)] = parse_hit_direction(tok.substr(eq + 1));
  }
}

}  // namespace detail

// Dataset CSV: optional "# hit_direction: T0=lower_is_better ..." lines,
// a header "smiles,<task>,...", one row per compound. Empty cells are
// unlabeled; "ic50_molar:<task>" columns are converted with pchembl.
inline IngestResult ingest_csv(std::istream& in, const IngestOptions& opt = {}) {
  std::map<std::string, HitDirection> directions;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      detail::parse_metadata(t, directions);
      continue;
    }
    header = split_csv_line(t);
    break;
  }
  if (header.empty()) throw CsvFormatError("missing header line");
  for (auto& h : header) h = std::string(trim(h));
  if (header[0] != "smiles") throw CsvFormatError("first column must be 'smiles'");
  for (const auto& [k, v] : opt.direction_overrides) directions[k] = v;

  IngestResult result;
  TaskDataset& ds = result.dataset;
  std::vector<detail::ColumnPlan> plan;
  std::unordered_map<std::string, std::size_t> task_index;
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::string name = header[c];
    bool ic50 = false;
    if (name.rfind("ic50_molar:", 0) == 0) {
      name = name.substr(std::string_view("ic50_molar:").size());
      ic50 = true;
    }
    if (name.empty()) throw CsvFormatError("empty task column name in header");
    auto it = task_index.find(name);
    if (it == task_index.end()) {
      it = task_index.emplace(name, ds.task_names.size()).first;
      ds.task_names.push_back(name);
      const auto d = directions.find(name);
      ds.directions.push_back(d != directions.end() ? d->second
                              : ic50              ? HitDirection::higher_is_better
                                                  : HitDirection::lower_is_better);
    }
    plan.push_back({it->second, ic50});
  }
  if (opt.require_labels && ds.task_names.empty()) throw CsvFormatError("no task columns in header");
  const std::size_t T = ds.task_count();

  struct Row {
    std::size_t line;
    std::string smiles;
    std::vector<std::vector<double>> values;  // per task, all cells seen
  };
  std::vector<Row> rows;
  IngestReport& report = result.report;
  auto reject = [&](std::size_t at, std::string msg) {
    ++report.rejected;
    report.errors.push_back({at, std::move(msg)});
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++report.rows;
    std::vector<std::string> cells;
    try {
      cells = split_csv_line(t);
    } catch (const CsvFormatError& e) {
      reject(line_no, e.what());
      continue;
    }
    if (cells.size() != header.size()) {
      reject(line_no, "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
      continue;
    }
    Row row{line_no, std::string(trim(cells[0])), std::vector<std::vector<double>>(T)};
    if (row.smiles.empty()) {
      reject(line_no, "empty SMILES");
      continue;
    }
    bool ok = true;
    bool any = false;
    for (std::size_t c = 1; c < cells.size() && ok; ++c) {
      try {
        auto v = parse_double(cells[c]);
        if (!v) continue;
        if (!std::isfinite(*v)) throw CsvFormatError("non-finite value");
        if (plan[c - 1].ic50) v = pchembl(*v);
        row.values[plan[c - 1].task].push_back(*v);
        any = true;
      } catch (const std::exception& e) {
        reject(line_no, "column '" + header[c] + "': " + e.what());
        ok = false;
      }
    }
    if (!ok) continue;
    if (opt.require_labels && !any) {
      reject(line_no, "row has no labels");
      continue;
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> smiles;
  smiles.reserve(rows.size());
  for (const auto& r : rows) smiles.push_back(r.smiles);
  const auto graphs = featurize_all(smiles);

  std::unordered_map<std::string, std::size_t> first_row;  // smiles -> index into merged
  std::vector<std::size_t> merged_rows;
  std::vector<std::vector<std::vector<double>>> merged_values;
  std::vector<FeaturizedGraph> merged_graphs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!graphs[i].graph) {
      reject(rows[i].line, graphs[i].error);
      continue;
    }
    ++report.accepted;
    auto found = opt.merge_duplicates ? first_row.find(rows[i].smiles) : first_row.end();
    if (found != first_row.end()) {
      ++report.duplicates_merged;
      for (std::size_t t = 0; t < T; ++t) {
        auto& dst = merged_values[found->second][t];
        dst.insert(dst.end(), rows[i].values[t].begin(), rows[i].values[t].end());
      }
      continue;
    }
    first_row.emplace(rows[i].smiles, merged_rows.size());
    merged_rows.push_back(i);
    merged_values.push_back(rows[i].values);
    merged_graphs.push_back(*graphs[i].graph);
  }
  for (std::size_t m = 0; m < merged_rows.size(); ++m) {
    std::vector<std::optional<double>> labels(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& vals = merged_values[m][t];
      if (vals.empty()) continue;
      double s = 0;
      for (double v : vals) s += v;
      labels[t] = s / static_cast<double>(vals.size());
    }
    ds.add_compound(rows[merged_rows[m]].smiles, std::move(merged_graphs[m]), labels);
  }
  std::sort(report.errors.begin(), report.errors.end(), [](const RowError& a, const RowError& b) { return a.line < b.line; });
  return result;
}

inline void write_dataset_csv(std::ostream& os, const TaskDataset& ds) {
  os << "# hit_direction:";
  for (std::size_t t = 0; t < ds.task_count(); ++t) os << ' ' << ds.task_names[t] << '=' << to_string(ds.directions[t]);
  os << "\nsmiles";
  for (const auto& name : ds.task_names) os << ',' << csv_escape(name);
  os << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    os << csv_escape(ds.smiles[r]);
    for (std::size_t t = 0; t < ds.task_count(); ++t) {
      os << ',';
      if (ds.labeled(r, t)) os << format_double(ds.value(r, t));
    }
    os << '\n';
  }
}

}  // namespace dockmtl::io
