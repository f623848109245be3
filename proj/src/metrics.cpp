#include "f2f/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "f2f/error.hpp"

namespace f2f {

double mse(const Frame& a, const Frame& b) {
  if (!a.same_dims(b)) {
    throw Error(ErrorCode::kShapeMismatch, "mse: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                               " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

double psnr(const Frame& candidate, const Frame& reference) {
  const double e = mse(candidate, reference);
  if (e < 1e-10) return kPsnrCapDb;
  return std::min(kPsnrCapDb, -10.0 * std::log10(e));
}

Summary summarize(std::span<const double> values) {
  double s = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    s += v;
    ++n;
  }
  if (n == 0) return {std::nan(""), std::nan("")};
  const double mean = s / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(n))};
}

namespace {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string format_csv(std::span<const MetricsRow> rows, const std::string& psnr_column,
                       const std::vector<std::string>& comments) {
  std::vector<const MetricsRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->t < b->t; });

  std::ostringstream out;
  out << "frame_index," << psnr_column;
  if (!sorted.empty()) {
    for (const auto& [name, value] : sorted.front()->aux) out << ',' << name;
    for (const auto& [name, value] : sorted.front()->labels) out << ',' << name;
  }
  out << '\n';
  for (const auto* row : sorted) {
    const auto& first = *sorted.front();
    if (row->aux.size() != first.aux.size() || row->labels.size() != first.labels.size()) {
      throw Error(ErrorCode::kInvalidArgument, "csv rows have differing columns at frame " + std::to_string(row->t));
    }
    out << row->t << ',' << format_real(row->psnr_db);
    for (const auto& [name, value] : row->aux) out << ',' << format_real(value);
    for (const auto& [name, value] : row->labels) out << ',' << quote(value);
    out << '\n';
  }
  for (const auto& c : comments) out << "# " << c << '\n';
  return out.str();
}

void write_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path, const std::string& psnr_column,
               const std::vector<std::string>& comments) {
  const std::string text = format_csv(rows, psnr_column, comments);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<MetricsRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::vector<std::string> header;
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = std::move(fields);
      if (header.size() < 2 || header[0] != "frame_index") {
        throw Error(ErrorCode::kMalformedHeader, path.string() + ": missing frame_index header");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kMalformedHeader, path.string() + ": row has " + std::to_string(fields.size()) +
                                                   " fields, header has " + std::to_string(header.size()));
    }
    MetricsRow row;
    row.t = std::stoi(fields[0]);
    row.psnr_db = fields[1] == "nan" ? std::nan("") : std::stod(fields[1]);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      char* end = nullptr;
      const double v = fields[i] == "nan" ? std::nan("") : std::strtod(fields[i].c_str(), &end);
      if (fields[i] == "nan" || (end != nullptr && *end == '\0' && !fields[i].empty())) {
        row.aux.emplace_back(header[i], v);
      } else {
        row.labels.emplace_back(header[i], fields[i]);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace f2f
