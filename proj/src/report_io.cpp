#include "learnreach/report_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>

#include "learnreach/errors.hpp"

namespace learnreach {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "inf"; }

CsvWriter::CsvWriter(const std::filesystem::path& path, nlohmann::json metadata,
                     const std::vector<std::string>& header, bool timestamp)
    : path_(path), columns_(header.size()) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IOError("cannot write " + path.string());
  if (timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    metadata["generated_at"] = buf;
  }
  out_ << "# " << metadata.dump() << '\n';
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw IOError(path_.string() + ": row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw IOError("write failed: " + path_.string());
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw IOError("close failed: " + path_.string());
}

std::filesystem::path scale_path(const std::filesystem::path& image) {
  std::filesystem::path p = image;
  p.replace_extension(".scale.json");
  return p;
}

HeatmapScale write_heatmap(const std::vector<std::vector<double>>& matrix, const std::filesystem::path& path) {
  const std::size_t rows = matrix.size();
  const std::size_t cols = rows ? matrix.front().size() : 0;
  for (const auto& r : matrix) {
    if (r.size() != cols) throw IOError("heatmap rows must have equal length");
  }
  HeatmapScale scale;
  for (const auto& r : matrix) {
    for (double v : r) {
      if (!std::isfinite(v)) continue;
      scale.min = scale.min ? std::min(*scale.min, v) : v;
      scale.max = scale.max ? std::max(*scale.max, v) : v;
    }
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  out << "P3\n" << cols << ' ' << rows << "\n255\n";
  for (const auto& r : matrix) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = r[c];
      int red = 0, blue = 0;
      if (std::isfinite(v)) {
        const double span = *scale.max - *scale.min;
        const double t = span > 0.0 ? (v - *scale.min) / span : 0.5;
        red = static_cast<int>(std::lround(255.0 * t));
        blue = 255 - red;
      }
      out << (c ? " " : "") << red << " 0 " << blue;
    }
    out << '\n';
  }
  if (!out) throw IOError("write failed: " + path.string());

  nlohmann::json js;
  js["min"] = scale.min ? nlohmann::json(*scale.min) : nlohmann::json(nullptr);
  js["max"] = scale.max ? nlohmann::json(*scale.max) : nlohmann::json(nullptr);
  js["finite_range_empty"] = !scale.min.has_value();
  js["rows"] = rows;
  js["cols"] = cols;
  std::ofstream sf(scale_path(path), std::ios::binary | std::ios::trunc);
  if (!sf) throw IOError("cannot write " + scale_path(path).string());
  sf << js.dump(2) << '\n';
  return scale;
}

}  // namespace learnreach
