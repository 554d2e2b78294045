#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace learnreach {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Shortest round-trip decimal for finite values, "inf" otherwise.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

// CSV file whose first line is `# <json>` holding `metadata`. When
// `timestamp` is set an ISO-8601 "generated_at" field is added, which
// makes the file differ between runs.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, nlohmann::json metadata, const std::vector<std::string>& header,
            bool timestamp = false);

  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct HeatmapScale {
  std::optional<double> min;  // nullopt when no entry is finite
  std::optional<double> max;
};

// Plain-text PPM (P3). Finite entries map linearly from blue (min) to red
// (max); a constant matrix renders mid-ramp; non-finite entries are black.
// Also writes `<stem>.scale.json` next to the image.
HeatmapScale write_heatmap(const std::vector<std::vector<double>>& matrix, const std::filesystem::path& path);

std::filesystem::path scale_path(const std::filesystem::path& image);

}  // namespace learnreach
