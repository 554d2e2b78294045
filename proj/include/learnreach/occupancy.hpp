#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace learnreach {

// Planar occupancy mask. Row 0 is the top of the map (largest y); the map's
// lower-left corner sits at `origin`.
class OccupancyMap {
 public:
  OccupancyMap() = default;
  OccupancyMap(std::size_t rows, std::size_t cols, double meters_per_cell,
               std::array<double, 2> origin, std::vector<std::uint8_t> cells);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double meters_per_cell() const { return meters_per_cell_; }
  std::array<double, 2> origin() const { return origin_; }
  double width() const { return static_cast<double>(cols_) * meters_per_cell_; }
  double height() const { return static_cast<double>(rows_) * meters_per_cell_; }

  bool occupied(std::size_t row, std::size_t col) const { return cells_[row * cols_ + col] != 0; }

  // Nearest-cell lookup. Points outside the map are occupied.
  bool occupied_at(double x, double y) const;
  std::optional<std::array<std::size_t, 2>> cell_of(double x, double y) const;
  std::array<double, 2> cell_center(std::size_t row, std::size_t col) const;

  std::size_t occupied_count() const;
  double occupied_fraction() const;

  // FNV-1a over dimensions, metadata and cells.
  std::uint64_t hash() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double meters_per_cell_ = 1.0;
  std::array<double, 2> origin_{0.0, 0.0};
  std::vector<std::uint8_t> cells_;
};

// Parses the text-grid format: one row per line, `0`/`1` cells separated by
// single spaces. Throws ParseError on ragged rows or other characters.
OccupancyMap parse_occupancy(const std::string& text, double meters_per_cell,
                             std::array<double, 2> origin = {0.0, 0.0});

OccupancyMap load_occupancy(const std::filesystem::path& path, double meters_per_cell,
                            std::array<double, 2> origin = {0.0, 0.0});

// Loads `<stem>.txt` together with its `<stem>.json` sidecar
// ({"meters_per_cell": m, "origin": [x, y]}).
OccupancyMap load_occupancy_with_sidecar(const std::filesystem::path& path);

}  // namespace learnreach
