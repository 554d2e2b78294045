#include "learnreach/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "learnreach/errors.hpp"

namespace learnreach {

OccupancyMap::OccupancyMap(std::size_t rows, std::size_t cols, double meters_per_cell,
                           std::array<double, 2> origin, std::vector<std::uint8_t> cells)
    : rows_(rows), cols_(cols), meters_per_cell_(meters_per_cell), origin_(origin),
      cells_(std::move(cells)) {
  if (cells_.size() != rows_ * cols_) throw Error("OccupancyMap: cell count mismatch");
  if (!(meters_per_cell_ > 0.0)) throw Error("OccupancyMap: meters_per_cell must be positive");
}

std::optional<std::array<std::size_t, 2>> OccupancyMap::cell_of(double x, double y) const {
  const double cx = (x - origin_[0]) / meters_per_cell_;
  const double cy = (y - origin_[1]) / meters_per_cell_;
  const double w = static_cast<double>(cols_);
  const double h = static_cast<double>(rows_);
  if (!(cx >= 0.0 && cx <= w && cy >= 0.0 && cy <= h)) return std::nullopt;
  // The far edges belong to the last cell.
  const auto col = std::min(static_cast<std::size_t>(cx), cols_ - 1);
  const auto from_bottom = std::min(static_cast<std::size_t>(cy), rows_ - 1);
  return std::array<std::size_t, 2>{rows_ - 1 - from_bottom, col};
}

bool OccupancyMap::occupied_at(double x, double y) const {
  const auto cell = cell_of(x, y);
  return !cell || occupied((*cell)[0], (*cell)[1]);
}

std::array<double, 2> OccupancyMap::cell_center(std::size_t row, std::size_t col) const {
  return {origin_[0] + (static_cast<double>(col) + 0.5) * meters_per_cell_,
          origin_[1] + (static_cast<double>(rows_ - 1 - row) + 0.5) * meters_per_cell_};
}

std::size_t OccupancyMap::occupied_count() const {
  std::size_t n = 0;
  for (auto c : cells_) n += c != 0;
  return n;
}

double OccupancyMap::occupied_fraction() const {
  return cells_.empty() ? 0.0 : static_cast<double>(occupied_count()) / static_cast<double>(cells_.size());
}

std::uint64_t OccupancyMap::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint64_t dims[2] = {rows_, cols_};
  mix(dims, sizeof dims);
  mix(&meters_per_cell_, sizeof meters_per_cell_);
  mix(origin_.data(), sizeof(double) * 2);
  mix(cells_.data(), cells_.size());
  return h;
}

OccupancyMap parse_occupancy(const std::string& text, double meters_per_cell,
                             std::array<double, 2> origin) {
  std::vector<std::uint8_t> cells;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t row_cells = 0;
    bool blank = true;
    for (char ch : line) {
      if (ch == '0' || ch == '1') {
        cells.push_back(ch == '1');
        ++row_cells;
        blank = false;
      } else if (ch != ' ' && ch != '\t') {
        std::ostringstream os;
        os << "line " << line_no << ": unexpected character '" << ch << "'";
        throw ParseError(os.str());
      }
    }
    if (blank) continue;
    if (rows == 0) {
      cols = row_cells;
    } else if (row_cells != cols) {
      std::ostringstream os;
      os << "line " << line_no << ": ragged row (" << row_cells << " cells, expected " << cols << ")";
      throw ParseError(os.str());
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("empty occupancy map");
  return OccupancyMap(rows, cols, meters_per_cell, origin, std::move(cells));
}

OccupancyMap load_occupancy(const std::filesystem::path& path, double meters_per_cell,
                            std::array<double, 2> origin) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open occupancy map " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_occupancy(ss.str(), meters_per_cell, origin);
}

OccupancyMap load_occupancy_with_sidecar(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar.replace_extension(".json");
  std::ifstream in(sidecar);
  if (!in) throw ParseError("cannot open occupancy sidecar " + sidecar.string());
  nlohmann::json meta;
  try {
    in >> meta;
    const double mpc = meta.at("meters_per_cell").get<double>();
    std::array<double, 2> origin{0.0, 0.0};
    if (meta.contains("origin")) origin = meta.at("origin").get<std::array<double, 2>>();
    return load_occupancy(path, mpc, origin);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
}

}  // namespace learnreach
