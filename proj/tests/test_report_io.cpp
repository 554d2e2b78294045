#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "learnreach/errors.hpp"
#include "learnreach/report_io.hpp"

using namespace learnreach;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "learnreach_report_io" / name;
  fs::remove_all(p);
  return p;
}

struct Ppm {
  std::size_t cols = 0, rows = 0;
  std::vector<std::array<int, 3>> pixels;
};

Ppm read_ppm(const fs::path& p) {
  std::ifstream in(p);
  std::string magic;
  int maxval = 0;
  Ppm img;
  in >> magic >> img.cols >> img.rows >> maxval;
  REQUIRE(magic == "P3");
  REQUIRE(maxval == 255);
  for (std::size_t i = 0; i < img.cols * img.rows; ++i) {
    std::array<int, 3> px{};
    in >> px[0] >> px[1] >> px[2];
    img.pixels.push_back(px);
  }
  REQUIRE(in);
  return img;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.7820) == "1.782");
  CHECK(format_number(kInfinity) == "inf");
  CHECK(format_optional(std::nullopt) == "inf");
  CHECK(format_optional(2.0) == "2");
}

TEST_CASE("constant heatmap renders mid-ramp") {
  const auto path = scratch("const") / "h.ppm";
  const auto scale = write_heatmap({{3.0, 3.0, 3.0}, {3.0, 3.0, 3.0}}, path);
  const Ppm img = read_ppm(path);
  CHECK(img.cols == 3);
  CHECK(img.rows == 2);
  for (const auto& px : img.pixels) CHECK(px == img.pixels.front());
  CHECK(img.pixels.front()[0] > 0);
  CHECK(img.pixels.front()[2] > 0);
  CHECK(scale.min == 3.0);
  CHECK(scale.max == 3.0);
}

TEST_CASE("anti-diagonal heatmap hits the ramp endpoints") {
  const auto path = scratch("diag") / "h.ppm";
  write_heatmap({{0.0, 7.0}, {7.0, 0.0}}, path);
  const Ppm img = read_ppm(path);
  const std::array<int, 3> blue{0, 0, 255}, red{255, 0, 0};
  CHECK(img.pixels[0] == blue);
  CHECK(img.pixels[1] == red);
  CHECK(img.pixels[2] == red);
  CHECK(img.pixels[3] == blue);
  const auto js = read_json(scale_path(path));
  CHECK(js["min"] == 0.0);
  CHECK(js["max"] == 7.0);
}

TEST_CASE("all-infinite heatmap is black with an empty range") {
  const auto path = scratch("inf") / "h.ppm";
  const auto scale = write_heatmap({{kInfinity, kInfinity}}, path);
  const Ppm img = read_ppm(path);
  for (const auto& px : img.pixels) CHECK(px == std::array<int, 3>{0, 0, 0});
  CHECK_FALSE(scale.min.has_value());
  const auto js = read_json(scale_path(path));
  CHECK(js["finite_range_empty"] == true);
  CHECK(js["min"].is_null());
}

TEST_CASE("mixed heatmap renders infinity black") {
  const auto path = scratch("mixed") / "h.ppm";
  write_heatmap({{1.0, kInfinity, 2.0}}, path);
  const Ppm img = read_ppm(path);
  CHECK(img.pixels[1] == std::array<int, 3>{0, 0, 0});
  CHECK(img.pixels[0] == std::array<int, 3>{0, 0, 255});
}

TEST_CASE("ragged heatmap rows are rejected") {
  CHECK_THROWS_AS(write_heatmap({{1.0, 2.0}, {1.0}}, scratch("ragged") / "h.ppm"), IOError);
}

TEST_CASE("csv starts with a json metadata line") {
  const auto path = scratch("csv") / "nested" / "a.csv";
  {
    CsvWriter w(path, {{"tool", "learnreach"}, {"n", 3}}, {"a", "b"});
    w.row({"1", "2"});
    CHECK_THROWS_AS(w.row({"1"}), Error);
    w.close();
  }
  std::ifstream in(path);
  std::string first, header, row;
  std::getline(in, first);
  std::getline(in, header);
  std::getline(in, row);
  REQUIRE(first.rfind("# ", 0) == 0);
  const auto meta = nlohmann::json::parse(first.substr(2));
  CHECK(meta["tool"] == "learnreach");
  CHECK(meta["n"] == 3);
  CHECK_FALSE(meta.contains("generated_at"));
  CHECK(header == "a,b");
  CHECK(row == "1,2");
}

TEST_CASE("timestamped csv carries a generation time") {
  const auto path = scratch("ts") / "a.csv";
  {
    CsvWriter w(path, nlohmann::json::object(), {"a"}, true);
    w.close();
  }
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(nlohmann::json::parse(first.substr(2)).contains("generated_at"));
}
