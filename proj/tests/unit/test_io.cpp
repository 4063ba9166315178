#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <random>

#include "json.hpp"
#include "ndp/io.hpp"

using namespace ndp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ndp_unit_io";
  fs::create_directories(dir);
  return dir / name;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

const char* kAsciiPly =
    "ply\n"
    "format ascii 1.0\n"
    "comment made by hand\n"
    "element vertex 3\n"
    "property float x\n"
    "property float y\n"
    "property float z\n"
    "property uchar red\n"
    "element face 1\n"
    "property list uchar int vertex_indices\n"
    "end_header\n"
    "0 0 0 10\n"
    "1 0 0 20\n"
    "0 1 0.5 30\n"
    "3 0 1 2\n";

}  // namespace

TEST_CASE("ascii PLY with extra properties and elements") {
  const auto c = io::parse_ply(kAsciiPly);
  REQUIRE(c.size() == 3);
  CHECK(c.points[2] == Vec3(0, 1, 0.5));
  REQUIRE(c.attributes.size() == 1);
  CHECK(c.attributes[0].name == "red");
  CHECK(c.attributes[0].type == PlyScalar::UInt8);
  CHECK(c.attributes[0].values == std::vector<double>{10, 20, 30});
}

TEST_CASE("xyz text") {
  const auto c = io::parse_xyz("0 0 0\n1 2 3");
  REQUIRE(c.size() == 2);
  CHECK(c.points[1] == Vec3(1, 2, 3));
  CHECK(io::parse_xyz("# header\n\n1 1 1 # tail\n").size() == 1);
  CHECK_THROWS_WITH_AS(io::parse_xyz("1 2\n", "pts.xyz"), doctest::Contains("pts.xyz:1"), IoError);
  CHECK_THROWS_WITH_AS(io::parse_xyz("1 2 3\n1 x 3\n", "pts.xyz"), doctest::Contains("pts.xyz:2"), IoError);
}

TEST_CASE("reader failure kinds") {
  std::string truncated = kAsciiPly;
  truncated.replace(truncated.find("vertex 3"), 8, "vertex 10");
  CHECK_THROWS_WITH_AS(io::parse_ply(truncated), doctest::Contains("expected 10"), io::TruncatedData);

  std::string bad = kAsciiPly;
  bad.replace(0, 3, "plx");
  CHECK_THROWS_AS(io::parse_ply(bad), io::MalformedHeader);

  std::string big = kAsciiPly;
  big.replace(big.find("ascii"), 5, "binary_big_endian");
  CHECK_THROWS_AS(io::parse_ply(big), io::UnsupportedFormat);

  std::string int_coords = kAsciiPly;
  int_coords.replace(int_coords.find("float x"), 7, "int x");
  CHECK_THROWS_AS(io::parse_ply(int_coords), io::UnsupportedFormat);

  std::string nan = kAsciiPly;
  nan.replace(nan.find("1 0 0 20"), 8, "nan 0 0 20");
  CHECK_THROWS_WITH_AS(io::parse_ply(nan), doctest::Contains("vertex 1"), IoError);

  CHECK_THROWS_WITH_AS(io::read_point_cloud(scratch("missing.ply")), doctest::Contains("missing.ply"), IoError);
}

TEST_CASE("binary PLY declaring 10 vertices but holding 8") {
  PointCloud c = random_cloud(8, 1);
  std::string bytes = io::format_ply(c, io::CloudFormat::PlyBinary);
  bytes.replace(bytes.find("vertex 8"), 8, "vertex 10");
  CHECK_THROWS_WITH_AS(io::parse_ply(bytes), doctest::Contains("expected 10 vertices, found 8"), io::TruncatedData);
}

TEST_CASE("round trips") {
  PointCloud c = random_cloud(257, 2);
  std::vector<double> gray(c.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = static_cast<double>(i % 200);
  c.attributes.push_back({"gray", PlyScalar::UInt8, gray});
  c.attributes.push_back({"nx", PlyScalar::Float32, std::vector<double>(c.size(), 0.25)});

  const auto bin_path = scratch("rt.ply");
  io::write_point_cloud(c, bin_path, io::CloudFormat::PlyBinary);
  const auto bin = io::read_point_cloud(bin_path);
  REQUIRE(bin.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(std::memcmp(bin.points[i].data(), c.points[i].data(), sizeof(double) * 3) == 0);
  }
  REQUIRE(bin.attributes.size() == 2);
  CHECK(bin.attributes[0].values == gray);
  CHECK(bin.attributes[1].type == PlyScalar::Float32);

  const auto ascii = io::parse_ply(io::format_ply(c, io::CloudFormat::PlyAscii));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK((ascii.points[i] - c.points[i]).cwiseAbs().maxCoeff() < 1e-6 * 100);
  CHECK(ascii.attributes[0].values == gray);

  const auto xyz_path = scratch("rt.xyz");
  io::write_point_cloud(c, xyz_path, io::CloudFormat::Xyz);
  const auto xyz = io::read_point_cloud(xyz_path);
  CHECK(xyz.points == c.points);

  const auto empty = io::parse_ply(io::format_ply(PointCloud{}, io::CloudFormat::PlyBinary));
  CHECK(empty.empty());
  CHECK(io::format_ply(PointCloud{}, io::CloudFormat::PlyAscii).find("element vertex 0") != std::string::npos);
}

TEST_CASE("correspondence files") {
  const auto set = io::parse_correspondences("0 0 0.9\n1 2 0.1", 0.3);
  REQUIRE(set.size() == 1);
  CHECK(set.pairs[0].u == 0);
  CHECK(set.pairs[0].v == 0);
  const auto plain = io::parse_correspondences("3 5", 0.3);
  REQUIRE(plain.size() == 1);
  CHECK(plain.pairs[0].u == 3);
  CHECK(plain.pairs[0].v == 5);
  CHECK(plain.pairs[0].confidence == 1.0);
  CHECK_THROWS_WITH_AS(io::parse_correspondences("a b", 0.3, "m.txt"), doctest::Contains("m.txt:1"), IoError);
  CHECK_THROWS_AS(io::parse_correspondences("1 2 1.5", 0.3), IoError);
  CHECK_THROWS_AS(io::parse_correspondences("-1 2", 0.3), IoError);

  CorrespondenceSet out{{{1, 2, 0.5}, {7, 3, 1.0}}};
  const auto path = scratch("corr.txt");
  io::write_correspondences(out, path);
  const auto back = io::read_correspondences(path, 0.0);
  REQUIRE(back.size() == 2);
  CHECK(back.pairs[1].u == 7);
  CHECK(back.pairs[0].confidence == 0.5);
}

TEST_CASE("warp files") {
  const auto zero = io::parse_warp("0 0 0\n0 0 0\n0 0 0\n");
  CHECK(zero.size() == 3);
  for (const auto& v : zero) CHECK(v == Vec3::Zero());
  std::vector<Vec3> w{Vec3(0.1, -1.0 / 3.0, 2e-17), Vec3(1e5, 3.14159, -0.5)};
  const auto path = scratch("gt.warp");
  io::write_warp(w, path);
  CHECK(io::read_warp(path) == w);
  CHECK_THROWS_AS(io::parse_warp("1 2\n"), IoError);
}

TEST_CASE("run report round trip and schema checks") {
  io::RunReport r;
  r.config.m = 4;
  r.total_iterations = 321;
  r.wall_seconds = 1.5;
  r.source_points = 100;
  r.target_points = 90;
  r.correspondences = 12;
  io::LevelSummary l;
  l.level = 1;
  l.iterations = 321;
  l.stop_reason = StopReason::Stalled;
  l.final_cost = 0.0123;
  l.mean_alpha = 0.4;
  l.metrics = FlowMetrics{0.01, 90, 95, 1, 100};
  r.levels.push_back(l);
  r.metrics = l.metrics;

  const std::string text = io::report_to_json(r);
  CHECK(io::validate_report_json(text).empty());
  const auto back = io::report_from_json(text);
  CHECK(back.config.m == 4);
  CHECK(back.levels == r.levels);
  CHECK(back.total_iterations == 321);
  CHECK(back.metrics == r.metrics);
  CHECK(back.correspondences == 12);

  auto doc = nlohmann::json::parse(text);
  CHECK(doc["schema"] == "ndp.run_report/1");
  doc["levels"][0]["stop_reason"] = "bored";
  CHECK_FALSE(io::validate_report_json(doc.dump()).empty());
  CHECK_THROWS_AS(io::report_from_json(doc.dump()), IoError);
  CHECK_FALSE(io::validate_report_json("{not json").empty());
}

TEST_CASE("eval report round trip") {
  io::EvalReport e{42, FlowMetrics{0.5, 10, 20, 30, 42}};
  const auto back = io::eval_report_from_json(io::eval_report_to_json(e));
  CHECK(back.points == 42);
  CHECK(back.metrics == e.metrics);
  CHECK_THROWS_AS(io::eval_report_from_json("{\"schema\": \"other\"}"), IoError);
}
