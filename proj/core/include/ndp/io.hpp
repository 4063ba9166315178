#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ndp/config.hpp"
#include "ndp/metrics.hpp"
#include "ndp/optimizer.hpp"
#include "ndp/types.hpp"

namespace ndp::io {

/// Distinct failure kinds of the point-cloud reader.
class MalformedHeader : public IoError {
public:
  using IoError::IoError;
};
class TruncatedData : public IoError {
public:
  using IoError::IoError;
};
class UnsupportedFormat : public IoError {
public:
  using IoError::IoError;
};

enum class CloudFormat { PlyAscii, PlyBinary, Xyz };

/// PLY (ascii or binary_little_endian; vertex x/y/z as float or double;
/// other vertex properties kept as attributes; other elements skipped) or
/// whitespace-delimited XYZ text, chosen by the `.ply` extension.
PointCloud read_point_cloud(const std::filesystem::path& path);

/// Parses PLY bytes already in memory; `origin` only labels errors.
PointCloud parse_ply(const std::string& bytes, const std::string& origin = "<memory>");
PointCloud parse_xyz(const std::string& text, const std::string& origin = "<memory>");

/// Binary PLY stores positions as double (bit-exact round trip); ascii uses
/// 9 significant digits. Attributes keep their declared PLY types.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       CloudFormat format = CloudFormat::PlyBinary);
std::string format_ply(const PointCloud& cloud, CloudFormat format);

/// Lines "u v [confidence]" (confidence defaults to 1); '#' comments and
/// blank lines ignored. Rows with confidence < threshold are dropped.
/// Indices are validated later, against the clouds they refer to.
CorrespondenceSet read_correspondences(const std::filesystem::path& path, double threshold);
CorrespondenceSet parse_correspondences(const std::string& text, double threshold, const std::string& origin = "<memory>");
void write_correspondences(const CorrespondenceSet& set, const std::filesystem::path& path);

/// One "dx dy dz" row per source point, 17 significant digits.
std::vector<Vec3> read_warp(const std::filesystem::path& path);
std::vector<Vec3> parse_warp(const std::string& text, const std::string& origin = "<memory>");
void write_warp(const std::vector<Vec3>& warp, const std::filesystem::path& path);

/// Per-level summary of a run report.
struct LevelSummary {
  int level = 0;
  int iterations = 0;
  StopReason stop_reason = StopReason::MaxIter;
  double final_cost = 0.0;
  double mean_alpha = 0.0;
  std::optional<FlowMetrics> metrics;

  friend bool operator==(const LevelSummary&, const LevelSummary&) = default;
};

struct RunReport {
  static constexpr const char* kSchema = "ndp.run_report/1";

  PyramidConfig config;
  std::vector<LevelSummary> levels;
  int total_iterations = 0;
  double wall_seconds = 0.0;
  std::size_t source_points = 0;
  std::size_t target_points = 0;
  std::size_t correspondences = 0;
  std::optional<FlowMetrics> metrics;
};

std::string report_to_json(const RunReport& report);
/// Throws IoError when the document does not follow the schema.
RunReport report_from_json(const std::string& text);
/// Empty when `text` is a valid report; otherwise the list of violations.
std::vector<std::string> validate_report_json(const std::string& text);

/// Report of the `eval` command: metrics of one predicted warp.
struct EvalReport {
  static constexpr const char* kSchema = "ndp.eval_report/1";

  std::size_t points = 0;
  FlowMetrics metrics;
};

std::string eval_report_to_json(const EvalReport& report);
/// Throws IoError when the document does not follow the schema.
EvalReport eval_report_from_json(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ndp::io
