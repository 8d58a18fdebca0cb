#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teamnav/sim.hpp"

namespace teamnav {

using json = nlohmann::json;

json to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j);

json to_json(const PlannedPath& path);
PlannedPath path_from_json(const json& j);

/// Polyline of the path sampled every `step` seconds (end point included).
std::vector<Vec3> sample_path(const PlannedPath& path, double step = 0.1);

// ----------------------------------------------------------------- trace

struct TraceHeader {
  std::string scenario;
  std::string mode;
  double dt = 0.02;
  double resolution = 0.2;
  Vec3 origin = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  double goal_tolerance = 0.5;
  int agents = 0;
};

struct Trace {
  TraceHeader header;
  std::vector<TickRecord> records;
};

/// Raised while parsing a trace; `line()` is 1-based.
class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

TraceHeader make_header(const World& world);
json to_json(const TraceHeader& h);
json to_json(const TickRecord& rec);
TickRecord tick_from_json(const json& j);

/// One JSON object per line: a header, then one record per tick.
void write_trace(std::ostream& out, const World& world);
Trace read_trace(std::istream& in);

// --------------------------------------------------------------- metrics

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& m);
/// Appends one row; the header is written only when the file is new or empty.
void append_metrics_csv(const std::filesystem::path& path, const MetricsReport& m);

}  // namespace teamnav
