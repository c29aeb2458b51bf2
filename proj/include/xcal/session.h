// CalibrationSession: the unit of file exchange between the CLI commands.
//
// A session is one JSON document. Point clouds live next to it as CSV files
// (one "x,y,z" row per point) referenced by paths relative to the session
// file. Numbers are written with 17 significant digits so a save/load cycle
// reproduces every double exactly.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "xcal/config.h"
#include "xcal/geom.h"
#include "xcal/handeye.h"
#include "xcal/lines.h"
#include "xcal/refine.h"
#include "xcal/simulate.h"

namespace xcal {

inline constexpr const char* kSchemaVersion = "1";

class SessionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedSchemaError : public SessionError {
 public:
  using SessionError::SessionError;
};

class MalformedDocumentError : public SessionError {
 public:
  using SessionError::SessionError;
};

class MissingFileError : public SessionError {
 public:
  using SessionError::SessionError;
};

struct SessionObservation {
  int pose_id = 0;
  std::string cloud_path;  // relative to the session file
  PointCloud cloud;
  std::vector<Segment2D> segments;
  std::vector<int> segment_labels;  // ground truth, empty when unknown

  bool operator==(const SessionObservation&) const;
};

struct GroundTruth {
  Rigid3 extrinsic;
  std::vector<Rigid3> poses;
  std::vector<int> corrupt_pair_ids;

  bool operator==(const GroundTruth&) const;
};

// Stage results written back by `calibrate --save-session`.
struct SessionResults {
  std::optional<InitResult> init;
  std::vector<LineMatch> matches;
  std::optional<RefineResult> refined;

  bool operator==(const SessionResults&) const;
};

struct CalibrationSession {
  std::string schema_version = kSchemaVersion;
  CameraIntrinsics K;
  int pose_count = 0;
  std::vector<MotionPair> pairs;
  std::vector<SessionObservation> observations;
  std::optional<GroundTruth> ground_truth;
  nlohmann::json config = nlohmann::json::object();  // snapshot
  SessionResults results;

  bool operator==(const CalibrationSession&) const;
};

// Session for a simulator run. Cloud paths are "<stem>.clouds/pose_NNNN.csv"
// so the session can be saved as "<stem>.json".
CalibrationSession session_from_simulation(const SimOutput& sim,
                                           const std::string& stem,
                                           const nlohmann::json& config_snapshot);

// Throws UnsupportedSchemaError, MalformedDocumentError or MissingFileError.
CalibrationSession load_session(const std::filesystem::path& path);

// Writes the document and every cloud file, each via a temporary file and a
// rename.
void save_session(const CalibrationSession& session,
                  const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);
std::string read_file(const std::filesystem::path& path);

std::string cloud_to_csv(const PointCloud& cloud);
PointCloud cloud_from_csv(const std::string& text);

nlohmann::json rigid_to_json(const Rigid3& T);
Rigid3 rigid_from_json(const nlohmann::json& j);
nlohmann::json quat_to_json(const Quat& q);
Quat quat_from_json(const nlohmann::json& j);
nlohmann::json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j);

nlohmann::json line3d_to_json(const VerticalLine3D& l);
VerticalLine3D line3d_from_json(const nlohmann::json& j);
nlohmann::json degeneracy_to_json(const DegeneracyReport& d);
DegeneracyReport degeneracy_from_json(const nlohmann::json& j);
nlohmann::json init_to_json(const InitResult& r);
InitResult init_from_json(const nlohmann::json& j);
nlohmann::json refined_to_json(const RefineResult& r);
RefineResult refined_from_json(const nlohmann::json& j);
nlohmann::json match_to_json(const LineMatch& m);
LineMatch match_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CalibrationSession& session);
CalibrationSession session_from_json(const nlohmann::json& j);

}  // namespace xcal
