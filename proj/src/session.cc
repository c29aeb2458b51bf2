#include "xcal/session.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace xcal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool same_rigid(const Rigid3& a, const Rigid3& b) {
  return a.rotation.coeffs() == b.rotation.coeffs() && a.translation == b.translation;
}

bool same_pair(const MotionPair& a, const MotionPair& b) {
  return a.id == b.id && a.pose_i == b.pose_i && a.pose_j == b.pose_j &&
         same_rigid(a.lidar_motion, b.lidar_motion) &&
         a.cam_rotation.coeffs() == b.cam_rotation.coeffs() &&
         a.cam_translation_dir == b.cam_translation_dir && a.valid == b.valid;
}

}  // namespace

json line3d_to_json(const VerticalLine3D& l) {
  return {{"x", l.x}, {"z", l.z}, {"y_min", l.y_min}, {"y_max", l.y_max},
          {"support", l.support}};
}

VerticalLine3D line3d_from_json(const json& j) {
  VerticalLine3D l;
  l.x = j.at("x").get<double>();
  l.z = j.at("z").get<double>();
  l.y_min = j.at("y_min").get<double>();
  l.y_max = j.at("y_max").get<double>();
  l.support = j.at("support").get<int>();
  return l;
}

json degeneracy_to_json(const DegeneracyReport& d) {
  return {{"pure_translation", d.pure_translation},
          {"single_axis", d.single_axis},
          {"max_pair_angle", d.max_pair_angle},
          {"axis_spread", d.axis_spread}};
}

DegeneracyReport degeneracy_from_json(const json& j) {
  DegeneracyReport d;
  d.pure_translation = j.at("pure_translation").get<bool>();
  d.single_axis = j.at("single_axis").get<bool>();
  d.max_pair_angle = j.at("max_pair_angle").get<double>();
  d.axis_spread = j.at("axis_spread").get<double>();
  return d;
}

json init_to_json(const InitResult& r) {
  return {{"extrinsic", rigid_to_json(r.extrinsic)},
          {"retained_pair_ids", r.retained_pair_ids},
          {"scales", r.scales},
          {"scale_pair_ids", r.scale_pair_ids},
          {"rotation_residual", r.rotation_residual},
          {"translation_rms", r.translation_rms},
          {"degeneracy", degeneracy_to_json(r.degeneracy)}};
}

InitResult init_from_json(const json& j) {
  InitResult r;
  r.extrinsic = rigid_from_json(j.at("extrinsic"));
  r.retained_pair_ids = j.at("retained_pair_ids").get<std::vector<int>>();
  r.scales = j.at("scales").get<std::vector<double>>();
  r.scale_pair_ids = j.at("scale_pair_ids").get<std::vector<int>>();
  r.rotation_residual = j.at("rotation_residual").get<double>();
  r.translation_rms = j.at("translation_rms").get<double>();
  r.degeneracy = degeneracy_from_json(j.at("degeneracy"));
  return r;
}

json refined_to_json(const RefineResult& r) {
  return {{"translation", vec3_to_json(r.translation)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"final_weighted_rms", r.final_weighted_rms},
          {"inlier_fraction", r.inlier_fraction},
          {"objective_history", r.objective_history}};
}

RefineResult refined_from_json(const json& j) {
  RefineResult r;
  r.translation = vec3_from_json(j.at("translation"));
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.final_weighted_rms = j.at("final_weighted_rms").get<double>();
  r.inlier_fraction = j.at("inlier_fraction").get<double>();
  r.objective_history = j.at("objective_history").get<std::vector<double>>();
  return r;
}

json match_to_json(const LineMatch& m) {
  return {{"candidate", line3d_to_json(m.candidate)},
          {"line", {m.line.w0, m.line.w1, m.line.w2}},
          {"residual", m.residual},
          {"pose_id", m.pose_id},
          {"candidate_index", m.candidate_index},
          {"segment_index", m.segment_index}};
}

LineMatch match_from_json(const json& j) {
  LineMatch m;
  m.candidate = line3d_from_json(j.at("candidate"));
  const auto& w = j.at("line");
  m.line = {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>(), true};
  m.residual = j.at("residual").get<double>();
  m.pose_id = j.at("pose_id").get<int>();
  m.candidate_index = j.at("candidate_index").get<int>();
  m.segment_index = j.at("segment_index").get<int>();
  return m;
}

namespace {

std::string cloud_file_name(int pose_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pose_%04d.csv", pose_id);
  return buf;
}

}  // namespace

bool SessionObservation::operator==(const SessionObservation& o) const {
  return pose_id == o.pose_id && cloud_path == o.cloud_path && cloud == o.cloud &&
         segments.size() == o.segments.size() &&
         std::equal(segments.begin(), segments.end(), o.segments.begin(),
                    [](const Segment2D& a, const Segment2D& b) {
                      return a.p0 == b.p0 && a.p1 == b.p1;
                    }) &&
         segment_labels == o.segment_labels;
}

bool GroundTruth::operator==(const GroundTruth& o) const {
  return same_rigid(extrinsic, o.extrinsic) && poses.size() == o.poses.size() &&
         std::equal(poses.begin(), poses.end(), o.poses.begin(), same_rigid) &&
         corrupt_pair_ids == o.corrupt_pair_ids;
}

bool SessionResults::operator==(const SessionResults& o) const {
  if (init.has_value() != o.init.has_value() ||
      refined.has_value() != o.refined.has_value() ||
      matches.size() != o.matches.size()) {
    return false;
  }
  // The JSON forms carry every field at full precision.
  if (init && init_to_json(*init) != init_to_json(*o.init)) return false;
  if (refined && refined_to_json(*refined) != refined_to_json(*o.refined)) return false;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (match_to_json(matches[i]) != match_to_json(o.matches[i])) return false;
  }
  return true;
}

bool CalibrationSession::operator==(const CalibrationSession& o) const {
  return schema_version == o.schema_version && K.fx == o.K.fx && K.fy == o.K.fy &&
         K.cx == o.K.cx && K.cy == o.K.cy && K.width == o.K.width &&
         K.height == o.K.height && pose_count == o.pose_count &&
         pairs.size() == o.pairs.size() &&
         std::equal(pairs.begin(), pairs.end(), o.pairs.begin(), same_pair) &&
         observations == o.observations && ground_truth == o.ground_truth &&
         config == o.config && results == o.results;
}

json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw MalformedDocumentError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json quat_to_json(const Quat& q) { return {q.w, q.x, q.y, q.z}; }

Quat quat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw MalformedDocumentError("expected a quaternion [w, x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json rigid_to_json(const Rigid3& T) {
  return {{"q", quat_to_json(T.rotation)}, {"t", vec3_to_json(T.translation)}};
}

Rigid3 rigid_from_json(const json& j) {
  return {quat_from_json(j.at("q")), vec3_from_json(j.at("t"))};
}

std::string cloud_to_csv(const PointCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * 72);
  char buf[96];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int n = std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", cloud.x[i],
                                cloud.y[i], cloud.z[i]);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

PointCloud cloud_from_csv(const std::string& text) {
  PointCloud cloud;
  const char* p = text.data();
  const char* end = p + text.size();
  int line = 0;
  while (p < end) {
    ++line;
    const char* eol = std::find(p, end, '\n');
    if (eol == p || (eol - p == 1 && *p == '\r')) {
      p = eol + 1;
      continue;
    }
    double v[3];
    const char* q = p;
    for (int k = 0; k < 3; ++k) {
      const auto [next, ec] = std::from_chars(q, eol, v[k]);
      const bool sep_ok = k < 2 ? (next < eol && *next == ',')
                                : (next == eol || (*next == '\r' && next + 1 == eol));
      if (ec != std::errc() || !sep_ok) {
        throw MalformedDocumentError("point cloud: bad row " + std::to_string(line));
      }
      q = next + 1;
    }
    cloud.push_back({v[0], v[1], v[2]});
    p = eol + 1;
  }
  return cloud;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

CalibrationSession session_from_simulation(const SimOutput& sim, const std::string& stem,
                                           const json& config_snapshot) {
  CalibrationSession s;
  s.K = sim.K;
  s.pose_count = static_cast<int>(sim.trajectory.poses.size());
  s.pairs = sim.motion_pairs;
  for (const PoseObservation& o : sim.observations) {
    SessionObservation so;
    so.pose_id = o.pose_id;
    so.cloud_path = stem + ".clouds/" + cloud_file_name(o.pose_id);
    so.cloud = o.cloud;
    so.segments = o.segments;
    so.segment_labels = o.segment_labels;
    s.observations.push_back(std::move(so));
  }
  GroundTruth gt;
  gt.extrinsic = sim.ground_truth_extrinsic;
  gt.poses = sim.trajectory.poses;
  gt.corrupt_pair_ids = sim.corrupt_pair_ids;
  s.ground_truth = gt;
  s.config = config_snapshot;
  return s;
}

json to_json(const CalibrationSession& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["intrinsics"] = {{"fx", s.K.fx}, {"fy", s.K.fy}, {"cx", s.K.cx},
                     {"cy", s.K.cy}, {"width", s.K.width}, {"height", s.K.height}};
  j["pose_count"] = s.pose_count;
  json pairs = json::array();
  for (const MotionPair& p : s.pairs) {
    pairs.push_back({{"id", p.id},
                     {"pose_i", p.pose_i},
                     {"pose_j", p.pose_j},
                     {"lidar_motion", rigid_to_json(p.lidar_motion)},
                     {"cam_rotation", quat_to_json(p.cam_rotation)},
                     {"cam_translation_dir", vec3_to_json(p.cam_translation_dir)},
                     {"valid", p.valid}});
  }
  j["motion_pairs"] = std::move(pairs);
  json obs = json::array();
  for (const SessionObservation& o : s.observations) {
    json segs = json::array();
    for (const Segment2D& sg : o.segments) {
      segs.push_back({sg.p0.x(), sg.p0.y(), sg.p1.x(), sg.p1.y()});
    }
    json jo = {{"pose_id", o.pose_id}, {"cloud", o.cloud_path}, {"segments", segs}};
    if (!o.segment_labels.empty()) jo["segment_labels"] = o.segment_labels;
    obs.push_back(std::move(jo));
  }
  j["observations"] = std::move(obs);
  if (s.ground_truth) {
    json poses = json::array();
    for (const Rigid3& T : s.ground_truth->poses) poses.push_back(rigid_to_json(T));
    j["ground_truth"] = {{"extrinsic", rigid_to_json(s.ground_truth->extrinsic)},
                         {"poses", poses},
                         {"corrupt_pair_ids", s.ground_truth->corrupt_pair_ids}};
  }
  j["config"] = s.config;
  json results = json::object();
  if (s.results.init) results["init"] = init_to_json(*s.results.init);
  if (!s.results.matches.empty()) {
    json m = json::array();
    for (const LineMatch& lm : s.results.matches) m.push_back(match_to_json(lm));
    results["matches"] = std::move(m);
  }
  if (s.results.refined) results["refined"] = refined_to_json(*s.results.refined);
  j["results"] = std::move(results);
  return j;
}

CalibrationSession session_from_json(const json& j) {
  if (!j.is_object()) throw MalformedDocumentError("session: not a JSON object");
  if (!j.contains("schema_version")) {
    throw MalformedDocumentError("session: missing schema_version");
  }
  const json& ver = j.at("schema_version");
  const std::string version = ver.is_string() ? ver.get<std::string>() : ver.dump();
  if (version != kSchemaVersion) {
    throw UnsupportedSchemaError("session: unsupported schema_version '" + version +
                                 "' (supported: " + kSchemaVersion + ")");
  }
  try {
    CalibrationSession s;
    s.schema_version = version;
    const json& k = j.at("intrinsics");
    s.K.fx = k.at("fx").get<double>();
    s.K.fy = k.at("fy").get<double>();
    s.K.cx = k.at("cx").get<double>();
    s.K.cy = k.at("cy").get<double>();
    s.K.width = k.at("width").get<int>();
    s.K.height = k.at("height").get<int>();
    s.pose_count = j.at("pose_count").get<int>();
    for (const json& p : j.at("motion_pairs")) {
      MotionPair mp;
      mp.id = p.at("id").get<int>();
      mp.pose_i = p.at("pose_i").get<int>();
      mp.pose_j = p.at("pose_j").get<int>();
      mp.lidar_motion = rigid_from_json(p.at("lidar_motion"));
      mp.cam_rotation = quat_from_json(p.at("cam_rotation"));
      mp.cam_translation_dir = vec3_from_json(p.at("cam_translation_dir"));
      mp.valid = p.at("valid").get<bool>();
      s.pairs.push_back(mp);
    }
    for (const json& o : j.at("observations")) {
      SessionObservation so;
      so.pose_id = o.at("pose_id").get<int>();
      so.cloud_path = o.at("cloud").get<std::string>();
      for (const json& sg : o.at("segments")) {
        if (!sg.is_array() || sg.size() != 4) {
          throw MalformedDocumentError("session: segment must be [u0, v0, u1, v1]");
        }
        so.segments.push_back({{sg[0].get<double>(), sg[1].get<double>()},
                               {sg[2].get<double>(), sg[3].get<double>()}});
      }
      if (o.contains("segment_labels")) {
        so.segment_labels = o.at("segment_labels").get<std::vector<int>>();
      }
      s.observations.push_back(std::move(so));
    }
    if (j.contains("ground_truth")) {
      const json& g = j.at("ground_truth");
      GroundTruth gt;
      gt.extrinsic = rigid_from_json(g.at("extrinsic"));
      for (const json& p : g.at("poses")) gt.poses.push_back(rigid_from_json(p));
      gt.corrupt_pair_ids = g.at("corrupt_pair_ids").get<std::vector<int>>();
      s.ground_truth = gt;
    }
    if (j.contains("config")) s.config = j.at("config");
    if (j.contains("results")) {
      const json& r = j.at("results");
      if (r.contains("init")) s.results.init = init_from_json(r.at("init"));
      if (r.contains("matches")) {
        for (const json& m : r.at("matches")) s.results.matches.push_back(match_from_json(m));
      }
      if (r.contains("refined")) s.results.refined = refined_from_json(r.at("refined"));
    }
    return s;
  } catch (const json::exception& e) {
    throw MalformedDocumentError(std::string("session: ") + e.what());
  }
}

CalibrationSession load_session(const fs::path& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw MalformedDocumentError("session: '" + path.string() + "' is not valid JSON");
  }
  CalibrationSession s = session_from_json(j);
  const fs::path base = path.parent_path();
  for (SessionObservation& o : s.observations) {
    const fs::path cloud = base / o.cloud_path;
    if (!fs::exists(cloud)) {
      throw MissingFileError("session: point-cloud file '" + cloud.string() + "' not found");
    }
    o.cloud = cloud_from_csv(read_file(cloud));
  }
  return s;
}

void save_session(const CalibrationSession& session, const fs::path& path) {
  const fs::path base = path.parent_path();
  for (const SessionObservation& o : session.observations) {
    write_file_atomic(base / o.cloud_path, cloud_to_csv(o.cloud));
  }
  write_file_atomic(path, to_json(session).dump(2) + "\n");
}

}  // namespace xcal
