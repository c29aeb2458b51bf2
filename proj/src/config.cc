#include "xcal/config.h"

#include <functional>
#include <map>
#include <vector>

namespace xcal {

namespace {

using nlohmann::json;

struct Field {
  std::function<json()> get;
  std::function<void(const json&)> set;
};

using Registry = std::map<std::string, Field>;

void require_number(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
}

void add_real(Registry& r, const std::string& key, double& ref, double scale = 1.0) {
  r[key] = {[&ref, scale] { return json(ref / scale); },
            [&ref, scale, key](const json& v) {
              require_number(key, v);
              ref = v.get<double>() * scale;
            }};
}

void add_deg(Registry& r, const std::string& key, double& ref) {
  add_real(r, key, ref, kPi / 180.0);
}

void add_int(Registry& r, const std::string& key, int& ref) {
  r[key] = {[&ref] { return json(ref); },
            [&ref, key](const json& v) {
              if (!v.is_number_integer()) {
                throw ConfigError("config: '" + key + "' must be an integer");
              }
              ref = v.get<int>();
            }};
}

void add_bool(Registry& r, const std::string& key, bool& ref) {
  r[key] = {[&ref] { return json(ref); },
            [&ref, key](const json& v) {
              if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be a boolean");
              ref = v.get<bool>();
            }};
}

template <class E>
void add_enum(Registry& r, const std::string& key, E& ref,
              std::vector<std::pair<E, std::string>> names) {
  r[key] = {[&ref, names] {
              for (const auto& [e, n] : names) {
                if (e == ref) return json(n);
              }
              return json(nullptr);
            },
            [&ref, names, key](const json& v) {
              if (v.is_string()) {
                for (const auto& [e, n] : names) {
                  if (n == v.get<std::string>()) {
                    ref = e;
                    return;
                  }
                }
              }
              std::string allowed;
              for (const auto& [e, n] : names) allowed += (allowed.empty() ? "" : ", ") + n;
              throw ConfigError("config: '" + key + "' must be one of: " + allowed);
            }};
}

const std::vector<std::pair<DetectorMode, std::string>> kDetectorNames = {
    {DetectorMode::kSegmentEndpoints, "segment-endpoints"},
    {DetectorMode::kPeaks, "peaks"},
    {DetectorMode::kBoth, "both"}};
const std::vector<std::pair<PenaltyMode, std::string>> kPenaltyNames = {
    {PenaltyMode::kOls, "ols"}, {PenaltyMode::kHuber, "huber"}};
const std::vector<std::pair<OutlierMode, std::string>> kOutlierNames = {
    {OutlierMode::kRandom, "random"},
    {OutlierMode::kAdjacent, "adjacent"},
    {OutlierMode::kMixed, "mixed"}};
const std::vector<std::pair<DegenerateMode, std::string>> kDegenerateNames = {
    {DegenerateMode::kNone, "none"},
    {DegenerateMode::kPureTranslation, "pure_translation"},
    {DegenerateMode::kSingleAxis, "single_axis"}};

template <class E>
const char* name_of(const std::vector<std::pair<E, std::string>>& names, E e) {
  for (const auto& [k, n] : names) {
    if (k == e) return n.c_str();
  }
  return "?";
}

// Scratch state for keys that do not map one-to-one onto a struct field.
struct SimExtras {
  bool walls = true;
  double q[4];
  double t[3];
};

Registry sim_registry(SimulateSettings& s, SimExtras& x) {
  Registry r;
  SceneSpec& sc = s.sim.scene;
  add_real(r, "scene.x_min", sc.x_min);
  add_real(r, "scene.x_max", sc.x_max);
  add_real(r, "scene.z_min", sc.z_min);
  add_real(r, "scene.z_max", sc.z_max);
  add_int(r, "scene.n_poles", sc.n_poles);
  add_bool(r, "scene.walls", x.walls);
  add_real(r, "scene.pole_height_min", sc.pole_height_min);
  add_real(r, "scene.pole_height_max", sc.pole_height_max);
  add_real(r, "scene.wall_height", sc.wall_height);
  add_real(r, "scene.points_per_meter", sc.points_per_meter);
  add_real(r, "scene.wall_points_per_m2", sc.wall_points_per_m2);
  add_real(r, "scene.floor_points_per_m2", sc.floor_points_per_m2);
  add_real(r, "scene.pole_radius", sc.pole_radius);
  add_real(r, "scene.point_noise", sc.point_noise);
  add_real(r, "scene.min_pole_separation", sc.min_pole_separation);
  add_real(r, "scene.wall_clearance", sc.wall_clearance);

  TrajectorySpec& tr = s.sim.trajectory;
  add_int(r, "trajectory.n_poses", tr.n_poses);
  add_deg(r, "trajectory.rotation_min_deg", tr.rotation_min);
  add_deg(r, "trajectory.rotation_max_deg", tr.rotation_max);
  add_deg(r, "trajectory.tilt_min_deg", tr.tilt_min);
  add_deg(r, "trajectory.tilt_max_deg", tr.tilt_max);
  add_real(r, "trajectory.translation_min", tr.translation_min);
  add_real(r, "trajectory.translation_max", tr.translation_max);
  add_real(r, "trajectory.sensor_height", tr.sensor_height);
  add_deg(r, "trajectory.lidar_rot_noise_deg", tr.lidar_rot_noise);
  add_real(r, "trajectory.lidar_trans_noise", tr.lidar_trans_noise);
  add_real(r, "trajectory.lidar_vertical_noise_factor", tr.lidar_vertical_noise_factor);
  add_deg(r, "trajectory.cam_rot_noise_deg", tr.cam_rot_noise);
  add_deg(r, "trajectory.cam_dir_noise_deg", tr.cam_dir_noise);
  add_real(r, "trajectory.cam_corrupt_fraction", tr.cam_corrupt_fraction);
  add_deg(r, "trajectory.corrupt_rot_min_deg", tr.corrupt_rot_min);
  add_deg(r, "trajectory.corrupt_rot_max_deg", tr.corrupt_rot_max);
  add_deg(r, "trajectory.corrupt_dir_min_deg", tr.corrupt_dir_min);
  add_deg(r, "trajectory.corrupt_dir_max_deg", tr.corrupt_dir_max);
  add_enum(r, "trajectory.degenerate_mode", tr.degenerate_mode, kDegenerateNames);

  CameraSpec& cam = s.sim.camera;
  add_real(r, "camera.fx", cam.K.fx);
  add_real(r, "camera.fy", cam.K.fy);
  add_real(r, "camera.cx", cam.K.cx);
  add_real(r, "camera.cy", cam.K.cy);
  add_int(r, "camera.width", cam.K.width);
  add_int(r, "camera.height", cam.K.height);
  add_real(r, "camera.noise_px", cam.noise_px);
  add_real(r, "camera.outlier_fraction", cam.outlier_fraction);
  add_enum(r, "camera.outlier_mode", cam.outlier_mode, kOutlierNames);
  add_real(r, "camera.adjacent_offset_min", cam.adjacent_offset_min);
  add_real(r, "camera.adjacent_offset_max", cam.adjacent_offset_max);
  add_real(r, "camera.min_segment_px", cam.min_segment_px);
  add_real(r, "camera.miss_rate", cam.miss_rate);

  r["extrinsic.q"] = {[&x] { return json{x.q[0], x.q[1], x.q[2], x.q[3]}; },
                      [&x](const json& v) {
                        if (!v.is_array() || v.size() != 4) {
                          throw ConfigError("config: 'extrinsic.q' must be [w, x, y, z]");
                        }
                        for (int i = 0; i < 4; ++i) {
                          require_number("extrinsic.q", v[i]);
                          x.q[i] = v[i].get<double>();
                        }
                      }};
  r["extrinsic.t"] = {[&x] { return json{x.t[0], x.t[1], x.t[2]}; },
                      [&x](const json& v) {
                        if (!v.is_array() || v.size() != 3) {
                          throw ConfigError("config: 'extrinsic.t' must be [x, y, z]");
                        }
                        for (int i = 0; i < 3; ++i) {
                          require_number("extrinsic.t", v[i]);
                          x.t[i] = v[i].get<double>();
                        }
                      }};
  r["seed"] = {[&s] { return json(s.seed); },
               [&s](const json& v) {
                 if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
                   throw ConfigError("config: 'seed' must be a non-negative integer");
                 }
                 s.seed = v.get<std::uint64_t>();
               }};
  return r;
}

Registry calib_registry(CalibrateSettings& s) {
  Registry r;
  add_bool(r, "filter", s.init.filter);
  add_deg(r, "angle_tolerance_deg", s.init.angle_tolerance);
  add_deg(r, "rotation_floor_deg", s.init.rotation_floor);
  add_real(r, "spread_floor", s.init.spread_floor);
  add_real(r, "cell_size", s.extraction.cell_size);
  add_int(r, "min_support", s.extraction.min_support);
  add_real(r, "min_height_extent", s.extraction.min_height_extent);
  add_enum(r, "detector_mode", s.extraction.detector_mode, kDetectorNames);
  add_int(r, "min_run_cells", s.extraction.min_run_cells);
  add_deg(r, "sweep_step_deg", s.extraction.sweep_step);
  add_deg(r, "match_angle_tol_deg", s.match.angle_tol);
  add_real(r, "dist_tol_px", s.match.dist_tol);
  add_real(r, "fov_margin_px", s.match.fov_margin);
  add_real(r, "huber_M", s.refine.huber_M);
  add_int(r, "max_iterations", s.refine.max_iterations);
  add_real(r, "step_tolerance", s.refine.step_tolerance);
  add_enum(r, "penalty", s.refine.penalty_mode, kPenaltyNames);
  add_int(r, "min_matches", s.min_matches);
  return r;
}

json registry_to_json(const Registry& r) {
  json out = json::object();
  for (const auto& [key, field] : r) out[key] = field.get();
  return out;
}

void registry_apply(const json& section, Registry& r) {
  if (!section.is_object()) throw ConfigError("config: section must be an object");
  const json flat = flatten(section);
  for (const auto& [key, value] : flat.items()) {
    auto it = r.find(key);
    if (it == r.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second.set(value);
  }
}

void load_extras(const SimConfig& sim, SimExtras& x) {
  x.walls = !sim.scene.walls.empty();
  const Vec4 q = sim.extrinsic.rotation.coeffs();
  for (int i = 0; i < 4; ++i) x.q[i] = q[i];
  for (int i = 0; i < 3; ++i) x.t[i] = sim.extrinsic.translation[i];
}

}  // namespace

SimConfig SimulateSettings::resolved() const {
  SimConfig c = sim;
  c.set_seed(seed);
  return c;
}

json to_json(const SimulateSettings& s) {
  SimulateSettings copy = s;
  SimExtras x;
  load_extras(copy.sim, x);
  return registry_to_json(sim_registry(copy, x));
}

json to_json(const CalibrateSettings& s) {
  CalibrateSettings copy = s;
  return registry_to_json(calib_registry(copy));
}

void apply_settings(const json& section, SimulateSettings& s) {
  SimExtras x;
  load_extras(s.sim, x);
  Registry r = sim_registry(s, x);
  registry_apply(section, r);
  SceneSpec& sc = s.sim.scene;
  sc.walls.clear();
  if (x.walls) {
    const Vec2 c00(sc.x_min, sc.z_min), c10(sc.x_max, sc.z_min);
    const Vec2 c11(sc.x_max, sc.z_max), c01(sc.x_min, sc.z_max);
    sc.walls = {{c00, c10}, {c10, c11}, {c11, c01}, {c01, c00}};
  }
  const Quat q(x.q[0], x.q[1], x.q[2], x.q[3]);
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw ConfigError("config: 'extrinsic.q' must be a unit quaternion");
  }
  s.sim.extrinsic = {q.normalized(), Vec3(x.t[0], x.t[1], x.t[2])};
}

void apply_settings(const json& section, CalibrateSettings& s) {
  Registry r = calib_registry(s);
  registry_apply(section, r);
}

json parse_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("config: expected key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return json{{key, value}};
}

json flatten(const json& section) {
  json out = json::object();
  std::function<void(const std::string&, const json&)> walk =
      [&](const std::string& prefix, const json& node) {
        if (node.is_object()) {
          for (const auto& [k, v] : node.items()) {
            walk(prefix.empty() ? k : prefix + "." + k, v);
          }
        } else {
          out[prefix] = node;
        }
      };
  walk("", section);
  return out;
}

const char* to_string(DetectorMode m) { return name_of(kDetectorNames, m); }
const char* to_string(PenaltyMode m) { return name_of(kPenaltyNames, m); }
const char* to_string(OutlierMode m) { return name_of(kOutlierNames, m); }
const char* to_string(DegenerateMode m) { return name_of(kDegenerateNames, m); }

PenaltyMode penalty_from_string(const std::string& s) {
  for (const auto& [e, n] : kPenaltyNames) {
    if (n == s) return e;
  }
  throw ConfigError("penalty must be 'ols' or 'huber', got '" + s + "'");
}

}  // namespace xcal
