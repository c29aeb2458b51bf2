#include "xcal/cli.h"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "xcal/config.h"
#include "xcal/pipeline.h"
#include "xcal/session.h"

namespace xcal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string& text, std::size_t n, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + text + "' is not a number list");
    }
  }
  if (v.size() != n) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " values");
  }
  return v;
}

Vec3 parse_vec3(const std::string& text, const char* what) {
  const auto v = parse_list(text, 3, what);
  return {v[0], v[1], v[2]};
}

Quat parse_quat(const std::string& text, const char* what) {
  const auto v = parse_list(text, 4, what);
  const Quat q{v[0], v[1], v[2], v[3]};
  if (std::abs(q.norm() - 1.0) > 1e-3) {
    throw ConfigError(std::string(what) + ": quaternion is not unit");
  }
  return q.normalized();
}

json read_json_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const SessionError& e) {
    throw ConfigError(e.what());
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("'" + path + "' is not a JSON object");
  }
  return j;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulateSettings sim;
  CalibrateSettings calib;
  if (!a.config.empty()) {
    const json doc = read_json_file(a.config);
    for (const auto& [key, value] : doc.items()) {
      if (key != "simulate" && key != "calibrate") {
        throw ConfigError("config: unknown section '" + key + "'");
      }
    }
    if (doc.contains("simulate")) apply_settings(doc.at("simulate"), sim);
    if (doc.contains("calibrate")) apply_settings(doc.at("calibrate"), calib);
  }
  for (const std::string& s : a.sets) apply_settings(parse_assignment(s), sim);
  if (a.seed) sim.seed = *a.seed;

  const SimConfig config = sim.resolved();
  SimOutput result;
  try {
    result = simulate(config);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const fs::path path(a.out);
  const json snapshot = {{"simulate", to_json(sim)}, {"calibrate", to_json(calib)}};
  const CalibrationSession session =
      session_from_simulation(result, path.stem().string(), snapshot);
  save_session(session, path);
  out << "wrote " << path.string() << ": " << session.pose_count << " poses, "
      << session.pairs.size() << " pairs, " << session.observations.size()
      << " observations\n";
  return kExitOk;
}

struct CalibrateArgs {
  std::string session;
  std::string out;
  std::string save_session;
  std::string thresholds;
  std::string penalty;
  std::vector<std::string> sets;
  bool no_filter = false;
  bool no_refine = false;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  CalibrationSession session;
  try {
    session = load_session(a.session);
  } catch (const SessionError& e) {
    throw ConfigError(e.what());
  }
  CalibrateOptions opt;
  if (session.config.is_object() && session.config.contains("calibrate")) {
    apply_settings(session.config.at("calibrate"), opt.settings);
  }
  if (!a.thresholds.empty()) {
    json t = read_json_file(a.thresholds);
    apply_settings(t.contains("calibrate") ? t.at("calibrate") : t, opt.settings);
  }
  for (const std::string& s : a.sets) apply_settings(parse_assignment(s), opt.settings);
  if (!a.penalty.empty()) opt.settings.refine.penalty_mode = penalty_from_string(a.penalty);
  opt.no_filter = a.no_filter;
  opt.no_refine = a.no_refine;

  CalibrationRun run = run_calibration(session, opt);
  write_file_atomic(a.out, to_json(run.report).dump(2) + "\n");
  if (!a.save_session.empty()) {
    session.results = run.results;
    session.config["calibrate"] = to_json(opt.settings);
    save_session(session, a.save_session);
  }

  const Report& r = run.report;
  out << "status " << to_string(r.status);
  if (!r.final_stage.empty()) {
    out << ", final " << r.final_stage << " q " << to_string(r.extrinsic.rotation) << " t ["
        << r.extrinsic.translation.x() << ", " << r.extrinsic.translation.y() << ", "
        << r.extrinsic.translation.z() << "]";
  }
  out << ", pairs " << r.retained_pair_count << "/" << r.pair_count << ", matches "
      << r.match_count << "\n";
  if (!r.message.empty()) out << r.message << "\n";
  return exit_code(r.status);
}

struct EvaluateArgs {
  std::string report;
  std::string stage;
  std::string t, q;
  std::string session;
  std::string gt_t, gt_q;
  std::string format = "text";
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  // Estimate.
  std::optional<Quat> est_q;
  Vec3 est_t;
  std::optional<Rigid3> report_gt;
  if (!a.report.empty()) {
    const json rep = read_json_file(a.report);
    const json* node = nullptr;
    if (!a.stage.empty()) {
      if (!rep.contains("stages") || !rep["stages"].contains(a.stage)) {
        throw ConfigError("report has no stage '" + a.stage + "'");
      }
      if (!rep["stages"][a.stage].value("ran", false)) {
        throw ConfigError("stage '" + a.stage + "' did not run");
      }
      node = &rep["stages"][a.stage]["extrinsic"];
    } else {
      if (!rep.contains("extrinsic")) throw ConfigError("report has no final estimate");
      node = &rep["extrinsic"];
    }
    const Rigid3 T = rigid_from_json(*node);
    est_q = T.rotation;
    est_t = T.translation;
    if (rep.contains("ground_truth")) report_gt = rigid_from_json(rep["ground_truth"]);
  } else if (!a.t.empty()) {
    est_t = parse_vec3(a.t, "--t");
    if (!a.q.empty()) est_q = parse_quat(a.q, "--q");
  } else {
    throw ConfigError("evaluate needs --report or --t");
  }

  // Ground truth: explicit flags, then a session, then the report itself.
  std::optional<Quat> gt_q;
  std::optional<Vec3> gt_t;
  if (!a.gt_t.empty()) {
    gt_t = parse_vec3(a.gt_t, "--gt-t");
    if (!a.gt_q.empty()) gt_q = parse_quat(a.gt_q, "--gt-q");
  } else if (!a.session.empty()) {
    CalibrationSession s;
    try {
      s = load_session(a.session);
    } catch (const SessionError& e) {
      throw ConfigError(e.what());
    }
    if (!s.ground_truth) throw ConfigError("session has no ground truth");
    gt_q = s.ground_truth->extrinsic.rotation;
    gt_t = s.ground_truth->extrinsic.translation;
  } else if (report_gt) {
    gt_q = report_gt->rotation;
    gt_t = report_gt->translation;
  }
  if (!gt_t) throw ConfigError("missing ground truth (use --gt-t, --session or a report with one)");

  const TranslationError te = error_ratio(est_t, *gt_t);
  std::optional<double> deg;
  if (est_q && gt_q) deg = 90.0 * rotation_error(*est_q, *gt_q);

  if (a.format == "json") {
    json j = {{"translation_error_m", te.error},
              {"translation_ratio", te.ratio},
              {"translation_ratio_percent", 100.0 * te.ratio}};
    if (deg) {
      j["rotation_error_deg"] = *deg;
      j["rotation_error"] = *deg / 90.0;
    }
    out << j.dump(2) << "\n";
  } else {
    char buf[128];
    if (deg) {
      std::snprintf(buf, sizeof(buf), "%.4f deg, %.4f m, %.2f%%\n", *deg, te.error,
                    100.0 * te.ratio);
    } else {
      std::snprintf(buf, sizeof(buf), "%.4f m, %.2f%%\n", te.error, 100.0 * te.ratio);
    }
    out << buf;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Targetless lidar-camera extrinsic calibration", "xcal"};
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic calibration session");
  sim->add_option("--config", sa.config, "JSON config file");
  sim->add_option("--out", sa.out, "session file to write")->required();
  sim->add_option("--set", sa.sets, "override a simulate key, e.g. trajectory.n_poses=10");
  sim->add_option("--seed", sa.seed, "master seed");

  CalibrateArgs ca;
  auto* cal = app.add_subcommand("calibrate", "estimate the extrinsic of a session");
  cal->add_option("--session", ca.session, "session file")->required();
  cal->add_option("--out", ca.out, "report file to write")->required();
  cal->add_flag("--no-filter", ca.no_filter, "skip rotation-angle filtration");
  cal->add_flag("--no-refine", ca.no_refine, "stop after initialization");
  cal->add_option("--penalty", ca.penalty, "refinement penalty")
      ->check(CLI::IsMember({"ols", "huber"}));
  cal->add_option("--thresholds", ca.thresholds, "JSON file of calibrate keys");
  cal->add_option("--set", ca.sets, "override a calibrate key, e.g. huber_M=2");
  cal->add_option("--save-session", ca.save_session,
                  "write the session with stage results to this path");

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "compare an estimate with ground truth");
  ev->add_option("--report", ea.report, "report written by calibrate");
  ev->add_option("--stage", ea.stage, "stage to evaluate instead of the final estimate");
  ev->add_option("--t", ea.t, "estimated translation x,y,z");
  ev->add_option("--q", ea.q, "estimated rotation w,x,y,z");
  ev->add_option("--session", ea.session, "session with ground truth");
  ev->add_option("--gt-t", ea.gt_t, "ground-truth translation x,y,z");
  ev->add_option("--gt-q", ea.gt_q, "ground-truth rotation w,x,y,z");
  ev->add_option("--format", ea.format, "output format")
      ->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sa, out);
    if (cal->parsed()) return cmd_calibrate(ca, out);
    return cmd_evaluate(ea, out);
  } catch (const ConfigError& e) {
    err << "xcal: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "xcal: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace xcal
