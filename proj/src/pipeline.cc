#include "xcal/pipeline.h"

#include <chrono>

namespace xcal {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct InitAttempt {
  StageReport stage;
  bool degenerate = false;
  DegeneracyReport degeneracy;
};

InitAttempt run_init(const std::string& name, const std::vector<MotionPair>& pairs,
                     InitConfig config, bool filter) {
  InitAttempt a;
  a.stage.name = name;
  config.filter = filter;
  try {
    InitResult r = init_calibrate(pairs, config);
    a.stage.ran = true;
    a.stage.extrinsic = r.extrinsic;
    a.degeneracy = r.degeneracy;
    a.stage.init = std::move(r);
  } catch (const DegenerateMotionError& e) {
    a.stage.error = e.what();
    a.degenerate = true;
    a.degeneracy = e.report();
  } catch (const Error& e) {
    a.stage.error = e.what();
  }
  return a;
}

json stage_to_json(const StageReport& s) {
  json j = {{"ran", s.ran}};
  if (!s.error.empty()) j["error"] = s.error;
  if (!s.ran) return j;
  j["extrinsic"] = rigid_to_json(s.extrinsic);
  if (s.metrics) j["metrics"] = metrics_to_json(*s.metrics);
  if (s.init) {
    j["retained_pair_count"] = s.init->retained_pair_ids.size();
    j["retained_pair_ids"] = s.init->retained_pair_ids;
    j["scale_pair_ids"] = s.init->scale_pair_ids;
    j["scales"] = s.init->scales;
    j["rotation_residual"] = s.init->rotation_residual;
    j["translation_rms"] = s.init->translation_rms;
  }
  if (s.refine) {
    j["iterations"] = s.refine->iterations;
    j["converged"] = s.refine->converged;
    j["final_weighted_rms"] = s.refine->final_weighted_rms;
    j["inlier_fraction"] = s.refine->inlier_fraction;
    j["objective_history"] = s.refine->objective_history;
  }
  return j;
}

}  // namespace

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::kOk:
      return 0;
    case RunStatus::kDegenerate:
      return 3;
    case RunStatus::kInsufficientMatches:
      return 4;
    case RunStatus::kFailed:
      break;
  }
  return 1;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kOk:
      return "ok";
    case RunStatus::kDegenerate:
      return "degenerate";
    case RunStatus::kInsufficientMatches:
      return "insufficient_matches";
    case RunStatus::kFailed:
      break;
  }
  return "failed";
}

const StageReport* Report::stage(const std::string& name) const {
  for (const StageReport& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

CalibrationRun run_calibration(const CalibrationSession& session,
                               const CalibrateOptions& options) {
  const auto t_start = Clock::now();
  const CalibrateSettings& cfg = options.settings;
  CalibrationRun run;
  Report& rep = run.report;
  rep.pair_count = static_cast<int>(session.pairs.size());
  rep.config = to_json(cfg);
  rep.flags = {{"no_filter", options.no_filter},
               {"no_refine", options.no_refine},
               {"penalty", to_string(cfg.refine.penalty_mode)}};
  if (session.ground_truth) rep.ground_truth = session.ground_truth->extrinsic;

  auto t = Clock::now();
  InitAttempt unfiltered = run_init("init_unfiltered", session.pairs, cfg.init, false);
  InitAttempt filtered = run_init("init_filtered", session.pairs, cfg.init, true);
  rep.timing["init_s"] = seconds_since(t);

  const bool use_filter = cfg.init.filter && !options.no_filter;
  const InitAttempt& chosen = use_filter ? filtered : unfiltered;
  rep.degeneracy = chosen.degeneracy;
  rep.stages.push_back(unfiltered.stage);
  rep.stages.push_back(filtered.stage);
  for (const char* name : {"refined_ols", "refined_huber"}) {
    StageReport s;
    s.name = name;
    rep.stages.push_back(std::move(s));
  }

  auto finish = [&](RunStatus status, std::string message) -> CalibrationRun& {
    rep.status = status;
    rep.message = std::move(message);
    if (rep.ground_truth) {
      for (StageReport& s : rep.stages) {
        if (s.ran) s.metrics = evaluate(s.extrinsic, *rep.ground_truth);
      }
      if (!rep.final_stage.empty()) rep.metrics = evaluate(rep.extrinsic, *rep.ground_truth);
    }
    rep.timing["total_s"] = seconds_since(t_start);
    return run;
  };

  if (!chosen.stage.ran) {
    if (chosen.degenerate) {
      return finish(RunStatus::kDegenerate, chosen.stage.error);
    }
    return finish(RunStatus::kFailed, chosen.stage.error);
  }
  const InitResult& init = *chosen.stage.init;
  run.results.init = init;
  rep.retained_pair_count = static_cast<int>(init.retained_pair_ids.size());
  rep.extrinsic = init.extrinsic;
  rep.final_stage = chosen.stage.name;
  if (options.no_refine) return finish(RunStatus::kOk, "");

  t = Clock::now();
  std::vector<LineMatch> matches;
  for (const SessionObservation& obs : session.observations) {
    if (obs.cloud.empty() || obs.segments.empty()) continue;
    const IntensityGrid grid = project_to_floor(obs.cloud, cfg.extraction.cell_size);
    const auto candidates = detect_vertical_lines(grid, obs.cloud, cfg.extraction);
    rep.candidate_count += static_cast<int>(candidates.size());
    const auto m = match_lines(candidates, obs.segments, init.extrinsic, session.K,
                               cfg.match, obs.pose_id);
    matches.insert(matches.end(), m.begin(), m.end());
  }
  rep.match_count = static_cast<int>(matches.size());
  run.results.matches = matches;
  rep.timing["match_s"] = seconds_since(t);
  if (rep.match_count < cfg.min_matches) {
    return finish(RunStatus::kInsufficientMatches,
                  "only " + std::to_string(rep.match_count) + " line matches (need " +
                      std::to_string(cfg.min_matches) + ")");
  }

  t = Clock::now();
  std::string refine_error;
  for (PenaltyMode mode : {PenaltyMode::kOls, PenaltyMode::kHuber}) {
    StageReport& s = rep.stages[mode == PenaltyMode::kOls ? 2 : 3];
    RefineConfig rc = cfg.refine;
    rc.penalty_mode = mode;
    try {
      RefineResult r = refine_translation(matches, init.extrinsic.rotation,
                                          init.extrinsic.translation, session.K, rc);
      s.ran = true;
      s.extrinsic = {init.extrinsic.rotation, r.translation};
      if (mode == cfg.refine.penalty_mode) run.results.refined = r;
      s.refine = std::move(r);
    } catch (const Error& e) {
      s.error = e.what();
      if (mode == cfg.refine.penalty_mode) refine_error = e.what();
    }
  }
  rep.timing["refine_s"] = seconds_since(t);
  if (!refine_error.empty()) {
    return finish(RunStatus::kInsufficientMatches, refine_error);
  }
  const StageReport& final_stage =
      rep.stages[cfg.refine.penalty_mode == PenaltyMode::kOls ? 2 : 3];
  rep.extrinsic = final_stage.extrinsic;
  rep.final_stage = final_stage.name;
  return finish(RunStatus::kOk, "");
}

json metrics_to_json(const Metrics& m) {
  return {{"rotation_error", m.rotation_error},
          {"rotation_error_deg", m.rotation_error_deg},
          {"translation_error_m", m.translation_error},
          {"translation_ratio", m.translation_ratio}};
}

json to_json(const Report& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = to_string(r.status);
  j["exit_code"] = exit_code(r.status);
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.final_stage.empty()) {
    j["extrinsic"] = rigid_to_json(r.extrinsic);
    j["final_stage"] = r.final_stage;
  }
  if (r.metrics) j["metrics"] = metrics_to_json(*r.metrics);
  json stages = json::object();
  for (const StageReport& s : r.stages) stages[s.name] = stage_to_json(s);
  j["stages"] = std::move(stages);
  j["pair_count"] = r.pair_count;
  j["retained_pair_count"] = r.retained_pair_count;
  j["candidate_count"] = r.candidate_count;
  j["match_count"] = r.match_count;
  j["degeneracy"] = degeneracy_to_json(r.degeneracy);
  if (r.ground_truth) j["ground_truth"] = rigid_to_json(*r.ground_truth);
  j["flags"] = r.flags;
  j["config"] = r.config;
  j["timing"] = r.timing;
  return j;
}

}  // namespace xcal
