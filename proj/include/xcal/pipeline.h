// End-to-end calibration of a session: hand-eye init with and without
// filtration, vertical-line extraction, matching and translation refinement
// under both penalties, collected into one report.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "xcal/config.h"
#include "xcal/session.h"
#include "xcal/simulate.h"

namespace xcal {

enum class RunStatus { kOk, kDegenerate, kInsufficientMatches, kFailed };

// 0 ok, 1 failed, 3 degenerate motion, 4 insufficient matches.
int exit_code(RunStatus status);
const char* to_string(RunStatus status);

struct CalibrateOptions {
  CalibrateSettings settings;
  bool no_filter = false;  // initialize from the unfiltered pair set
  bool no_refine = false;  // report the init estimate as final
};

struct StageReport {
  std::string name;
  bool ran = false;
  std::string error;  // set when the stage threw
  Rigid3 extrinsic;
  std::optional<Metrics> metrics;  // iff ground truth is known
  std::optional<InitResult> init;
  std::optional<RefineResult> refine;
};

struct Report {
  RunStatus status = RunStatus::kOk;
  std::string message;
  Rigid3 extrinsic;  // final estimate
  std::string final_stage;
  std::optional<Metrics> metrics;
  // init_unfiltered, init_filtered, refined_ols, refined_huber
  std::vector<StageReport> stages;
  int pair_count = 0;
  int retained_pair_count = 0;
  int candidate_count = 0;
  int match_count = 0;
  DegeneracyReport degeneracy;
  std::optional<Rigid3> ground_truth;
  nlohmann::json flags = nlohmann::json::object();
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, double> timing;  // seconds

  const StageReport* stage(const std::string& name) const;
};

struct CalibrationRun {
  Report report;
  SessionResults results;  // for the selected init and penalty
};

CalibrationRun run_calibration(const CalibrationSession& session,
                               const CalibrateOptions& options);

nlohmann::json to_json(const Report& report);
nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace xcal
