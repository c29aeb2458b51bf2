// Configuration documents for the simulate and calibrate commands.
//
// A config file is one JSON object with optional "simulate" and "calibrate"
// sections. Keys inside a section are dotted paths ("trajectory.n_poses");
// angles are given in degrees and carry a _deg suffix. Unknown keys and
// values of the wrong type are configuration errors.

#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "xcal/handeye.h"
#include "xcal/lines.h"
#include "xcal/refine.h"
#include "xcal/simulate.h"

namespace xcal {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SimulateSettings {
  std::uint64_t seed = 1;
  SimConfig sim;

  // Copy of sim with the three generator seeds derived from `seed`.
  SimConfig resolved() const;
};

struct CalibrateSettings {
  InitConfig init;
  LineExtractionConfig extraction;
  MatchConfig match;
  RefineConfig refine;
  int min_matches = 3;
};

nlohmann::json to_json(const SimulateSettings& s);
nlohmann::json to_json(const CalibrateSettings& s);

// Overwrites the fields named in `section` (a nested or dotted-key object).
void apply_settings(const nlohmann::json& section, SimulateSettings& s);
void apply_settings(const nlohmann::json& section, CalibrateSettings& s);

// "a.b=value" into a flat {"a.b": value} object. The value is parsed as
// JSON when possible and kept as a string otherwise.
nlohmann::json parse_assignment(const std::string& assignment);

// {"a": {"b": 1}} -> {"a.b": 1}
nlohmann::json flatten(const nlohmann::json& section);

const char* to_string(DetectorMode m);
const char* to_string(PenaltyMode m);
const char* to_string(OutlierMode m);
const char* to_string(DegenerateMode m);
PenaltyMode penalty_from_string(const std::string& s);

}  // namespace xcal
