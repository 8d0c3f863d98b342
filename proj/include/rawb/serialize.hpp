#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "rawb/augment.hpp"
#include "rawb/learn.hpp"
#include "rawb/models.hpp"
#include "rawb/sim.hpp"
#include "rawb/whittle.hpp"

namespace rawb {

using Json = nlohmann::ordered_json;

// All numeric JSON output passes through round9 so dumps are stable and
// byte-identical across reruns.
Json to_json(const ArmModel& arm);
ArmModel arm_from_json(const Json& j);

Json to_json(const UtilitySpec& u);
UtilitySpec utility_from_json(const Json& j);

Json to_json(const BanditInstance& instance);
BanditInstance instance_from_json(const Json& j);

// Patient-range schema: {"P0": [[[lo,hi] x cols] x rows], "P1": ...}.
PatientRanges patient_ranges_from_json(const Json& j);
PatientRanges load_patient_ranges(const std::filesystem::path& file);

Json to_json(const Assumption1Report& report);
Json to_json(const IndexabilityReport& report);
Json to_json(const EvalSummary& summary);

// Value and policy tables keyed "t/x/s-index" for debugging.
Json solution_to_json(const ArmSolution& solution);

Json load_json(const std::filesystem::path& file);
void write_json(const std::filesystem::path& file, const Json& doc);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace rawb
