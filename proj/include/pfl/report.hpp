#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "pfl/analysis.hpp"
#include "pfl/design.hpp"
#include "pfl/optics.hpp"

// JSON artifacts. Floating-point values are always written as %.16e so every
// length carries at least 12 significant digits and output is byte-stable.
namespace pfl::report {

using Json = nlohmann::ordered_json;

/// Two-space indented JSON with a trailing newline.
std::string dump(const Json& j);

std::string hex64(std::uint64_t value);

Json zoneplate(const design::ZonePlateSpec& spec);
Json geometry(const design::ZonePlateSpec& spec);
Json gaussian(const analysis::GaussianParams& p);
Json fit(const analysis::GaussianFitResult& fit, const analysis::ObjectPlaneFwhm& object);
Json calibration(const analysis::CalibrationResult& cal);

}  // namespace pfl::report
