#pragma once

#include <json.hpp>

#include "stripefit/patternfit.hpp"

namespace stripefit {

nlohmann::json to_json(const FitConfig& config);

/// Overlays the keys present in `doc` on `base`; unknown keys are rejected.
FitConfig fit_config_from_json(const nlohmann::json& doc, FitConfig base = {});

}  // namespace stripefit
