#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "stripefit/trial.hpp"

namespace stripefit {

inline constexpr std::string_view kTrialCsvHeader = "trial_id,crossing_angle_deg,pedestrian_id,group,t,x,y";

// Optional per-trial sidecar: {trial_id, bisector: [bx, by], sample_rate_hz}.
struct TrialMetadata {
  std::string trial_id;
  std::optional<Vec2> bisector;
  std::optional<double> sample_rate_hz;
};

using MetadataMap = std::map<std::string, TrialMetadata>;

/// Reads the canonical trajectory CSV. Trials come back ordered by trial_id.
TrialSet parse_trials(std::istream& source, const MetadataMap& metadata = {});
TrialSet parse_trials_text(std::string_view text, const MetadataMap& metadata = {});
TrialSet load_trials(const std::string& path, const MetadataMap& metadata = {});

void serialize_trials(const TrialSet& trials, std::ostream& out, int significant_digits = 17);
void save_trials(const TrialSet& trials, const std::string& path, int significant_digits = 17);

/// Accepts a single metadata object or an array of them.
MetadataMap parse_metadata_json(std::string_view text);
MetadataMap load_metadata(const std::string& path);
std::string metadata_to_json(const TrialSet& trials);

}  // namespace stripefit
