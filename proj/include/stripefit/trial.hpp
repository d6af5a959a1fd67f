#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stripefit/geometry.hpp"

namespace stripefit {

enum class Group : int { kG1 = 1, kG2 = 2 };

struct TrackSample {
  std::string pedestrian_id;
  Group group = Group::kG1;
  double t = 0.0;  // seconds
  Vec2 pos;        // meters

  friend bool operator==(const TrackSample&, const TrackSample&) = default;
};

// Contiguous run of samples for one pedestrian inside Trial::samples().
struct Track {
  std::string pedestrian_id;
  Group group = Group::kG1;
  std::size_t begin = 0;
  std::size_t count = 0;
};

inline constexpr double kDefaultSampleRateHz = 120.0;

/// One crossing-flow recording. Validated on construction and immutable
/// afterwards; samples are kept sorted by (pedestrian_id, t).
///
/// When no sample rate is given it is inferred from the median sample
/// spacing, falling back to kDefaultSampleRateHz for single-sample tracks.
class Trial {
 public:
  Trial(std::string trial_id, double crossing_angle_deg, std::vector<TrackSample> samples,
        std::optional<double> sample_rate_hz = std::nullopt,
        std::optional<Vec2> bisector = std::nullopt);

  const std::string& id() const { return id_; }
  double crossing_angle_deg() const { return crossing_angle_deg_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  const std::optional<Vec2>& bisector() const { return bisector_; }
  const std::vector<TrackSample>& samples() const { return samples_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  std::span<const TrackSample> track_samples(const Track& track) const;

  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }

  friend bool operator==(const Trial& a, const Trial& b);

 private:
  std::string id_;
  double crossing_angle_deg_ = 0.0;
  double sample_rate_hz_ = kDefaultSampleRateHz;
  std::optional<Vec2> bisector_;
  std::vector<TrackSample> samples_;
  std::vector<Track> tracks_;
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
};

using TrialSet = std::vector<Trial>;

// Group-labeled positions at one instant.
struct Frame {
  double t = 0.0;
  std::vector<Vec2> g1;
  std::vector<Vec2> g2;
};

struct TimeWindow {
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Nearest sample per pedestrian, ties toward the earlier sample. Pedestrians
/// without a sample within one sample period of `t` are left out.
Frame frame_at(const Trial& trial, double t);

/// Rotates every position so that `bisector_dir` maps onto (1, 0).
Frame rotate_to_bisector(const Frame& frame, Vec2 bisector_dir);

/// Normalized mean of the two groups' mean heading over the first
/// `window_s` seconds of the trial.
Vec2 estimate_bisector(const Trial& trial, double window_s = 1.0);

/// Metadata bisector when present, otherwise estimate_bisector().
Vec2 resolve_bisector(const Trial& trial, double window_s = 1.0);

/// Longest contiguous run of sample instants at which the axis-aligned
/// bounding boxes of the two groups overlap.
TimeWindow crossing_window(const Trial& trial);

/// Instants of the trial's sample grid, t_begin + k / sample_rate_hz.
std::vector<double> sample_times(const Trial& trial);

/// Maximum pairwise distance between any two positions of the frame.
double frame_diameter(const Frame& frame);

}  // namespace stripefit
