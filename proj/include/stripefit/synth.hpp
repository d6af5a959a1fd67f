#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "stripefit/trial.hpp"
#include "stripefit/waveform.hpp"

namespace stripefit {

struct StripeSpec {
  double gamma_deg = 90.0;
  double lambda_m = 2.0;
  double psi_rad = 0.0;
  std::size_t n1 = 20;
  std::size_t n2 = 20;
  double jitter_sd_m = 0.0;  // isotropic Gaussian
  double extent_m = 5.0;     // frame half-width; points lie in [-extent, extent]^2 before jitter
  std::uint64_t seed = 0;
};

struct StripedFrame {
  Frame frame;
  WaveParams truth;  // canonical
};

/// Group 1 points sit on crest lines of the ground-truth wave, group 2 on
/// trough lines, spread uniformly over the lines' length inside the box.
StripedFrame generate_striped_frame(const StripeSpec& spec);

struct CrossingSpec {
  std::string trial_id = "synth";
  double angle_deg = 90.0;
  std::size_t n1 = 16;
  std::size_t n2 = 16;
  double speed_mps = 1.0;
  double duration_s = 20.0;
  double fs_hz = 10.0;
  double lateral_spacing_m = 1.0;  // row spacing, and half the column pitch of the merged lattice
  double jitter_sd_m = 0.0;        // fixed per-pedestrian offset
  std::uint64_t seed = 0;
};

struct SyntheticTrial {
  Trial trial;
  WaveParams truth;       // stripe pattern at the meeting time, bisector frame
  double meeting_time_s;  // duration / 2
};

/// Two lattice formations walking at +-angle/2 about the +x bisector. At the
/// meeting time their columns interleave with pitch 2 * lateral_spacing_m,
/// which is the ground-truth wavelength; the bisector is attached as
/// metadata.
SyntheticTrial generate_crossing_trial(const CrossingSpec& spec);

}  // namespace stripefit
