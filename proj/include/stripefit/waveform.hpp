#pragma once

#include <optional>
#include <string_view>

#include "stripefit/geometry.hpp"
#include "stripefit/trial.hpp"

namespace stripefit {

enum class WaveKind { kSine, kSquare };

std::string_view to_string(WaveKind kind);
std::optional<WaveKind> parse_wave_kind(std::string_view name);

// Angles are degrees at the API boundary; phase is radians.
struct WaveParams {
  double gamma_deg = 90.0;
  double lambda_m = 1.0;
  double psi_rad = 0.0;

  friend bool operator==(const WaveParams&, const WaveParams&) = default;
};

/// Coordinate across the stripes: x sin(gamma) - y cos(gamma).
double rotated_coord(Vec2 pos, double gamma_deg);

/// sin(2 pi X / lambda + psi) for kSine, its sign for kSquare (sign(0) = 0).
double eval_wave(WaveKind kind, Vec2 pos, const WaveParams& params);

/// Group contrast: mean wave value over group 1 minus mean over group 2.
/// Lies in [-2, 2]; 2 means group 1 sits on crests and group 2 on troughs.
double objective(WaveKind kind, const Frame& frame, const WaveParams& params);

/// Maps gamma into [0, 180) and psi into [0, 2 pi) without changing the
/// wave at any point (gamma + 180 is compensated by psi -> pi - psi).
WaveParams canonicalize(const WaveParams& params);

inline constexpr double kObjectiveMax = 2.0;

}  // namespace stripefit
