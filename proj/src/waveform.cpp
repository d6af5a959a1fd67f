#include "stripefit/waveform.hpp"

#include <cmath>
#include <string>

#include "stripefit/error.hpp"

namespace stripefit {

namespace {

// sgn(sin(2 pi turns)) read off the fractional part of the phase in turns;
// cheaper than sin and exact at the zero crossings.
inline double square_of_turns(double turns) {
  // Truncation instead of std::floor, which is a library call on baseline x86-64.
  double whole = static_cast<double>(static_cast<long long>(turns));
  if (whole > turns) whole -= 1.0;
  const double frac = turns - whole;
  if (frac == 0.0 || frac == 0.5) return 0.0;
  return frac < 0.5 ? 1.0 : -1.0;
}

inline double wrap_phase(double psi) {
  double r = psi - kTwoPi * std::floor(psi / kTwoPi);
  if (r >= kTwoPi || r < 0.0) r = 0.0;
  return r;
}

template <WaveKind Kind>
double group_sum(const std::vector<Vec2>& points, double sin_g, double cos_g, double lambda, double psi) {
  double sum = 0.0;
  if constexpr (Kind == WaveKind::kSine) {
    const double k = kTwoPi / lambda;
    for (const auto& p : points) sum += std::sin(k * (p.x * sin_g - p.y * cos_g) + psi);
  } else {
    const double offset = psi / kTwoPi;
    const double inv_lambda = 1.0 / lambda;
    for (const auto& p : points) sum += square_of_turns((p.x * sin_g - p.y * cos_g) * inv_lambda + offset);
  }
  return sum;
}

template <WaveKind Kind>
double contrast(const Frame& frame, const WaveParams& params) {
  const double g = deg_to_rad(params.gamma_deg);
  const double sin_g = std::sin(g);
  const double cos_g = std::cos(g);
  const double s1 = group_sum<Kind>(frame.g1, sin_g, cos_g, params.lambda_m, params.psi_rad);
  const double s2 = group_sum<Kind>(frame.g2, sin_g, cos_g, params.lambda_m, params.psi_rad);
  return s1 / static_cast<double>(frame.g1.size()) - s2 / static_cast<double>(frame.g2.size());
}

}  // namespace

std::string_view to_string(WaveKind kind) { return kind == WaveKind::kSine ? "sine" : "square"; }

std::optional<WaveKind> parse_wave_kind(std::string_view name) {
  if (name == "sine") return WaveKind::kSine;
  if (name == "square") return WaveKind::kSquare;
  return std::nullopt;
}

double rotated_coord(Vec2 pos, double gamma_deg) {
  const double g = deg_to_rad(gamma_deg);
  return pos.x * std::sin(g) - pos.y * std::cos(g);
}

double eval_wave(WaveKind kind, Vec2 pos, const WaveParams& params) {
  const double x_rot = rotated_coord(pos, params.gamma_deg);
  if (kind == WaveKind::kSquare) return square_of_turns(x_rot / params.lambda_m + params.psi_rad / kTwoPi);
  return std::sin(kTwoPi * x_rot / params.lambda_m + params.psi_rad);
}

double objective(WaveKind kind, const Frame& frame, const WaveParams& params) {
  if (frame.g1.empty() || frame.g2.empty()) {
    throw Error(ErrorCode::kGroupEmpty, "objective needs at least one position in each group");
  }
  return kind == WaveKind::kSine ? contrast<WaveKind::kSine>(frame, params)
                                 : contrast<WaveKind::kSquare>(frame, params);
}

WaveParams canonicalize(const WaveParams& params) {
  if (!std::isfinite(params.lambda_m) || params.lambda_m <= 0.0) {
    throw Error(ErrorCode::kInvalidWavelength, "wavelength must be positive, got " + std::to_string(params.lambda_m));
  }
  WaveParams out = params;
  const double turns = std::floor(params.gamma_deg / 180.0);
  out.gamma_deg = params.gamma_deg - 180.0 * turns;
  bool flip = std::fmod(std::abs(turns), 2.0) == 1.0;
  if (out.gamma_deg >= 180.0) {
    out.gamma_deg -= 180.0;
    flip = !flip;
  }
  if (out.gamma_deg < 0.0) out.gamma_deg = 0.0;
  if (flip) out.psi_rad = kPi - params.psi_rad;
  out.psi_rad = wrap_phase(out.psi_rad);
  return out;
}

}  // namespace stripefit
