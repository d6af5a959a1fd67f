#include "stripefit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stripefit/error.hpp"
#include "stripefit/rng.hpp"

namespace stripefit {

namespace {

struct Chord {
  Vec2 origin;  // point on the stripe line closest to the box centre
  double s_lo = 0.0;
  double s_hi = 0.0;
};

// Part of the line {origin + s * dir} inside [-e, e]^2, as an s range.
bool clip_to_box(Vec2 origin, Vec2 dir, double e, double& s_lo, double& s_hi) {
  s_lo = -std::numeric_limits<double>::infinity();
  s_hi = std::numeric_limits<double>::infinity();
  const double o[2] = {origin.x, origin.y};
  const double d[2] = {dir.x, dir.y};
  for (int k = 0; k < 2; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (std::abs(o[k]) > e) return false;
      continue;
    }
    double a = (-e - o[k]) / d[k];
    double b = (e - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    s_lo = std::max(s_lo, a);
    s_hi = std::min(s_hi, b);
  }
  return s_hi > s_lo;
}

// Stripe lines where the wave phase equals phase0 + 2 pi k.
std::vector<Chord> chords(const StripeSpec& spec, double phase0) {
  const double g = deg_to_rad(spec.gamma_deg);
  const Vec2 normal{std::sin(g), -std::cos(g)};  // X grows along this direction
  const Vec2 dir{std::cos(g), std::sin(g)};
  const double base = spec.lambda_m * (phase0 - spec.psi_rad) / kTwoPi;
  const double reach = spec.extent_m * std::sqrt(2.0);
  const auto k_lo = static_cast<long long>(std::floor((-reach - base) / spec.lambda_m));
  const auto k_hi = static_cast<long long>(std::ceil((reach - base) / spec.lambda_m));
  std::vector<Chord> out;
  for (long long k = k_lo; k <= k_hi; ++k) {
    const double x_rot = base + static_cast<double>(k) * spec.lambda_m;
    Chord c{x_rot * normal, 0.0, 0.0};
    if (clip_to_box(c.origin, dir, spec.extent_m, c.s_lo, c.s_hi)) out.push_back(c);
  }
  return out;
}

std::vector<Vec2> place(const std::vector<Chord>& lines, std::size_t n, const StripeSpec& spec, Pcg32& rng) {
  const double g = deg_to_rad(spec.gamma_deg);
  const Vec2 dir{std::cos(g), std::sin(g)};
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& c : lines) cumulative.push_back(total += c.s_hi - c.s_lo);
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    const auto idx = std::min<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(), lines.size() - 1);
    const Chord& c = lines[idx];
    Vec2 p = c.origin + rng.uniform(c.s_lo, c.s_hi) * dir;
    const double jx = rng.normal();
    const double jy = rng.normal();
    if (spec.jitter_sd_m > 0.0) p = p + spec.jitter_sd_m * Vec2{jx, jy};
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

StripedFrame generate_striped_frame(const StripeSpec& spec) {
  if (spec.n1 < 1 || spec.n2 < 1 || !(spec.jitter_sd_m >= 0.0) || !(spec.lambda_m > 0.0) ||
      !(spec.extent_m > 0.0) || !std::isfinite(spec.gamma_deg) || !std::isfinite(spec.psi_rad) ||
      !std::isfinite(spec.lambda_m) || !std::isfinite(spec.extent_m) || !std::isfinite(spec.jitter_sd_m)) {
    throw Error(ErrorCode::kConfiguration, "invalid stripe spec");
  }
  const auto crests = chords(spec, 0.5 * kPi);
  const auto troughs = chords(spec, 1.5 * kPi);
  if (crests.empty() || troughs.empty()) {
    throw Error(ErrorCode::kEmptyGeneration, "no stripe centre line crosses the frame; enlarge extent_m");
  }
  Pcg32 rng(spec.seed);
  StripedFrame out;
  out.frame.g1 = place(crests, spec.n1, spec, rng);
  out.frame.g2 = place(troughs, spec.n2, spec, rng);
  out.truth = canonicalize({spec.gamma_deg, spec.lambda_m, spec.psi_rad});
  return out;
}

SyntheticTrial generate_crossing_trial(const CrossingSpec& spec) {
  if (!(spec.angle_deg > 0.0 && spec.angle_deg <= 180.0)) {
    throw Error(ErrorCode::kConfiguration, "crossing angle must lie in (0, 180]");
  }
  if (!(spec.fs_hz > 0.0) || !(spec.duration_s > 0.0) || !(spec.speed_mps >= 0.0) ||
      !(spec.lateral_spacing_m > 0.0) || !(spec.jitter_sd_m >= 0.0) || spec.n1 < 1 || spec.n2 < 1) {
    throw Error(ErrorCode::kConfiguration, "invalid crossing spec");
  }
  const double half = 0.5 * deg_to_rad(spec.angle_deg);
  const Vec2 heading[2] = {{std::cos(half), std::sin(half)}, {std::cos(half), -std::sin(half)}};
  const double lambda = 2.0 * spec.lateral_spacing_m;
  const double t_meet = 0.5 * spec.duration_s;
  const auto n_steps = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fs_hz));

  Pcg32 rng(spec.seed);
  std::vector<TrackSample> samples;
  double column_origin = 0.0;
  const std::size_t sizes[2] = {spec.n1, spec.n2};
  std::size_t next_id = 1;
  for (int g = 0; g < 2; ++g) {
    const std::size_t n = sizes[g];
    const auto ncols = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(double(n)))));
    const std::size_t nrows = (n + ncols - 1) / ncols;
    const double shift = g == 0 ? -0.25 * lambda : 0.25 * lambda;
    const double col0 = -0.5 * static_cast<double>(ncols - 1) * lambda + shift;
    if (g == 0) column_origin = col0;
    for (std::size_t i = 0; i < n; ++i) {
      const double col = static_cast<double>(i % ncols);
      const double row = static_cast<double>(i / ncols);
      Vec2 meet{col0 + col * lambda, (row - 0.5 * static_cast<double>(nrows - 1)) * spec.lateral_spacing_m};
      const double jx = rng.normal();
      const double jy = rng.normal();
      if (spec.jitter_sd_m > 0.0) meet = meet + spec.jitter_sd_m * Vec2{jx, jy};
      const std::string id = "p" + std::to_string(next_id++);
      for (std::size_t k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) / spec.fs_hz;
        samples.push_back({id, g == 0 ? Group::kG1 : Group::kG2, t, meet + (spec.speed_mps * (t - t_meet)) * heading[g]});
      }
    }
  }

  // Group 1 columns sit on crests: 2 pi x / lambda + psi = pi / 2 at x = column_origin.
  const WaveParams truth = canonicalize({90.0, lambda, 0.5 * kPi - kTwoPi * column_origin / lambda});
  return SyntheticTrial{Trial(spec.trial_id, spec.angle_deg, std::move(samples), spec.fs_hz, Vec2{1.0, 0.0}), truth,
                        t_meet};
}

}  // namespace stripefit
