#include "stripefit/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stripefit/error.hpp"

namespace stripefit {

namespace {

using ld = long double;
using cld = std::complex<ld>;

cld response_ld(const std::vector<double>& b, const std::vector<double>& a, ld f_hz, ld fs_hz) {
  const cld zinv = std::exp(cld(0.0L, -2.0L * std::acos(-1.0L) * f_hz / fs_hz));
  cld num(0.0L), den(0.0L), power(1.0L);
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (k < b.size()) num += static_cast<ld>(b[k]) * power;
    if (k < a.size()) den += static_cast<ld>(a[k]) * power;
    power *= zinv;
  }
  return num / den;
}

// Numerator with the same DC gain as the stored denominator: b_k = C(n,k) sum(a) / 2^n.
std::vector<double> tied_numerator(const std::vector<double>& a) {
  ld a_sum = 0.0L;
  for (double v : a) a_sum += v;
  const int order = static_cast<int>(a.size()) - 1;
  const ld gain = a_sum / std::ldexp(1.0L, order);
  std::vector<double> b(a.size());
  ld binom = 1.0L;
  for (int k = 0; k <= order; ++k) {
    b[static_cast<std::size_t>(k)] = static_cast<double>(gain * binom);
    binom = binom * (order - k) / (k + 1);
  }
  return b;
}

}  // namespace

IIRCoeffs butter_lowpass(int order, double cutoff_hz, double fs_hz) {
  if (order < 1 || order > 8) {
    throw Error(ErrorCode::kConfiguration, "Butterworth order must be between 1 and 8");
  }
  if (!(fs_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < fs_hz / 2.0)) {
    throw Error(ErrorCode::kInvalidCutoff, "cutoff must satisfy 0 < cutoff < fs/2");
  }
  const ld pi = std::acos(-1.0L);
  const ld two_fs = 2.0L * fs_hz;
  const ld warped = two_fs * std::tan(pi * cutoff_hz / fs_hz);

  // a(z) = prod_k (1 - z_k z^-1) with z_k the bilinear images of the analog poles.
  std::vector<cld> poly{cld(1.0L)};
  for (int k = 1; k <= order; ++k) {
    const cld analog = warped * std::exp(cld(0.0L, pi * (2.0L * k + order - 1) / (2.0L * order)));
    const cld zpole = (two_fs + analog) / (two_fs - analog);
    std::vector<cld> next(poly.size() + 1, cld(0.0L));
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= zpole * poly[i];
    }
    poly = std::move(next);
  }

  IIRCoeffs c;
  for (const auto& v : poly) c.a.push_back(static_cast<double>(v.real()));

  // At low cutoffs sum(a) is tiny and rounding a to double moves the
  // half-power point by ~1e-9. Nudge the stored denominator by single ulps
  // while that brings |H(fc)| closer to 1/sqrt(2).
  const ld target = 1.0L / std::sqrt(2.0L);
  auto half_power_error = [&](const std::vector<double>& a) {
    return std::abs(std::abs(response_ld(tied_numerator(a), a, cutoff_hz, fs_hz)) - target);
  };
  ld best = half_power_error(c.a);
  for (int sweep = 0; sweep < 8; ++sweep) {
    bool improved = false;
    for (std::size_t i = 1; i < c.a.size(); ++i) {
      for (double dir : {-1.0, 1.0}) {
        std::vector<double> trial = c.a;
        trial[i] = std::nextafter(trial[i], dir * std::numeric_limits<double>::infinity());
        const ld err = half_power_error(trial);
        if (err < best) {
          best = err;
          c.a = std::move(trial);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  c.b = tied_numerator(c.a);
  return c;
}

std::complex<double> frequency_response(const IIRCoeffs& coeffs, double f_hz, double fs_hz) {
  const cld h = response_ld(coeffs.b, coeffs.a, f_hz, fs_hz);
  return {static_cast<double>(h.real()), static_cast<double>(h.imag())};
}

namespace {

// Steady-state DF2T state for a unit step, in extended precision.
std::vector<ld> unit_step_state(const IIRCoeffs& coeffs) {
  const std::size_t m = coeffs.a.size() - 1;
  ld b_sum = 0.0L;
  ld a_sum = 0.0L;
  for (double v : coeffs.b) b_sum += v;
  for (double v : coeffs.a) a_sum += v;
  const ld y_ss = b_sum / a_sum;
  std::vector<ld> z(m, 0.0L);
  ld carry = 0.0L;
  for (std::size_t i = m; i-- > 0;) {
    carry = static_cast<ld>(coeffs.b[i + 1]) - static_cast<ld>(coeffs.a[i + 1]) * y_ss + carry;
    z[i] = carry;
  }
  return z;
}

void check_coeffs(const IIRCoeffs& coeffs) {
  if (coeffs.b.size() != coeffs.a.size() || coeffs.a.empty() || coeffs.a[0] != 1.0) {
    throw Error(ErrorCode::kConfiguration, "filter needs equal-length b and a with a[0] == 1");
  }
}

// Transposed direct form II. The poles of a low-cutoff filter sit close to
// z = 1, where double-precision state accumulates ~1e-9 of rounding noise;
// the recursion therefore runs in long double.
std::vector<ld> df2t(const IIRCoeffs& coeffs, const std::vector<ld>& x, std::vector<ld>& state) {
  const std::size_t m = coeffs.a.size() - 1;
  const std::vector<ld> b(coeffs.b.begin(), coeffs.b.end());
  const std::vector<ld> a(coeffs.a.begin(), coeffs.a.end());
  state.resize(m, 0.0L);
  std::vector<ld> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const ld xn = x[n];
    const ld yn = b[0] * xn + (m > 0 ? state[0] : 0.0L);
    for (std::size_t i = 0; i + 1 < m; ++i) state[i] = b[i + 1] * xn - a[i + 1] * yn + state[i + 1];
    if (m > 0) state[m - 1] = b[m] * xn - a[m] * yn;
    y[n] = yn;
  }
  return y;
}

}  // namespace

std::vector<double> steady_state_state(const IIRCoeffs& coeffs) {
  check_coeffs(coeffs);
  const auto z = unit_step_state(coeffs);
  return std::vector<double>(z.begin(), z.end());
}

std::vector<double> lfilter(const IIRCoeffs& coeffs, std::span<const double> x, std::vector<double>& state) {
  check_coeffs(coeffs);
  std::vector<ld> st(state.begin(), state.end());
  const auto y = df2t(coeffs, std::vector<ld>(x.begin(), x.end()), st);
  state.assign(st.begin(), st.end());
  return std::vector<double>(y.begin(), y.end());
}

std::size_t filtfilt_pad_length(const IIRCoeffs& coeffs) { return 3 * coeffs.a.size(); }

std::vector<double> filtfilt(const IIRCoeffs& coeffs, std::span<const double> series) {
  check_coeffs(coeffs);
  const std::size_t pad = filtfilt_pad_length(coeffs);
  const std::size_t n = series.size();
  if (n < 3 * pad) {
    throw Error(ErrorCode::kShortSeries, "series of length " + std::to_string(n) + " is shorter than " +
                                             std::to_string(3 * pad) + " samples");
  }
  std::vector<ld> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0L * series[0] - series[i]);
  ext.insert(ext.end(), series.begin(), series.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0L * series[n - 1] - series[n - 1 - i]);

  const std::vector<ld> zi = unit_step_state(coeffs);
  auto scaled = [&zi](ld v) {
    std::vector<ld> s(zi);
    for (auto& e : s) e *= v;
    return s;
  };

  auto state = scaled(ext.front());
  std::vector<ld> forward = df2t(coeffs, ext, state);
  std::reverse(forward.begin(), forward.end());
  state = scaled(forward.front());
  std::vector<ld> backward = df2t(coeffs, forward, state);
  std::reverse(backward.begin(), backward.end());

  return std::vector<double>(backward.begin() + static_cast<std::ptrdiff_t>(pad),
                             backward.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

Trial filter_trial(const Trial& trial, const FilterSettings& settings, FilterReport* report) {
  if (!settings.enabled) return trial;
  const IIRCoeffs coeffs = butter_lowpass(settings.order, settings.cutoff_hz, trial.sample_rate_hz());
  const std::size_t min_len = 3 * filtfilt_pad_length(coeffs);
  std::vector<TrackSample> samples = trial.samples();
  for (const auto& track : trial.tracks()) {
    if (track.count < min_len) {
      if (report) report->unfiltered_tracks.push_back(track.pedestrian_id);
      continue;
    }
    std::vector<double> xs(track.count);
    std::vector<double> ys(track.count);
    for (std::size_t i = 0; i < track.count; ++i) {
      xs[i] = samples[track.begin + i].pos.x;
      ys[i] = samples[track.begin + i].pos.y;
    }
    const auto fx = filtfilt(coeffs, xs);
    const auto fy = filtfilt(coeffs, ys);
    for (std::size_t i = 0; i < track.count; ++i) samples[track.begin + i].pos = Vec2{fx[i], fy[i]};
  }
  return Trial(trial.id(), trial.crossing_angle_deg(), std::move(samples), trial.sample_rate_hz(), trial.bisector());
}

}  // namespace stripefit
