#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "stripefit/trial.hpp"

namespace stripefit {

/// Transfer function b(z)/a(z) in powers of z^-1, a[0] == 1.
struct IIRCoeffs {
  std::vector<double> b;
  std::vector<double> a;
};

/// Digital Butterworth low-pass via the bilinear transform with cutoff
/// prewarping. The numerator gain is tied to the stored denominator so the
/// DC gain sum(b)/sum(a) is one to rounding.
IIRCoeffs butter_lowpass(int order, double cutoff_hz, double fs_hz);

/// H(e^{j 2 pi f / fs}).
std::complex<double> frequency_response(const IIRCoeffs& coeffs, double f_hz, double fs_hz);

/// Steady-state transposed direct form II state for a unit-step input.
std::vector<double> steady_state_state(const IIRCoeffs& coeffs);

/// Single causal pass. `state` (may be empty for zero state) is updated.
std::vector<double> lfilter(const IIRCoeffs& coeffs, std::span<const double> x, std::vector<double>& state);

/// Odd-reflection pad length used by filtfilt: 3 * (order + 1).
std::size_t filtfilt_pad_length(const IIRCoeffs& coeffs);

/// Forward-backward zero-phase filtering with odd-reflection padding and
/// steady-state initial conditions. Requires at least 3 pad lengths of data.
std::vector<double> filtfilt(const IIRCoeffs& coeffs, std::span<const double> series);

struct FilterSettings {
  bool enabled = true;
  int order = 4;
  double cutoff_hz = 0.5;
};

struct FilterReport {
  std::vector<std::string> unfiltered_tracks;  // too short for filtfilt, kept raw
};

/// Filters x(t) and y(t) of every pedestrian independently.
Trial filter_trial(const Trial& trial, const FilterSettings& settings, FilterReport* report = nullptr);

}  // namespace stripefit
