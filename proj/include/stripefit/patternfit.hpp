#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "stripefit/optim.hpp"
#include "stripefit/trial.hpp"
#include "stripefit/waveform.hpp"

namespace stripefit {

enum class OptimizerKind { kNelderMead, kAnnealing };

struct Strategy {
  WaveKind wave = WaveKind::kSquare;
  OptimizerKind optimizer = OptimizerKind::kAnnealing;

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

std::string to_string(Strategy strategy);  // "sine+nm", "square+sa", ...
std::optional<Strategy> parse_strategy(std::string_view name);

/// sine+nm, sine+sa, square+nm, square+sa.
std::vector<Strategy> all_strategies();

/// Search region for (gamma, lambda, psi). A gamma range spanning the full
/// 180 degrees (and a full 2 pi psi range) is treated as periodic.
struct Bounds {
  double gamma_lo_deg = 0.0;
  double gamma_hi_deg = 180.0;
  double lambda_min_m = 0.5;
  double lambda_max_m = 10.0;
  double psi_lo_rad = 0.0;
  double psi_hi_rad = kTwoPi;
};

void validate_bounds(const Bounds& bounds);

/// Canonical search box over (gamma, lambda, psi): gamma in [0, 180), used by grid_search.
Box canonical_box(const Bounds& bounds);

/// Box handed to the annealer and used to fold Nelder-Mead iterates. A
/// full gamma range is widened to one 360 degree period so that wrapping
/// gamma never changes the wave.
Box search_box(const Bounds& bounds);

std::vector<WaveParams> default_nm_starts();

struct FitConfig {
  Bounds bounds;
  SASchedule sa{1.0, 0.95, 200, 1e-4, {18.0, 0.5, 0.3}, 0};
  NelderMeadOptions nm{{15.0, 0.5, 0.5}, 1e-10, 1000};
  std::vector<WaveParams> nm_starts = default_nm_starts();
  double frame_stride_s = 0.25;
  double bisector_window_s = 1.0;
  std::optional<TimeWindow> window_override;
  std::optional<Vec2> bisector_override;
  std::array<std::size_t, 3> grid_resolution{181, 96, 64};
};

/// 16 hex digits identifying every setting in the config.
std::string config_fingerprint(const FitConfig& config);

struct FitResult {
  Strategy strategy;
  WaveParams params;        // canonical
  double c_norm = 0.0;      // raw_value / 2
  double raw_value = 0.0;   // objective at params
  double frame_t = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  double wall_time_s = 0.0;  // optimizer call only
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::vector<TracePoint> trace;
};

inline constexpr double kDegenerateDiameterM = 1e-6;

/// Maximizes the group contrast of `frame` (already in the bisector frame)
/// with the strategy's waveform and optimizer. Annealing uses config.sa.seed.
FitResult fit_frame(const Frame& frame, Strategy strategy, const FitConfig& config);

/// Dense grid oracle over the canonical box at config.grid_resolution.
FitResult grid_fit_frame(const Frame& frame, WaveKind wave, const FitConfig& config);

/// Full objective grid for surface plots; axes in (gamma, lambda, psi) order.
GridResult objective_surface(const Frame& frame, WaveKind wave, const FitConfig& config);

enum class FramePolicyKind { kSingle, kBestOverWindow, kPerFrameSeries };

struct FramePolicy {
  FramePolicyKind kind = FramePolicyKind::kBestOverWindow;
  double t = 0.0;  // kSingle only
};

std::string to_string(FramePolicyKind kind);
std::optional<FramePolicyKind> parse_frame_policy(std::string_view name);

struct TrialFitSummary {
  double median_gamma_deg = 0.0;
  double median_lambda_m = 0.0;
  double max_c_norm = 0.0;
};

struct TrialFit {
  std::vector<FitResult> frames;  // one per fitted frame, in time order
  std::size_t best_index = 0;     // highest c_norm; ties go to the frame nearest the window centre
  TrialFitSummary summary;

  const FitResult& best() const { return frames.at(best_index); }
};

/// Frames are rotated into the bisector frame before fitting. Window
/// policies sample the crossing window every config.frame_stride_s seconds.
TrialFit fit_trial(const Trial& trial, Strategy strategy, const FramePolicy& policy, const FitConfig& config);

struct TableRow {
  std::string trial_id;
  double crossing_angle_deg = 0.0;
  Strategy strategy;
  std::optional<FitResult> fit;
  std::string error;  // set when fit is empty
};

struct StrategyTable {
  std::vector<TableRow> rows;

  const TableRow* find(std::string_view trial_id, Strategy strategy) const;
  std::size_t failed_rows() const;
};

enum class SeedMode { kFixed, kFromTrialId };

struct BatchOptions {
  FramePolicy policy;
  std::size_t jobs = 1;
  SeedMode seed_mode = SeedMode::kFixed;
  std::uint64_t seed = 0;
};

/// Seed used for one trial's annealing runs.
std::uint64_t row_seed(const BatchOptions& options, std::string_view trial_id);

/// Fits every trial with every strategy. Rows come out in trial-major order
/// whatever the job count; a failing row records its error and the batch
/// continues.
StrategyTable run_batch(const TrialSet& trials, const std::vector<Strategy>& strategies, const FitConfig& config,
                        const BatchOptions& options);

inline constexpr std::string_view kResultsCsvHeader =
    "trial_id,angle,strategy,gamma_deg,lambda_m,psi_rad,c_norm,evaluations,wall_time_s,frame_t,config_fingerprint";

void write_results_csv(const StrategyTable& table, std::ostream& out);
void write_errors_csv(const StrategyTable& table, std::ostream& out);
StrategyTable read_results_csv(std::istream& in);
std::string results_to_json(const StrategyTable& table, bool with_trace);

}  // namespace stripefit
