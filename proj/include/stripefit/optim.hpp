#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace stripefit {

/// Black-box objective over a flat parameter vector; all optimizers maximize.
using Objective = std::function<double(std::span<const double>)>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;  // wrap instead of reflect; hi is identified with lo
};

using Box = std::vector<Interval>;

/// Brings v back into the interval: modular wrap when periodic, mirror
/// reflection at the ends otherwise.
double fold_into(double v, const Interval& interval);

struct TracePoint {
  std::size_t iteration = 0;
  double best_value = 0.0;
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;  // trace length: the starting state counts as one
  double wall_time_s = 0.0;
  std::vector<TracePoint> trace;
  std::size_t downhill_accepts = 0;  // annealing only
};

struct NelderMeadOptions {
  std::vector<double> initial_step;  // per coordinate; empty means 1.0 each
  double tol = 1e-12;                // stop once max - min over the simplex falls below this
  std::size_t max_iter = 2000;
};

/// Classic simplex search (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5), maximizing `obj` by minimizing its negation.
OptimResult nelder_mead(const Objective& obj, std::span<const double> x0, const NelderMeadOptions& options);

/// Best of independent Nelder-Mead runs; ties go to the earliest start.
/// Evaluation counts, iterations and wall time are summed over all runs.
OptimResult nm_multistart(const Objective& obj, const std::vector<std::vector<double>>& starts,
                          const NelderMeadOptions& options);

struct SASchedule {
  double t0 = 1.0;
  double alpha = 0.95;
  std::size_t steps_per_temp = 200;
  double t_min = 1e-4;
  std::vector<double> step_scale;  // Gaussian proposal width at t0, one per coordinate
  std::uint64_t seed = 0;
};

void validate_schedule(const SASchedule& schedule, std::size_t dims);

/// Simulated annealing with geometric cooling. Starts from a uniform draw in
/// the box, proposes Gaussian moves whose width shrinks with T / t0, accepts
/// by the Metropolis rule and returns the best point ever visited.
OptimResult simulated_annealing(const Objective& obj, const Box& box, const SASchedule& schedule);

struct GridResult {
  OptimResult best;
  std::vector<std::vector<double>> axes;  // grid coordinates per axis
  std::vector<double> surface;            // row-major, first axis slowest; empty unless requested
};

inline constexpr double kMaxGridPoints = 1e8;

/// Sample positions along one axis: n points spanning [lo, hi) for periodic
/// axes, [lo, hi] otherwise.
std::vector<double> grid_axis(const Interval& interval, std::size_t n);

/// Exhaustive evaluation of the Cartesian grid. The first maximal point in
/// lexicographic order wins ties.
GridResult grid_search(const Objective& obj, const Box& box, std::span<const std::size_t> resolution,
                       bool keep_surface = false);

}  // namespace stripefit
