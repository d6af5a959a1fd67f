#include "stripefit/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "stripefit/error.hpp"
#include "stripefit/rng.hpp"

namespace stripefit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double checked(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::kNonFiniteObjective, "objective returned a non-finite value");
  return value;
}

void validate_box(const Box& box) {
  if (box.empty()) throw Error(ErrorCode::kConfiguration, "search box has no dimensions");
  for (const auto& iv : box) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo)) {
      throw Error(ErrorCode::kConfiguration, "search box interval must satisfy lo < hi");
    }
  }
}

}  // namespace

double fold_into(double v, const Interval& interval) {
  const double width = interval.hi - interval.lo;
  if (interval.periodic) {
    double u = std::fmod(v - interval.lo, width);
    if (u < 0.0) u += width;
    if (u >= width) u = 0.0;
    return interval.lo + u;
  }
  if (v >= interval.lo && v <= interval.hi) return v;
  double u = std::fmod(v - interval.lo, 2.0 * width);
  if (u < 0.0) u += 2.0 * width;
  if (u > width) u = 2.0 * width - u;
  return std::clamp(interval.lo + u, interval.lo, interval.hi);
}

OptimResult nelder_mead(const Objective& obj, std::span<const double> x0, const NelderMeadOptions& options) {
  const auto start = Clock::now();
  const std::size_t k = x0.size();
  if (k == 0) throw Error(ErrorCode::kConfiguration, "Nelder-Mead needs at least one dimension");
  std::vector<double> step = options.initial_step;
  if (step.empty()) step.assign(k, 1.0);
  if (step.size() != k) throw Error(ErrorCode::kConfiguration, "initial_step size does not match the start point");

  OptimResult result;
  // Internally minimize cost = -obj.
  auto cost = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return -checked(obj(x));
  };

  std::vector<std::vector<double>> simplex(k + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < k; ++i) simplex[i + 1][i] += step[i];
  std::vector<double> costs(k + 1);
  for (std::size_t i = 0; i <= k; ++i) costs[i] = cost(simplex[i]);

  std::vector<std::size_t> order(k + 1);
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
    std::vector<std::vector<double>> s(k + 1);
    std::vector<double> c(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
      s[i] = std::move(simplex[order[i]]);
      c[i] = costs[order[i]];
    }
    simplex = std::move(s);
    costs = std::move(c);
  };

  auto affine = [k](const std::vector<double>& base, const std::vector<double>& toward, double t) {
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = base[i] + t * (toward[i] - base[i]);
    return out;
  };

  sort_simplex();
  result.trace.push_back({0, -costs[0]});
  std::size_t iter = 0;
  while (iter < options.max_iter && (costs[k] - costs[0]) >= options.tol) {
    ++iter;
    std::vector<double> centroid(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t d = 0; d < k; ++d) centroid[d] += simplex[i][d];
    }
    for (auto& c : centroid) c /= static_cast<double>(k);

    const auto reflected = affine(centroid, simplex[k], -1.0);
    const double f_r = cost(reflected);
    if (f_r < costs[0]) {
      const auto expanded = affine(centroid, simplex[k], -2.0);
      const double f_e = cost(expanded);
      if (f_e < f_r) {
        simplex[k] = expanded;
        costs[k] = f_e;
      } else {
        simplex[k] = reflected;
        costs[k] = f_r;
      }
    } else if (f_r < costs[k - 1]) {
      simplex[k] = reflected;
      costs[k] = f_r;
    } else {
      bool shrink = false;
      if (f_r < costs[k]) {
        const auto outside = affine(centroid, reflected, 0.5);
        const double f_oc = cost(outside);
        if (f_oc <= f_r) {
          simplex[k] = outside;
          costs[k] = f_oc;
        } else {
          shrink = true;
        }
      } else {
        const auto inside = affine(centroid, simplex[k], 0.5);
        const double f_ic = cost(inside);
        if (f_ic < costs[k]) {
          simplex[k] = inside;
          costs[k] = f_ic;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (std::size_t i = 1; i <= k; ++i) {
          simplex[i] = affine(simplex[0], simplex[i], 0.5);
          costs[i] = cost(simplex[i]);
        }
      }
    }
    sort_simplex();
    result.trace.push_back({iter, -costs[0]});
  }

  result.x = simplex[0];
  result.value = -costs[0];
  result.iterations = result.trace.size();
  result.wall_time_s = seconds_since(start);
  return result;
}

OptimResult nm_multistart(const Objective& obj, const std::vector<std::vector<double>>& starts,
                          const NelderMeadOptions& options) {
  if (starts.empty()) throw Error(ErrorCode::kConfiguration, "multistart needs at least one start");
  const auto start = Clock::now();
  OptimResult best;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    OptimResult run = nelder_mead(obj, starts[i], options);
    evaluations += run.evaluations;
    iterations += run.iterations;
    if (i == 0 || run.value > best.value) best = std::move(run);
  }
  best.evaluations = evaluations;
  best.iterations = iterations;
  best.wall_time_s = seconds_since(start);
  return best;
}

void validate_schedule(const SASchedule& s, std::size_t dims) {
  if (!(s.t_min > 0.0) || !(s.t0 > s.t_min) || !std::isfinite(s.t0)) {
    throw Error(ErrorCode::kConfiguration, "annealing schedule needs t0 > t_min > 0");
  }
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw Error(ErrorCode::kConfiguration, "cooling factor must lie in (0, 1)");
  if (s.steps_per_temp == 0) throw Error(ErrorCode::kConfiguration, "steps_per_temp must be positive");
  if (s.step_scale.size() != dims) {
    throw Error(ErrorCode::kConfiguration, "step_scale has " + std::to_string(s.step_scale.size()) +
                                               " entries for a " + std::to_string(dims) + "-dimensional box");
  }
  for (double w : s.step_scale) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::kConfiguration, "step_scale entries must be positive");
  }
}

OptimResult simulated_annealing(const Objective& obj, const Box& box, const SASchedule& schedule) {
  validate_box(box);
  validate_schedule(schedule, box.size());
  const auto start = Clock::now();
  const std::size_t k = box.size();
  Pcg32 rng(schedule.seed);
  OptimResult result;

  std::vector<double> current(k);
  for (std::size_t i = 0; i < k; ++i) current[i] = rng.uniform(box[i].lo, box[i].hi);
  double f_current = checked(obj(current));
  result.evaluations = 1;
  std::vector<double> best = current;
  double f_best = f_current;
  result.trace.push_back({0, f_best});

  std::vector<double> proposal(k);
  double temperature = schedule.t0;
  std::size_t level = 0;
  while (temperature > schedule.t_min) {
    const double shrink = temperature / schedule.t0;
    for (std::size_t step = 0; step < schedule.steps_per_temp; ++step) {
      for (std::size_t i = 0; i < k; ++i) {
        proposal[i] = fold_into(current[i] + schedule.step_scale[i] * shrink * rng.normal(), box[i]);
      }
      const double f_proposal = checked(obj(proposal));
      ++result.evaluations;
      const double delta = f_proposal - f_current;
      bool accept = delta >= 0.0;
      if (!accept && rng.uniform() < std::exp(delta / temperature)) {
        accept = true;
        ++result.downhill_accepts;
      }
      if (accept) {
        current.swap(proposal);
        f_current = f_proposal;
        if (f_current > f_best) {
          f_best = f_current;
          best = current;
        }
      }
    }
    ++level;
    result.trace.push_back({level, f_best});
    temperature *= schedule.alpha;
  }

  result.x = std::move(best);
  result.value = f_best;
  result.iterations = result.trace.size();
  result.wall_time_s = seconds_since(start);
  return result;
}

std::vector<double> grid_axis(const Interval& interval, std::size_t n) {
  std::vector<double> values(n);
  const double width = interval.hi - interval.lo;
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = interval.periodic ? interval.lo + width * static_cast<double>(i) / static_cast<double>(n)
                                  : interval.lo + width * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (!interval.periodic) values.back() = interval.hi;
  return values;
}

GridResult grid_search(const Objective& obj, const Box& box, std::span<const std::size_t> resolution,
                       bool keep_surface) {
  validate_box(box);
  if (resolution.size() != box.size()) {
    throw Error(ErrorCode::kConfiguration, "grid resolution must give one count per axis");
  }
  double total = 1.0;
  for (auto n : resolution) {
    if (n < 2) throw Error(ErrorCode::kConfiguration, "grid resolution must be at least 2 per axis");
    total *= static_cast<double>(n);
  }
  if (total > kMaxGridPoints) {
    throw Error(ErrorCode::kTooLargeGrid, "grid of " + std::to_string(total) + " points exceeds the 1e8 limit");
  }
  const auto start = Clock::now();
  const std::size_t k = box.size();
  GridResult out;
  for (std::size_t i = 0; i < k; ++i) out.axes.push_back(grid_axis(box[i], resolution[i]));
  const auto count = static_cast<std::size_t>(total);
  if (keep_surface) out.surface.reserve(count);

  std::vector<std::size_t> index(k, 0);
  std::vector<double> x(k);
  bool have_best = false;
  for (std::size_t flat = 0; flat < count; ++flat) {
    for (std::size_t i = 0; i < k; ++i) x[i] = out.axes[i][index[i]];
    const double v = checked(obj(x));
    if (keep_surface) out.surface.push_back(v);
    if (!have_best || v > out.best.value) {
      out.best.value = v;
      out.best.x = x;
      have_best = true;
    }
    for (std::size_t i = k; i-- > 0;) {
      if (++index[i] < resolution[i]) break;
      index[i] = 0;
    }
  }
  out.best.evaluations = count;
  out.best.iterations = 1;
  out.best.trace.push_back({0, out.best.value});
  out.best.wall_time_s = seconds_since(start);
  return out;
}

}  // namespace stripefit
