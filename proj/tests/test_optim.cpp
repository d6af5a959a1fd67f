#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "stripefit/error.hpp"
#include "stripefit/geometry.hpp"
#include "stripefit/optim.hpp"

using namespace stripefit;

namespace {

double parabola(std::span<const double> x) { return -(x[0] - 3.0) * (x[0] - 3.0); }

// Maxima near -0.05 (global on [-pi, 3 pi]) and near 2 pi - 0.05 (local).
double tilted_cos(std::span<const double> x) { return std::cos(x[0]) - 0.05 * x[0]; }

double bumpy(std::span<const double> x) { return std::sin(5.0 * x[0]) + 0.5 * std::sin(x[0]); }

SASchedule schedule_1d(std::uint64_t seed) {
  SASchedule s;
  s.step_scale = {1.0};
  s.seed = seed;
  return s;
}

void expect_same(const OptimResult& a, const OptimResult& b) {
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
  EXPECT_EQ(a.iterations, b.iterations);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].best_value, b.trace[i].best_value);
}

void expect_monotone_trace(const OptimResult& r) {
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i].best_value, r.trace[i - 1].best_value);
}

}  // namespace

TEST(FoldInto, WrapAndReflect) {
  const Interval per{0.0, 360.0, true};
  EXPECT_DOUBLE_EQ(fold_into(370.0, per), 10.0);
  EXPECT_DOUBLE_EQ(fold_into(-10.0, per), 350.0);
  EXPECT_DOUBLE_EQ(fold_into(360.0, per), 0.0);
  const Interval lin{0.5, 10.0, false};
  EXPECT_DOUBLE_EQ(fold_into(0.25, lin), 0.75);
  EXPECT_DOUBLE_EQ(fold_into(11.0, lin), 9.0);
  EXPECT_DOUBLE_EQ(fold_into(5.0, lin), 5.0);
  EXPECT_GE(fold_into(-100.0, lin), 0.5);
  EXPECT_LE(fold_into(100.0, lin), 10.0);
}

TEST(NelderMead, Parabola1D) {
  const double x0[] = {0.0};
  const OptimResult r = nelder_mead(parabola, x0, {});
  EXPECT_NEAR(r.x[0], 3.0, 1e-6);
  EXPECT_NEAR(r.value, 0.0, 1e-10);
  EXPECT_DOUBLE_EQ(r.value, parabola(r.x));
  EXPECT_GE(r.evaluations, 1u);
  EXPECT_EQ(r.iterations, r.trace.size());
  expect_monotone_trace(r);
}

TEST(NelderMead, Paraboloid2D) {
  const double x0[] = {0.0, 0.0};
  const OptimResult r = nelder_mead(
      [](std::span<const double> x) { return -((x[0] - 1.0) * (x[0] - 1.0) + (x[1] + 2.0) * (x[1] + 2.0)); }, x0,
      {});
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], -2.0, 1e-6);
}

TEST(NelderMead, StaysInLocalMaximum) {
  // Dense grid over [-pi, 3 pi] locates both maxima independently.
  double global_x = 0.0, global_v = -1e300, local_x = 0.0, local_v = -1e300;
  for (int i = 0; i <= 400000; ++i) {
    const double x = -kPi + 4.0 * kPi * i / 400000.0;
    const double v = tilted_cos(std::span<const double>(&x, 1));
    if (x < kPi && v > global_v) {
      global_v = v;
      global_x = x;
    }
    if (x >= kPi && v > local_v) {
      local_v = v;
      local_x = x;
    }
  }
  ASSERT_GT(global_v, local_v);

  const double x0[] = {5.0};
  const OptimResult r = nelder_mead(tilted_cos, x0, {});
  EXPECT_NEAR(r.x[0], local_x, 1e-4);
  EXPECT_LT(r.value, global_v - 0.1);

  const OptimResult m = nm_multistart(tilted_cos, {{0.0}, {5.0}}, {});
  EXPECT_NEAR(m.x[0], global_x, 1e-4);
  EXPECT_NEAR(m.value, global_v, 1e-9);
}

TEST(NelderMead, NonFiniteObjectiveRejected) {
  const double x0[] = {0.0};
  try {
    nelder_mead([](std::span<const double> x) { return x[0] > 0.5 ? std::nan("") : x[0]; }, x0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteObjective);
  }
}

TEST(NelderMead, MaxIterRespected) {
  const double x0[] = {0.0, 0.0};
  NelderMeadOptions opt;
  opt.max_iter = 5;
  const OptimResult r = nelder_mead([](std::span<const double> x) { return -x[0] * x[0] - x[1] * x[1]; }, x0, opt);
  EXPECT_EQ(r.iterations, 6u);
}

TEST(NmMultistart, SingleStartMatchesNelderMead) {
  const double x0[] = {0.7};
  const OptimResult a = nelder_mead(tilted_cos, x0, {});
  const OptimResult b = nm_multistart(tilted_cos, {{0.7}}, {});
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(NmMultistart, DeterministicAndAggregated) {
  const std::vector<std::vector<double>> starts{{0.0}, {2.0}, {5.0}, {9.0}};
  const OptimResult a = nm_multistart(tilted_cos, starts, {});
  const OptimResult b = nm_multistart(tilted_cos, starts, {});
  expect_same(a, b);
  std::size_t evals = 0;
  for (const auto& s : starts) evals += nelder_mead(tilted_cos, s, {}).evaluations;
  EXPECT_EQ(a.evaluations, evals);
}

TEST(NmMultistart, EmptyStartsRejected) {
  try {
    nm_multistart(tilted_cos, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(SimulatedAnnealing, Parabola) {
  const OptimResult r = simulated_annealing(parabola, {{0.0, 10.0, false}}, schedule_1d(42));
  EXPECT_NEAR(r.x[0], 3.0, 1e-3);
  EXPECT_DOUBLE_EQ(r.value, parabola(r.x));
  expect_monotone_trace(r);
}

TEST(SimulatedAnnealing, SeededDeterminism) {
  const Box box{{0.0, 10.0, false}};
  expect_same(simulated_annealing(bumpy, box, schedule_1d(7)), simulated_annealing(bumpy, box, schedule_1d(7)));
  EXPECT_NE(simulated_annealing(bumpy, box, schedule_1d(7)).x, simulated_annealing(bumpy, box, schedule_1d(8)).x);
}

TEST(SimulatedAnnealing, MultimodalGlobalMaximum) {
  double global = -1e300;
  for (int i = 0; i < 1000000; ++i) {
    const double x = kTwoPi * i / 1000000.0;
    global = std::max(global, bumpy(std::span<const double>(&x, 1)));
  }
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const OptimResult r = simulated_annealing(bumpy, {{0.0, kTwoPi, false}}, schedule_1d(seed));
    if (r.value >= global - 1e-3) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(SimulatedAnnealing, ColdLimitNeverGoesDownhill) {
  SASchedule s = schedule_1d(3);
  s.t_min = 1e-12;
  s.t0 = s.t_min * (1.0 + 1e-9);
  s.steps_per_temp = 5000;
  const OptimResult r = simulated_annealing(bumpy, {{0.0, kTwoPi, false}}, s);
  EXPECT_EQ(r.downhill_accepts, 0u);
  EXPECT_EQ(r.evaluations, 5001u);

  // The default schedule does accept worse moves on the same objective.
  EXPECT_GT(simulated_annealing(bumpy, {{0.0, kTwoPi, false}}, schedule_1d(3)).downhill_accepts, 0u);
}

TEST(SimulatedAnnealing, PeriodicAxisWraps) {
  // Maximum sits on the seam of a periodic axis.
  const OptimResult r = simulated_annealing([](std::span<const double> x) { return std::cos(deg_to_rad(x[0])); },
                                            {{0.0, 360.0, true}}, [] {
                                              SASchedule s;
                                              s.step_scale = {30.0};
                                              s.seed = 5;
                                              return s;
                                            }());
  EXPECT_GT(r.value, 1.0 - 1e-6);
  EXPECT_GE(r.x[0], 0.0);
  EXPECT_LT(r.x[0], 360.0);
}

TEST(SimulatedAnnealing, InvalidScheduleRejected) {
  const Box box{{0.0, 1.0, false}};
  auto code = [&](SASchedule s) {
    try {
      simulated_annealing(parabola, box, s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  SASchedule s = schedule_1d(0);
  s.alpha = 1.0;
  EXPECT_EQ(code(s), ErrorCode::kConfiguration);
  s = schedule_1d(0);
  s.t0 = s.t_min;
  EXPECT_EQ(code(s), ErrorCode::kConfiguration);
  s = schedule_1d(0);
  s.step_scale = {};
  EXPECT_EQ(code(s), ErrorCode::kConfiguration);
  s = schedule_1d(0);
  s.steps_per_temp = 0;
  EXPECT_EQ(code(s), ErrorCode::kConfiguration);
}

TEST(GridSearch, ConstantObjectivePicksFirstPoint) {
  const std::size_t res[] = {5, 4};
  const GridResult g = grid_search([](std::span<const double>) { return 1.0; },
                                   {{0.0, 180.0, true}, {1.0, 2.0, false}}, res, false);
  EXPECT_EQ(g.best.x, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(g.best.evaluations, 20u);
}

TEST(GridSearch, AxesPeriodicAndInclusive) {
  EXPECT_EQ(grid_axis({0.0, 180.0, true}, 4), (std::vector<double>{0.0, 45.0, 90.0, 135.0}));
  EXPECT_EQ(grid_axis({1.0, 2.0, false}, 3), (std::vector<double>{1.0, 1.5, 2.0}));
}

TEST(GridSearch, UniqueMaximumAtNode) {
  const std::size_t res[] = {11, 11};
  const GridResult g = grid_search(
      [](std::span<const double> x) { return -std::abs(x[0] - 0.3) - std::abs(x[1] - 0.7); },
      {{0.0, 1.0, false}, {0.0, 1.0, false}}, res, true);
  EXPECT_NEAR(g.best.x[0], 0.3, 1e-12);
  EXPECT_NEAR(g.best.x[1], 0.7, 1e-12);
  ASSERT_EQ(g.surface.size(), 121u);
  for (double v : g.surface) EXPECT_LE(v, g.best.value);
}

TEST(GridSearch, TiesGoLexicographicallyFirst) {
  const std::size_t res[] = {4, 4};
  // Equal maxima at (0.5, 1/3) and (0.25, 1): the smaller first coordinate wins.
  const GridResult g = grid_search(
      [](std::span<const double> x) {
        if (std::abs(x[0] - 0.5) < 1e-9 && std::abs(x[1] - 1.0 / 3.0) < 1e-9) return 1.0;
        if (std::abs(x[0] - 0.25) < 1e-9 && std::abs(x[1] - 1.0) < 1e-9) return 1.0;
        return 0.0;
      },
      {{0.0, 1.0, true}, {0.0, 1.0, false}}, res, false);
  EXPECT_DOUBLE_EQ(g.best.x[0], 0.25);
  EXPECT_DOUBLE_EQ(g.best.x[1], 1.0);
}

TEST(GridSearch, GuardsAgainstHugeGrids) {
  const std::size_t res[] = {10000, 10001};
  try {
    grid_search(parabola, {{0.0, 1.0, false}, {0.0, 1.0, false}}, res, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLargeGrid);
  }
  const std::size_t tiny[] = {1};
  EXPECT_THROW(grid_search(parabola, {{0.0, 1.0, false}}, tiny, false), Error);
}
