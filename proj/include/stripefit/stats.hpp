#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stripefit/patternfit.hpp"

namespace stripefit {

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double reg_inc_beta(double x, double a, double b);

/// P(F > f) for F ~ F(d1, d2).
double f_upper_tail(double f, double d1, double d2);

/// P(|T| >= |t|) for T ~ Student-t(df).
double t_two_sided(double t, double df);

struct AnovaReport {
  double f_stat = 0.0;
  int df_between = 0;
  int df_within = 0;
  double p_value = 1.0;
  double eta_sq = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
};

AnovaReport one_way_anova(const std::vector<std::vector<double>>& groups);

struct TTestReport {
  double t_stat = 0.0;
  int df = 0;
  double p_value = 1.0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
};

TTestReport one_sample_ttest(std::span<const double> sample, double mu0);

/// Pooled-variance two-sample t statistic (for two groups F = t^2).
double pooled_t_statistic(std::span<const double> a, std::span<const double> b);

inline constexpr double kDefaultAlpha = 0.05;

struct StrategyPair {
  Strategy first;
  Strategy second;
};

std::string to_string(const StrategyPair& pair);  // "square+nm vs square+sa"

/// (sine+nm, sine+sa) and (square+nm, square+sa).
std::vector<StrategyPair> default_pairs();

struct PairComparison {
  double crossing_angle_deg = 0.0;
  StrategyPair pair;
  std::size_t n_first = 0;
  std::size_t n_second = 0;
  double mean_first = 0.0;  // mean of C = 2 c_norm
  double mean_second = 0.0;
  std::optional<AnovaReport> anova;
  std::string error;  // set when anova is empty
  bool significant = false;
};

/// One ANOVA on C per angle and pair. Throws kIncompleteTable when a pair
/// has no successful rows at some angle of the table.
std::vector<PairComparison> strategy_comparison(const StrategyTable& table,
                                                const std::vector<StrategyPair>& pairs = default_pairs(),
                                                double alpha = kDefaultAlpha);

struct NormalTestCell {
  double crossing_angle_deg = 0.0;
  Strategy strategy;
  std::size_t n = 0;
  double mean_gamma_deg = 0.0;
  std::optional<TTestReport> report;
  std::string error;
  bool significant = false;
};

/// t-test of gamma against mu0 for every (angle, strategy) cell present in
/// the table. Failing cells keep their error and the others still run.
std::vector<NormalTestCell> bisector_normal_test(const StrategyTable& table, double alpha = kDefaultAlpha,
                                                 double mu0_deg = 90.0);

/// Linear-interpolation quantile (type 7); the input need not be sorted.
double quantile(std::vector<double> values, double q);

struct QuantileRow {
  double crossing_angle_deg = 0.0;  // NaN for rows pooled over angles
  Strategy strategy;
  std::string metric;
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Per (angle, strategy) five-number summaries of gamma, lambda and C.
std::vector<QuantileRow> boxplot_quantiles(const StrategyTable& table);

/// Per strategy five-number summaries of wall time, pooled over angles.
std::vector<QuantileRow> timing_quantiles(const StrategyTable& table);

void write_anova_csv(const std::vector<PairComparison>& rows, std::ostream& out);
void write_ttest_csv(const std::vector<NormalTestCell>& rows, std::ostream& out);
void write_quantiles_csv(const std::vector<QuantileRow>& rows, std::ostream& out);

/// Angle rows by pair/strategy columns; an asterisk marks p < alpha.
std::string render_tables(const std::vector<PairComparison>& anova, const std::vector<NormalTestCell>& ttests);

}  // namespace stripefit
